/*
 Copyright 2026 The SPC Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "spc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace spc {

void BenchConfig::validate() const {
    if (!(dt > 0)) throw ContractError("dt must be positive");
    if (horizon < 1) throw ContractError("horizon must be at least 1");
    if (seeds.empty()) throw ContractError("seed list is empty");
    if (!(mass > 0)) throw ContractError("mass must be positive");
    if (reference.phase_seconds.size() != 3) throw ContractError("reference needs three phases");
    for (const auto& m : methods)
        if (m != "TPC" && m != "CW-Reg" && m != "DiffCtrl" && m != "F-SPC" && m != "U-SPC")
            throw ContractError("unknown method " + m);
    if (model_id != "pointmass-wind") throw ContractError("the benchmark requires the pointmass-wind model");
    if (data.trajectories < 2 || data.length < 1) throw ContractError("data collection is too small");
}

namespace {

Eigen::Vector3d vec3(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) throw ContractError("expected a 3-vector");
    return {v[0], v[1], v[2]};
}

std::vector<double> std_vec(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

}  // namespace

BenchConfig bench_config_from_json(const nlohmann::json& j) {
    BenchConfig c;
    c.model_id = j.value("model", c.model_id);
    if (j.contains("reference")) {
        const auto& r = j["reference"];
        c.reference.radius = r.value("radius", c.reference.radius);
        c.reference.sway = r.value("sway", c.reference.sway);
        c.reference.depth = r.value("depth", c.reference.depth);
        c.reference.figure8_x = r.value("figure8_x", c.reference.figure8_x);
        c.reference.figure8_y = r.value("figure8_y", c.reference.figure8_y);
        c.reference.phase_seconds = r.value("phase_seconds", c.reference.phase_seconds);
    }
    if (j.contains("wind")) {
        const auto& w = j["wind"];
        if (w.contains("steady")) c.wind.steady = vec3(w["steady"]);
        if (w.contains("amplitude")) c.wind.amplitude = vec3(w["amplitude"]);
        if (w.contains("frequency")) c.wind.frequency = vec3(w["frequency"]);
        if (w.contains("phase")) c.wind.phase = vec3(w["phase"]);
    }
    c.horizon = j.value("horizon", c.horizon);
    c.dt = j.value("dt", c.dt);
    c.episode_seconds = j.value("episode_seconds", c.episode_seconds);
    c.methods = j.value("methods", c.methods);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("cwreg_lambda")) {
        const auto& l = j["cwreg_lambda"];
        c.cwreg_lambdas = l.is_array() ? l.get<std::vector<double>>() : std::vector<double>{l.get<double>()};
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("truth")) {
        const auto& t = j["truth"];
        c.mass = t.value("mass", c.mass);
        if (t.contains("drag_linear")) c.drag_linear = vec3(t["drag_linear"]);
        if (t.contains("drag_quadratic")) c.drag_quadratic = vec3(t["drag_quadratic"]);
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.data.trajectories = d.value("trajectories", c.data.trajectories);
        c.data.length = d.value("length", c.data.length);
        c.data.kp = d.value("kp", c.data.kp);
        c.data.kd = d.value("kd", c.data.kd);
        c.data.control_noise = d.value("control_noise", c.data.control_noise);
        c.data.setpoint_range = d.value("setpoint_range", c.data.setpoint_range);
        c.data.train_fraction = d.value("train_fraction", c.data.train_fraction);
    }
    if (j.contains("cost")) {
        const auto& q = j["cost"];
        c.q_position = q.value("q_position", c.q_position);
        c.q_velocity = q.value("q_velocity", c.q_velocity);
        c.r_control = q.value("r", c.r_control);
    }
    if (j.contains("spc")) {
        const auto& s = j["spc"];
        c.spc_iters = s.value("iters", c.spc_iters);
        c.tau = s.value("tau", c.tau);
        if (s.contains("eta")) c.eta = s["eta"].is_string() ? 0.0 : s["eta"].get<double>();
        c.lipschitz_samples = s.value("lipschitz_samples", c.lipschitz_samples);
        c.theta_emp_from_tpc = s.value("theta_emp", std::string("eq7")) == "tpc";
    }
    c.validate();
    return c;
}

nlohmann::json bench_config_to_json(const BenchConfig& c) {
    nlohmann::json j;
    j["model"] = c.model_id;
    j["reference"] = {{"radius", c.reference.radius},       {"sway", c.reference.sway},
                      {"depth", c.reference.depth},         {"figure8_x", c.reference.figure8_x},
                      {"figure8_y", c.reference.figure8_y}, {"phase_seconds", c.reference.phase_seconds}};
    j["wind"] = {{"steady", std_vec(c.wind.steady)},
                 {"amplitude", std_vec(c.wind.amplitude)},
                 {"frequency", std_vec(c.wind.frequency)},
                 {"phase", std_vec(c.wind.phase)}};
    j["horizon"] = c.horizon;
    j["dt"] = c.dt;
    j["episode_seconds"] = c.episode_seconds;
    j["methods"] = c.methods;
    j["seeds"] = c.seeds;
    j["cwreg_lambda"] = c.cwreg_lambdas;
    j["output_dir"] = c.output_dir;
    j["truth"] = {{"mass", c.mass},
                  {"drag_linear", std_vec(c.drag_linear)},
                  {"drag_quadratic", std_vec(c.drag_quadratic)}};
    j["data"] = {{"trajectories", c.data.trajectories}, {"length", c.data.length},
                 {"kp", c.data.kp},                     {"kd", c.data.kd},
                 {"control_noise", c.data.control_noise}, {"setpoint_range", c.data.setpoint_range},
                 {"train_fraction", c.data.train_fraction}};
    j["cost"] = {{"q_position", c.q_position}, {"q_velocity", c.q_velocity}, {"r", c.r_control}};
    j["spc"] = {{"iters", c.spc_iters},
                {"tau", c.tau},
                {"lipschitz_samples", c.lipschitz_samples},
                {"theta_emp", c.theta_emp_from_tpc ? "tpc" : "eq7"}};
    if (c.eta > 0)
        j["spc"]["eta"] = c.eta;
    else
        j["spc"]["eta"] = "auto";
    return j;
}

BenchConfig load_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open config " + path);
    return bench_config_from_json(nlohmann::json::parse(in));
}

void reference_at(const ReferenceSpec& spec, double t, Eigen::Vector3d& pos, Eigen::Vector3d& vel) {
    constexpr double pi = std::numbers::pi;
    const double T1 = spec.phase_seconds[0], T2 = spec.phase_seconds[1], T3 = spec.phase_seconds[2];
    const Eigen::Vector3d E1(-spec.radius, 0.0, 0.0);
    const Eigen::Vector3d E2 = E1 + Eigen::Vector3d(0.0, 0.0, -spec.depth);
    if (t < T1) {
        const double s = t / T1, w = pi / T1;
        pos << spec.radius * std::cos(pi * s), spec.radius * std::sin(pi * s), 0.0;
        vel << -spec.radius * w * std::sin(pi * s), spec.radius * w * std::cos(pi * s), 0.0;
    } else if (t < T1 + T2) {
        const double s = (t - T1) / T2;
        pos = E1 + Eigen::Vector3d(0.0, spec.sway * std::sin(2 * pi * s), -spec.depth * (1 - std::cos(pi * s)) / 2);
        vel << 0.0, spec.sway * 2 * pi / T2 * std::cos(2 * pi * s), -spec.depth * pi / T2 * std::sin(pi * s) / 2;
    } else {
        const double s = std::min((t - T1 - T2) / T3, 1.0);
        pos = E2 + Eigen::Vector3d(spec.figure8_x * std::sin(2 * pi * s), spec.figure8_y * std::sin(4 * pi * s), 0.0);
        vel << spec.figure8_x * 2 * pi / T3 * std::cos(2 * pi * s), spec.figure8_y * 4 * pi / T3 * std::cos(4 * pi * s),
            0.0;
    }
}

Reference generate_reference(const BenchConfig& cfg) {
    const int S = static_cast<int>(std::lround(cfg.episode_seconds / cfg.dt));
    Reference ref{Mat(3, S), Mat(3, S)};
    Eigen::Vector3d p, v;
    for (int k = 0; k < S; ++k) {
        reference_at(cfg.reference, k * cfg.dt, p, v);
        ref.position.col(k) = p;
        ref.velocity.col(k) = v;
    }
    return ref;
}

PointMassTruth make_truth(const BenchConfig& cfg) {
    PointMassTruth truth;
    truth.dt = cfg.dt;
    truth.mass = cfg.mass;
    truth.drag_linear = cfg.drag_linear;
    truth.drag_quadratic = cfg.drag_quadratic;
    truth.wind = cfg.wind;
    return truth;
}

CostMatrices bench_cost(const BenchConfig& cfg) {
    Vec q(6);
    q << Vec::Constant(3, cfg.q_position), Vec::Constant(3, cfg.q_velocity);
    const Mat Q = q.asDiagonal();
    return CostMatrices(Q, cfg.r_control * Mat::Identity(3, 3), Q);
}

Dataset generate_dataset(const BenchConfig& cfg, std::uint64_t seed) {
    const auto truth = make_truth(cfg);
    const auto& dc = cfg.data;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Dataset data;
    data.dt = cfg.dt;
    data.seed = seed;
    Vec x = Vec::Zero(6);
    Eigen::Vector3d setpoint = Eigen::Vector3d::Zero();
    int k = 0;
    for (int i = 0; i < dc.trajectories; ++i) {
        for (int a = 0; a < 3; ++a) setpoint(a) = dc.setpoint_range * unif(rng);
        RecordedTrajectory tr{Mat(6, dc.length + 1), Mat(3, dc.length)};
        tr.X.col(0) = x;
        for (int t = 0; t < dc.length; ++t, ++k) {
            Vec u(3);
            for (int a = 0; a < 3; ++a)
                u(a) = -dc.kp * (x(a) - setpoint(a)) - dc.kd * x(3 + a) + dc.control_noise * nd(rng);
            tr.U.col(t) = u;
            x = truth.step(x, u, k);
            tr.X.col(t + 1) = x;
        }
        data.trajectories.push_back(std::move(tr));
    }
    split_dataset(data, seed, dc.train_fraction);
    return data;
}

namespace {

// Least-squares control that maps r_t to r_{t+1} under the model.
Vec feedforward(const ModelSpec& model, const Vec& r, const Vec& r_next, const Vec& theta, Mat& A, Mat& B,
                Mat& C) {
    Vec u = Vec::Zero(model.m);
    for (int it = 0; it < 2; ++it) {
        model.jacobians(r, u, theta, A, B, C);
        const Vec res = r_next - model.f(r, u, theta);
        u += B.colPivHouseholderQr().solve(res);
    }
    return u;
}

}  // namespace

ClosedLoopResult closed_loop_rollout(const PointMassTruth& truth, const ModelSpec& model,
                                     const Vec& controller_theta, const Reference& ref,
                                     const CostMatrices& cost, int horizon) {
    if (model.n != 6 || model.m != 3) throw ContractError("closed loop expects the point-mass model");
    const int S = ref.samples();
    const int n = 6, m = 3;
    auto ref_state = [&](int k) {
        Vec r(6);
        r << ref.position.col(k), ref.velocity.col(k);
        return r;
    };
    ClosedLoopResult out{Mat(n, S), Mat(m, S - 1)};
    Vec x = ref_state(0);
    out.X.col(0) = x;
    Mat A(n, n), B(n, m), C(n, model.p);
    std::vector<Mat> As, Bs;
    std::vector<Vec> ds, uffs;
    double sq_err = 0.0;
    for (int k = 0; k + 1 < S; ++k) {
        const int N = std::min(horizon, S - 1 - k);
        As.resize(N);
        Bs.resize(N);
        ds.resize(N);
        uffs.resize(N);
        for (int t = 0; t < N; ++t) {
            const Vec r = ref_state(k + t), rn = ref_state(k + t + 1);
            uffs[t] = feedforward(model, r, rn, controller_theta, A, B, C);
            model.jacobians(r, uffs[t], controller_theta, A, B, C);
            As[t] = A;
            Bs[t] = B;
            ds[t] = model.f(r, uffs[t], controller_theta) - rn;
        }
        // backward Riccati recursion with the affine term d_t
        Mat S_ = cost.P;
        Vec s_ = Vec::Zero(n);
        Mat K0;
        Vec k0;
        for (int t = N - 1; t >= 0; --t) {
            const Vec Sd = S_ * ds[t] + s_;
            const Mat Quu = cost.R + Bs[t].transpose() * S_ * Bs[t];
            const Mat Qux = Bs[t].transpose() * S_ * As[t];
            const Vec qu = Bs[t].transpose() * Sd;
            Eigen::LLT<Mat> llt(Quu);
            const Mat K = llt.solve(Qux);
            const Vec kk = llt.solve(qu);
            s_ = As[t].transpose() * Sd - Qux.transpose() * kk;
            S_ = cost.Q + As[t].transpose() * S_ * As[t] - Qux.transpose() * K;
            S_ = 0.5 * (S_ + S_.transpose()).eval();
            if (t == 0) {
                K0 = K;
                k0 = kk;
            }
        }
        const Vec e = x - ref_state(k);
        const Vec u = uffs[0] - K0 * e - k0;
        out.U.col(k) = u;

        // stage cost in error coordinates; the control is measured from the inertial feedforward
        const Vec du = u - truth.mass * (ref.velocity.col(k + 1) - ref.velocity.col(k)) / truth.dt;
        out.cost += e.dot(cost.Q * e) + du.dot(cost.R * du);
        out.effort += u.squaredNorm();
        sq_err += (x.head(3) - ref.position.col(k)).squaredNorm();

        x = truth.step(x, u, k);
        out.X.col(k + 1) = x;
    }
    const Vec eT = x - ref_state(S - 1);
    out.cost += eT.dot(cost.P * eT);
    sq_err += (x.head(3) - ref.position.col(S - 1)).squaredNorm();
    out.rmse = std::sqrt(sq_err / S);
    return out;
}

Vec run_baseline_cwreg(const Dataset& data, const ModelSpec& model, const Box& box, double lambda,
                       const ScenarioSet& set, const BoxMinimizeConfig& cfg) {
    if (lambda < 0) throw ContractError("lambda must be nonnegative");
    if (model.p == 0) throw DegenerateError("model has no free parameters (p = 0)");
    std::vector<Vec> recorded;
    for (const auto& s : set.scenarios) {
        const auto& U = data.trajectories.at(s.id).U;
        recorded.push_back(Eigen::Map<const Vec>(U.data(), U.size()));
    }
    auto control_term = [&](const Vec& th, Vec* g) {
        double v = 0.0;
        if (g) g->setZero(model.p);
        for (int i = 0; i < set.size(); ++i) {
            if (g) {
                const auto sg = scenario_gradients(set, i, recorded[i], th);
                v += sg.value;
                *g += sg.grad_theta;
            } else {
                v += scenario_objective(set, i, recorded[i], th);
            }
        }
        if (g) *g /= set.size();
        return v / set.size();
    };
    auto obj = [&](const Vec& th, Vec* g, Mat* H) {
        Vec gp, gc;
        Mat Hp;
        double v = prediction_loss(data, data.train, model, th, g ? &gp : nullptr, H ? &Hp : nullptr);
        if (lambda == 0.0) {
            if (g) *g = gp;
            if (H) *H = Hp;
            return v;
        }
        v += lambda * control_term(th, g ? &gc : nullptr);
        if (g) *g = gp + lambda * gc;
        if (H) {
            // curvature of the control term by central differences of its gradient, clipped to PSD
            Mat Hc(model.p, model.p);
            const double h = fd_step(th);
            Vec tp = th, tm = th, gpk(model.p), gmk(model.p);
            for (int k = 0; k < model.p; ++k) {
                tp(k) += h;
                tm(k) -= h;
                control_term(tp, &gpk);
                control_term(tm, &gmk);
                Hc.col(k) = (gpk - gmk) / (2 * h);
                tp(k) = th(k);
                tm(k) = th(k);
            }
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hc + Hc.transpose()));
            const Mat Hpsd = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                             es.eigenvectors().transpose();
            *H = Hp + lambda * Hpsd;
        }
        return v;
    };
    return box_minimize(obj, 0.5 * (box.lo + box.hi), box, cfg).theta;
}

DiffCtrlResult run_baseline_diffctrl(const ScenarioSet& set, const Vec& theta_tpc, const Box& box, double eta,
                                     int iters, const SolverConfig& solver) {
    if (!(eta > 0)) throw ContractError("step size must be positive");
    DiffCtrlResult res;
    res.theta = theta_tpc;
    std::vector<Vec> warm;
    for (int k = 0; k <= iters; ++k) {
        Vec g = Vec::Zero(set.model.p);
        const bool use_warm = static_cast<int>(warm.size()) == set.size();
        std::vector<Vec> next_warm;
        for (int i = 0; i < set.size(); ++i) {
            const auto rep = solve_optimal_control(set, i, res.theta, solver, use_warm ? &warm[i] : nullptr);
            const auto ev = scenario_gradients(set, i, rep.U, theta_tpc);
            const Mat DU = optimizer_jacobian(set, i, rep.U, res.theta, solver.mu_floor);
            g += DU.transpose() * ev.grad_U;
            next_warm.push_back(rep.U);
        }
        warm = std::move(next_warm);
        g /= set.size();
        const Vec G = gradient_mapping(res.theta, g, eta, box);
        res.final_gradient_norm = G.norm();
        if (k == iters || G.norm() <= 1e-8) break;
        res.theta = project_theta(res.theta - eta * g, box);
        res.iterations = k + 1;
    }
    return res;
}

namespace {

void write_trajectory_csv(const std::string& path, const ClosedLoopResult& cl, const Reference& ref, double dt) {
    std::ofstream os(path);
    os << std::setprecision(17) << "k,t,px,py,pz,vx,vy,vz,rx,ry,rz,ux,uy,uz\n";
    for (int k = 0; k < cl.X.cols(); ++k) {
        os << k << "," << k * dt;
        for (int a = 0; a < 6; ++a) os << "," << cl.X(a, k);
        for (int a = 0; a < 3; ++a) os << "," << ref.position(a, k);
        for (int a = 0; a < 3; ++a) {
            os << ",";
            if (k < cl.U.cols()) os << cl.U(a, k);
        }
        os << "\n";
    }
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream os(path);
    os << std::setprecision(17)
       << "method,seed,status,rmse,closed_loop_cost,control_effort,prediction_mse,train_prediction_mse,lambda";
    const int p = rows.empty() ? 0 : static_cast<int>(rows.front().theta.size());
    for (int k = 0; k < p; ++k) os << ",theta" << k;
    os << "\n";
    for (const auto& r : rows) {
        os << r.method << "," << r.seed << "," << r.status << "," << r.rmse << "," << r.cost << "," << r.effort
           << "," << r.prediction_mse << "," << r.train_prediction_mse << "," << r.lambda;
        for (int k = 0; k < p; ++k) {
            os << ",";
            if (k < r.theta.size()) os << r.theta(k);
        }
        os << "\n";
    }
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0};
}

}  // namespace

nlohmann::json summarize(const std::vector<MetricsRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> by;
    for (const auto& r : rows) {
        if (!by.count(r.method)) order.push_back(r.method);
        by[r.method].push_back(&r);
    }
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& name : order) {
        std::vector<double> rm, co, ef, pm;
        int failed = 0;
        for (const auto* r : by[name]) {
            if (r->status != "ok") {
                ++failed;
                continue;
            }
            rm.push_back(r->rmse);
            co.push_back(r->cost);
            ef.push_back(r->effort);
            pm.push_back(r->prediction_mse);
        }
        auto pack = [](const std::vector<double>& v) {
            const auto [m, s] = mean_std(v);
            return nlohmann::json{{"mean", m}, {"std", s}};
        };
        methods[name] = {{"rmse", pack(rm)},           {"closed_loop_cost", pack(co)},
                         {"control_effort", pack(ef)}, {"prediction_mse", pack(pm)},
                         {"runs", rm.size()},           {"failed", failed}};
    }
    nlohmann::json out;
    out["methods"] = methods;
    out["method_order"] = order;
    auto mean_of = [&](const std::string& m, const char* key) -> double {
        return methods.contains(m) ? methods[m][key]["mean"].get<double>() : std::nan("");
    };
    if (methods.contains("TPC") && methods.contains("F-SPC") && methods.contains("U-SPC")) {
        const double t = mean_of("TPC", "rmse"), f = mean_of("F-SPC", "rmse"), u = mean_of("U-SPC", "rmse");
        out["pattern"]["rmse_ordering_u_lt_f_lt_tpc"] = u < f && f < t;
        out["pattern"]["rmse_reduction_u_vs_tpc"] = 1.0 - u / t;
        out["pattern"]["cost_reduction_u_vs_tpc"] =
            1.0 - mean_of("U-SPC", "closed_loop_cost") / mean_of("TPC", "closed_loop_cost");
        std::string best_pred, best_rmse;
        double bp = std::numeric_limits<double>::infinity(), br = bp;
        for (const auto& name : order) {
            if (mean_of(name, "prediction_mse") < bp) bp = mean_of(name, "prediction_mse"), best_pred = name;
            if (mean_of(name, "rmse") < br) br = mean_of(name, "rmse"), best_rmse = name;
        }
        out["pattern"]["min_prediction_mse_method"] = best_pred;
        out["pattern"]["min_rmse_method"] = best_rmse;
    }
    return out;
}

BenchResult run_bench(const BenchConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    const bool write = !cfg.output_dir.empty();
    if (write) fs::create_directories(fs::path(cfg.output_dir) / "trajectories");

    const auto model = make_pointmass_wind_model(cfg.dt, cfg.mass, ThetaLayout::DragWind);
    const Box box = model.box;
    const auto truth = make_truth(cfg);
    const auto ref = generate_reference(cfg);
    const auto cost = bench_cost(cfg);

    BenchResult result;
    for (const auto seed : cfg.seeds) {
        const auto data = generate_dataset(cfg, seed);
        Vec theta_tpc;
        ScenarioSet set;
        Vec theta_emp;
        std::string setup_error;
        try {
            theta_tpc = fit_tpc(data, model, box);
            set = make_scenario_set(data, model, cost, theta_tpc);
            theta_emp = cfg.theta_emp_from_tpc ? theta_tpc : build_theta_emp(set, theta_tpc, box);
        } catch (const std::exception& e) {
            setup_error = e.what();
        }

        SurrogateConfig scfg;
        scfg.iters = cfg.spc_iters;
        scfg.tau = cfg.tau;
        scfg.eta = cfg.eta;
        scfg.lipschitz_samples = cfg.lipschitz_samples;
        scfg.lipschitz_seed = seed + 1000;
        double eta_shared = cfg.eta;

        auto evaluate = [&](const std::string& method, const Vec& theta, double lambda) {
            MetricsRow row;
            row.method = method;
            row.seed = seed;
            row.lambda = lambda;
            row.theta = theta;
            const auto cl = closed_loop_rollout(truth, model, theta, ref, cost, cfg.horizon);
            row.rmse = cl.rmse;
            row.cost = cl.cost;
            row.effort = cl.effort;
            row.prediction_mse = prediction_mse(data, Split::Test, model, theta);
            row.train_prediction_mse = prediction_mse(data, Split::Train, model, theta);
            if (write) {
                std::ostringstream name;
                name << method << "-" << seed << ".csv";
                write_trajectory_csv((fs::path(cfg.output_dir) / "trajectories" / name.str()).string(), cl, ref,
                                     cfg.dt);
            }
            return row;
        };

        for (const auto& method : cfg.methods) {
            MetricsRow row;
            try {
                if (!setup_error.empty()) throw std::runtime_error(setup_error);
                if (method == "TPC") {
                    row = evaluate(method, theta_tpc, 0.0);
                } else if (method == "CW-Reg") {
                    bool have = false;
                    for (double lam : cfg.cwreg_lambdas) {
                        const Vec th = run_baseline_cwreg(data, model, box, lam, set);
                        MetricsRow cand;
                        {
                            const auto cl = closed_loop_rollout(truth, model, th, ref, cost, cfg.horizon);
                            cand.rmse = cl.rmse;
                        }
                        if (!have || cand.rmse < row.rmse) {
                            row = cand;
                            row.theta = th;
                            row.lambda = lam;
                            have = true;
                        }
                    }
                    row = evaluate(method, row.theta, row.lambda);
                } else if (method == "F-SPC" || method == "U-SPC" || method == "DiffCtrl") {
                    if (!(eta_shared > 0)) {
                        const double L = estimate_lipschitz(set, theta_emp, box, cfg.lipschitz_samples,
                                                            scfg.lipschitz_seed, {theta_tpc}, scfg.solver);
                        eta_shared = L > 0 ? 1.0 / L : 1.0;
                    }
                    scfg.eta = eta_shared;
                    Vec th;
                    if (method == "F-SPC") {
                        th = run_spc(set, theta_tpc, theta_emp, box, scfg).theta_final;
                    } else if (method == "U-SPC") {
                        th = run_updated_spc(set, theta_tpc, theta_emp, box, scfg).theta_final;
                    } else {
                        th = run_baseline_diffctrl(set, theta_tpc, box, eta_shared, cfg.spc_iters, scfg.solver).theta;
                    }
                    row = evaluate(method, th, 0.0);
                }
            } catch (const std::exception& e) {
                row = MetricsRow{};
                row.method = method;
                row.seed = seed;
                row.theta = Vec::Constant(model.p, std::nan(""));
                std::string msg = e.what();
                for (auto& ch : msg)
                    if (ch == ',' || ch == '\n') ch = ';';
                row.status = "failed: " + msg;
                result.any_failed = true;
            }
            result.rows.push_back(row);
        }
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.summary = summarize(result.rows);
    result.summary["config"] = bench_config_to_json(cfg);
    result.summary["any_failed"] = result.any_failed;
    result.summary["seconds"] = result.seconds;
    if (write) {
        write_metrics_csv((fs::path(cfg.output_dir) / "metrics.csv").string(), result.rows);
        std::ofstream((fs::path(cfg.output_dir) / "summary.json")) << result.summary.dump(2) << "\n";
    }
    return result;
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) c.push_back(cell);
        if (c.size() < 9) throw ContractError("malformed metrics row");
        MetricsRow r;
        r.method = c[0];
        r.seed = std::stoull(c[1]);
        r.status = c[2];
        r.rmse = std::stod(c[3]);
        r.cost = std::stod(c[4]);
        r.effort = std::stod(c[5]);
        r.prediction_mse = std::stod(c[6]);
        r.train_prediction_mse = std::stod(c[7]);
        r.lambda = std::stod(c[8]);
        r.theta.resize(static_cast<Eigen::Index>(c.size() - 9));
        for (std::size_t k = 9; k < c.size(); ++k) r.theta(k - 9) = c[k].empty() ? std::nan("") : std::stod(c[k]);
        rows.push_back(r);
    }
    return rows;
}

std::string bench_report(const std::vector<MetricsRow>& rows) {
    const auto s = summarize(rows);
    std::ostringstream os;
    os << std::fixed;
    os << "| method | RMSE (m) | closed-loop cost | control effort | prediction MSE | failed |\n";
    os << "|---|---|---|---|---|---|\n";
    for (const auto& name : s["method_order"]) {
        const auto& m = s["methods"][name.get<std::string>()];
        auto cell = [&](const char* key, int prec) {
            std::ostringstream c;
            c << std::fixed << std::setprecision(prec) << m[key]["mean"].get<double>() << " ± " << m[key]["std"].get<double>();
            return c.str();
        };
        os << "| " << name.get<std::string>() << " | " << cell("rmse", 4) << " | " << cell("closed_loop_cost", 2)
           << " | " << cell("control_effort", 1) << " | " << std::scientific << std::setprecision(3)
           << m["prediction_mse"]["mean"].get<double>() << std::fixed << " | " << m["failed"].get<int>() << " |\n";
    }
    return os.str();
}

}  // namespace spc
