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

#include "spc/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace spc {

void DeploymentSet::validate() const {
    if (scenarios.empty()) throw ContractError("deployment set is empty");
    if (theta_true.size() != model.p) throw ContractError("theta_true has wrong dimension");
}

double deployment_metric(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta,
                         const SolverConfig& solver) {
    dep.validate();
    double sum = 0.0;
    for (const auto& s : dep.scenarios) {
        if (s.W.cols() != set.T) throw ContractError("deployment horizon differs from the scenario horizon");
        const auto rep = solve_optimal_control(set, s.x0, theta, solver);
        sum += total_cost(dep.model, dep.cost, s.x0, as_controls(rep.U, set.model.m), dep.theta_true, s.W);
    }
    return sum / dep.scenarios.size();
}

Decomposition decompose(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta,
                        const Vec& theta_emp, const SolverConfig& solver) {
    Decomposition d;
    d.V = deployment_metric(dep, set, theta, solver);
    d.L = evaluate_surrogate(set, theta, theta_emp, solver, nullptr, false).loss;
    d.B = d.V - d.L;
    return d;
}

double bias(const Vec& theta, const Vec& theta_emp, const DeploymentSet& dep, const ScenarioSet& set,
            const SolverConfig& solver) {
    return decompose(dep, set, theta, theta_emp, solver).B;
}

double estimate_bias_lipschitz(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta_emp,
                               const Box& box, int samples, std::uint64_t seed, const SolverConfig& solver) {
    if (samples < 2) throw ContractError("at least two samples are required");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vec> pts;
    std::vector<double> B;
    for (int s = 0; s < samples; ++s) {
        Vec th(box.dim());
        for (int k = 0; k < box.dim(); ++k) th(k) = box.lo(k) + unif(rng) * (box.hi(k) - box.lo(k));
        pts.push_back(th);
        B.push_back(bias(th, theta_emp, dep, set, solver));
    }
    double L = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const double d = (pts[a] - pts[b]).norm();
            if (d > 0) L = std::max(L, std::abs(B[a] - B[b]) / d);
        }
    return 2.0 * L;
}

std::vector<GridRow> grid_sweep(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta_emp,
                                const Box& box, int points_per_axis, const SolverConfig& solver) {
    const int p = box.dim();
    if (p < 1 || p > 2) throw ContractError("grid sweeps support one or two parameters");
    if (points_per_axis < 2) throw ContractError("grid needs at least two points per axis");
    auto coord = [&](int k, int idx) {
        return box.lo(k) + (box.hi(k) - box.lo(k)) * idx / (points_per_axis - 1.0);
    };
    std::vector<GridRow> rows;
    const int outer = p == 2 ? points_per_axis : 1;
    for (int a = 0; a < points_per_axis; ++a)
        for (int b = 0; b < outer; ++b) {
            Vec th(p);
            th(0) = coord(0, a);
            if (p == 2) th(1) = coord(1, b);
            const auto d = decompose(dep, set, th, theta_emp, solver);
            rows.push_back({th, d.V, d.L, d.B});
        }
    return rows;
}

double grid_bias_lipschitz(const std::vector<GridRow>& rows) {
    double L = 0.0;
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            const double d = (rows[a].theta - rows[b].theta).norm();
            if (d > 0) L = std::max(L, std::abs(rows[a].B - rows[b].B) / d);
        }
    return L;
}

void write_grid_csv(const std::vector<GridRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ContractError("cannot write " + path);
    os << std::setprecision(17);
    const int p = rows.empty() ? 1 : static_cast<int>(rows.front().theta.size());
    for (int k = 0; k < p; ++k) os << "theta" << k << ",";
    os << "V,L_tilde,B\n";
    for (const auto& r : rows) {
        for (int k = 0; k < p; ++k) os << r.theta(k) << ",";
        os << r.V << "," << r.L << "," << r.B << "\n";
    }
}

TransferReport transfer_check(const RunRecord& run, const DeploymentSet& dep, const ScenarioSet& set,
                              const Vec& theta_emp, double L_B, const SolverConfig& solver) {
    if (run.log.empty()) throw ContractError("run record is empty");
    TransferReport rep;
    const auto& first = run.log.front();
    const auto& last = run.log.back();
    rep.surrogate_decrease = first.loss - last.loss;
    rep.step_norm = (last.theta - first.theta).norm();
    rep.L_B = L_B;
    rep.margin = rep.surrogate_decrease - L_B * rep.step_norm;
    rep.condition_holds = rep.margin > 0.0;
    rep.V0 = deployment_metric(dep, set, first.theta, solver);
    rep.VK = deployment_metric(dep, set, last.theta, solver);
    rep.deployment_decreased = rep.VK < rep.V0;
    if (!rep.condition_holds)
        rep.verdict = "inconclusive";
    else
        rep.verdict = rep.deployment_decreased ? "certified" : "violated";
    (void)theta_emp;
    return rep;
}

ConvergenceCertificate convergence_certificate(const RunRecord& run, double eta, double L_hat,
                                               double Lstar_hint) {
    ConvergenceCertificate c;
    if (run.log.empty()) return c;
    if (L_hat > 0 && eta > 1.0 / L_hat * (1.0 + 1e-12)) {
        c.step_above_limit = true;
        c.flags.push_back("step size above 1/L_hat");
    }
    if (run.variant == Variant::Updated) c.flags.push_back("updated variant: descent not guaranteed");
    c.worst_slack = std::numeric_limits<double>::infinity();
    c.loss_best = run.log.front().loss;
    c.min_gm_norm_sq = std::numeric_limits<double>::infinity();
    const std::size_t K = run.log.size() - 1;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& a = run.log[k];
        const auto& b = run.log[k + 1];
        const double slack = a.loss - 0.5 * a.eta * a.gm_norm_sq - b.loss;
        c.worst_slack = std::min(c.worst_slack, slack);
        c.min_gm_norm_sq = std::min(c.min_gm_norm_sq, a.gm_norm_sq);
    }
    for (const auto& e : run.log) c.loss_best = std::min(c.loss_best, e.loss);
    if (K == 0) {
        c.worst_slack = 0.0;
        c.min_gm_norm_sq = run.log.front().gm_norm_sq;
        return c;
    }
    c.descent_holds = c.worst_slack >= -1e-9;
    if (!c.descent_holds) c.flags.push_back("per-iteration descent violated");
    const double Lstar = std::min(c.loss_best, Lstar_hint);
    c.rate_bound = 2.0 * (run.log.front().loss - Lstar) / (eta * static_cast<double>(K));
    c.rate_holds = c.min_gm_norm_sq <= c.rate_bound + 1e-12;
    if (!c.rate_holds) c.flags.push_back("stationarity rate bound violated");
    return c;
}

namespace {

struct SyntheticSpec {
    Vec theta_true;
    Mat K;  // data-collection feedback u = -K x + noise
    double control_noise = 0.0;
    Vec x0_scale;
    std::function<Vec(int step, std::mt19937_64& rng)> disturbance;
};

SyntheticSpec synthetic_spec(const ModelSpec& model) {
    SyntheticSpec s;
    if (model.id == "scalar") {
        s.theta_true = Vec::Constant(1, 0.8);
        s.K = Mat::Constant(1, 1, 0.5);
        s.control_noise = 0.3;
        s.x0_scale = Vec::Constant(1, 1.5);
        s.disturbance = [](int, std::mt19937_64& rng) {
            std::normal_distribution<double> nd(0.0, 0.1);
            return Vec::Constant(1, 0.3 + nd(rng));
        };
    } else if (model.id == "double-integrator") {
        s.theta_true = Vec(2);
        s.theta_true << 0.9, 0.12;
        s.K = Mat(1, 2);
        s.K << 2.0, 2.0;
        s.control_noise = 0.5;
        s.x0_scale = Vec::Constant(2, 1.0);
        s.disturbance = [](int, std::mt19937_64& rng) {
            std::normal_distribution<double> nd(0.0, 0.01);
            Vec w(2);
            w << 0.0, 0.03 + nd(rng);
            return w;
        };
    } else if (model.id == "pointmass-wind") {
        s.theta_true = model.theta_nominal;
        s.theta_true.head(3).setConstant(0.5);
        s.K = Mat::Zero(3, 6);
        for (int a = 0; a < 3; ++a) {
            s.K(a, a) = 3.0;
            s.K(a, 3 + a) = 2.5;
        }
        s.control_noise = 0.6;
        s.x0_scale = Vec(6);
        s.x0_scale << 1.0, 1.0, 1.0, 0.5, 0.5, 0.5;
        const WindSpec wind;
        s.disturbance = [wind](int k, std::mt19937_64&) {
            Vec w = Vec::Zero(6);
            w.tail(3) = wind.force(k, 0.02) * 0.02;
            return w;
        };
    } else {
        throw ContractError("no synthetic instance for model " + model.id);
    }
    return s;
}

}  // namespace

SyntheticInstance make_synthetic_instance(const std::string& model_id, std::uint64_t seed,
                                          const SyntheticOptions& opts) {
    SyntheticInstance inst;
    inst.model = make_model(model_id);
    inst.box = inst.model.box;
    inst.cost = CostMatrices::identity(inst.model.n, inst.model.m);
    const auto spec = synthetic_spec(inst.model);
    inst.theta_true = spec.theta_true;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int n = inst.model.n, m = inst.model.m, T = opts.horizon;
    int step = 0;
    auto draw_x0 = [&]() {
        Vec x0(n);
        for (int a = 0; a < n; ++a) x0(a) = spec.x0_scale(a) * unif(rng);
        return x0;
    };
    inst.data.dt = 0.0;
    inst.data.seed = seed;
    for (int i = 0; i < opts.trajectories; ++i) {
        RecordedTrajectory tr{Mat(n, T + 1), Mat(m, T)};
        tr.X.col(0) = draw_x0();
        for (int t = 0; t < T; ++t, ++step) {
            Vec u = -spec.K * tr.X.col(t);
            for (int a = 0; a < m; ++a) u(a) += spec.control_noise * nd(rng);
            tr.U.col(t) = u;
            tr.X.col(t + 1) = inst.model.f(tr.X.col(t), u, spec.theta_true) + spec.disturbance(step, rng);
        }
        inst.data.trajectories.push_back(std::move(tr));
    }
    split_dataset(inst.data, seed);

    inst.theta_tpc = fit_tpc(inst.data, inst.model, inst.box);
    inst.set = make_scenario_set(inst.data, inst.model, inst.cost, inst.theta_tpc);
    inst.theta_emp = opts.theta_emp_from_tpc ? inst.theta_tpc : build_theta_emp(inst.set, inst.theta_tpc, inst.box);

    inst.dep.model = inst.model;
    inst.dep.theta_true = spec.theta_true;
    inst.dep.cost = inst.cost;
    for (int i = 0; i < opts.deployment_scenarios; ++i) {
        Scenario s{draw_x0(), Mat(n, T), i};
        for (int t = 0; t < T; ++t, ++step) s.W.col(t) = spec.disturbance(step, rng);
        inst.dep.scenarios.push_back(std::move(s));
    }
    return inst;
}

}  // namespace spc
