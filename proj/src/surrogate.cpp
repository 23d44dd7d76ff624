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

#include "spc/surrogate.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>

#include <json.hpp>

namespace spc {

std::string to_string(Variant v) { return v == Variant::Fixed ? "fixed" : "updated"; }

double surrogate_loss(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                      const std::vector<SolveReport>& solves) {
    if (static_cast<int>(solves.size()) != set.size()) throw ContractError("one solve per scenario required");
    double sum = 0.0;
    for (int i = 0; i < set.size(); ++i)
        sum += 2.0 * scenario_objective(set, i, solves[i].U, theta) -
               scenario_objective(set, i, solves[i].U, theta_emp);
    return sum / set.size();
}

Vec surrogate_gradient(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                       const std::vector<SolveReport>& solves, double mu_floor) {
    if (static_cast<int>(solves.size()) != set.size()) throw ContractError("one solve per scenario required");
    Vec g = Vec::Zero(set.model.p);
    for (int i = 0; i < set.size(); ++i) {
        const Vec& U = solves[i].U;
        const auto self = scenario_gradients(set, i, U, theta);
        const auto fixed = scenario_gradients(set, i, U, theta_emp);
        const Mat DU = optimizer_jacobian(set, i, U, theta, mu_floor);
        g += 2.0 * self.grad_theta - DU.transpose() * fixed.grad_U;
    }
    return g / set.size();
}

SurrogatePoint evaluate_surrogate(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                                  const SolverConfig& solver, WarmStart* warm, bool with_gradient) {
    SurrogatePoint pt;
    pt.theta = theta;
    const bool use_warm = warm && static_cast<int>(warm->U.size()) == set.size();
    const bool use_hess = warm && static_cast<int>(warm->H.size()) == set.size();
    std::vector<Mat> hess;
    double sum = 0.0;
    Vec g = Vec::Zero(set.model.p);
    for (int i = 0; i < set.size(); ++i) {
        auto rep = solve_optimal_control(set, i, theta, solver, use_warm ? &warm->U[i] : nullptr,
                                         use_hess ? &warm->H[i] : nullptr);
        const auto fixed = scenario_gradients(set, i, rep.U, theta_emp);
        sum += 2.0 * rep.value - fixed.value;
        pt.max_envelope = std::max(pt.max_envelope, rep.grad_norm);
        if (with_gradient) {
            const auto self = scenario_gradients(set, i, rep.U, theta);
            const auto H = optimizer_hessians(set, i, rep.U, theta, solver.mu_floor);
            const Mat DU = optimizer_jacobian(H);
            hess.push_back(H.H_UU);
            g += 2.0 * self.grad_theta - DU.transpose() * fixed.grad_U;
        }
        pt.solves.push_back(std::move(rep));
    }
    pt.loss = sum / set.size();
    if (with_gradient) pt.grad = g / set.size();
    if (warm) {
        warm->U.clear();
        for (const auto& s : pt.solves) warm->U.push_back(s.U);
        if (with_gradient) warm->H = std::move(hess);
    }
    return pt;
}

Vec project_theta(const Vec& y, const Box& box) { return box.clamp(y); }

Vec gradient_mapping(const Vec& theta, const Vec& grad, double eta, const Box& box) {
    if (!(eta > 0)) throw ContractError("step size must be positive");
    return (theta - project_theta(theta - eta * grad, box)) / eta;
}

double estimate_lipschitz(const ScenarioSet& set, const Vec& theta_emp, const Box& box, int samples,
                          std::uint64_t seed, const std::vector<Vec>& anchors, const SolverConfig& solver) {
    if (samples < 2) throw ContractError("at least two samples are required");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Vec> points(anchors.begin(), anchors.end());
    for (int s = 0; s < samples; ++s) {
        Vec th(box.dim());
        for (int k = 0; k < box.dim(); ++k) th(k) = box.lo(k) + unif(rng) * (box.hi(k) - box.lo(k));
        points.push_back(th);
    }
    std::vector<Vec> grads;
    WarmStart warm;
    for (const auto& th : points) grads.push_back(evaluate_surrogate(set, th, theta_emp, solver, &warm).grad);
    double L = 0.0;
    for (std::size_t a = 0; a < points.size(); ++a)
        for (std::size_t b = a + 1; b < points.size(); ++b) {
            const double d = (points[a] - points[b]).norm();
            if (d > 0) L = std::max(L, (grads[a] - grads[b]).norm() / d);
        }
    return 2.0 * L;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunRecord run_core(const ScenarioSet& set, const Vec& theta0, const Vec& theta_emp0, const Box& box,
                   const SurrogateConfig& cfg, bool updated) {
    if (cfg.iters < 0) throw ContractError("iteration budget must be nonnegative");
    if (updated && cfg.tau < 1) throw ContractError("refresh period must be at least 1");
    if (!box.contains(theta0)) throw ContractError("theta0 lies outside the parameter box");
    const auto t0 = std::chrono::steady_clock::now();

    RunRecord rec;
    rec.variant = updated ? Variant::Updated : Variant::Fixed;
    rec.K = cfg.iters;
    rec.tau = cfg.tau;
    double eta = cfg.eta;
    if (!(eta > 0)) {
        rec.L_hat = estimate_lipschitz(set, theta_emp0, box, cfg.lipschitz_samples, cfg.lipschitz_seed,
                                       {theta0}, cfg.solver);
        eta = rec.L_hat > 0 ? 1.0 / rec.L_hat : 1.0;
    }
    rec.eta = eta;

    WarmStart warm;
    WarmStart* warm_ptr = cfg.warm_start ? &warm : nullptr;
    Vec theta = theta0;
    Vec theta_emp = theta_emp0;
    bool refreshed = false;
    SurrogatePoint cur = evaluate_surrogate(set, theta, theta_emp, cfg.solver, warm_ptr);

    for (int k = 0;; ++k) {
        const Vec G = gradient_mapping(theta, cur.grad, eta, box);
        IterationLog entry;
        entry.k = k;
        entry.theta = theta;
        entry.theta_emp = theta_emp;
        entry.loss = cur.loss;
        entry.gm_norm_sq = G.squaredNorm();
        entry.eta = eta;
        entry.refresh = refreshed;
        for (const auto& s : cur.solves) entry.solve_iterations += s.iterations;
        entry.max_envelope = cur.max_envelope;
        entry.wall_seconds = seconds_since(t0);
        rec.log.push_back(entry);
        if (k == cfg.iters) break;
        if (cfg.early_stop && G.norm() <= 1e-8) {
            rec.early_stopped = true;
            break;
        }

        Vec next = project_theta(theta - eta * cur.grad, box);
        refreshed = updated && (k + 1) % cfg.tau == 0 && k + 1 < cfg.iters;
        if (refreshed) {
            theta_emp = build_theta_emp(set, next, box, cfg.solver, cfg.fit, warm_ptr ? &warm.U : nullptr);
        }
        SurrogatePoint nxt = evaluate_surrogate(set, next, theta_emp, cfg.solver, warm_ptr);
        if (cfg.backtracking && !updated) {
            while (nxt.loss > cur.loss - 0.5 * eta * G.squaredNorm() + 1e-9 && rec.eta_halvings < 60) {
                eta *= 0.5;
                ++rec.eta_halvings;
                const Vec Gh = gradient_mapping(theta, cur.grad, eta, box);
                rec.log.back().gm_norm_sq = Gh.squaredNorm();
                rec.log.back().eta = eta;
                next = project_theta(theta - eta * cur.grad, box);
                nxt = evaluate_surrogate(set, next, theta_emp, cfg.solver, warm_ptr);
                if (nxt.loss <= cur.loss - 0.5 * eta * Gh.squaredNorm() + 1e-9) break;
            }
            rec.eta = eta;
        }
        theta = next;
        cur = std::move(nxt);
    }
    rec.theta_final = theta;
    rec.wall_seconds = seconds_since(t0);
    return rec;
}

}  // namespace

RunRecord run_spc(const ScenarioSet& set, const Vec& theta0, const Vec& theta_emp, const Box& box,
                  const SurrogateConfig& cfg) {
    return run_core(set, theta0, theta_emp, box, cfg, false);
}

RunRecord run_updated_spc(const ScenarioSet& set, const Vec& theta0, const Vec& theta_emp0, const Box& box,
                          const SurrogateConfig& cfg) {
    return run_core(set, theta0, theta_emp0, box, cfg, true);
}

void write_run_csv(const RunRecord& run, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ContractError("cannot write " + path);
    os << std::setprecision(17) << "iteration,loss,gm_norm_sq,refresh";
    const int p = run.log.empty() ? 0 : static_cast<int>(run.log.front().theta.size());
    for (int k = 0; k < p; ++k) os << ",theta" << k;
    os << "\n";
    for (const auto& e : run.log) {
        os << e.k << "," << e.loss << "," << e.gm_norm_sq << "," << (e.refresh ? 1 : 0);
        for (int k = 0; k < p; ++k) os << "," << e.theta(k);
        os << "\n";
    }
}

void write_run_summary(const RunRecord& run, const std::string& path) {
    nlohmann::json j;
    j["variant"] = to_string(run.variant);
    j["eta"] = run.eta;
    j["L_hat"] = run.L_hat;
    j["iters"] = run.K;
    j["tau"] = run.tau;
    j["early_stopped"] = run.early_stopped;
    j["eta_halvings"] = run.eta_halvings;
    j["theta_final"] = std::vector<double>(run.theta_final.data(), run.theta_final.data() + run.theta_final.size());
    if (!run.log.empty()) {
        j["loss_initial"] = run.log.front().loss;
        j["loss_final"] = run.log.back().loss;
        double best = run.log.front().gm_norm_sq;
        for (const auto& e : run.log) best = std::min(best, e.gm_norm_sq);
        j["min_gm_norm_sq"] = best;
    }
    std::ofstream os(path);
    if (!os) throw ContractError("cannot write " + path);
    os << j.dump(2) << "\n";
}

}  // namespace spc
