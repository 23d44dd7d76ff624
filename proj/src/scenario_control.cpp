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

#include "spc/scenario_control.hpp"

#include <cmath>
#include <limits>

namespace spc {

void ScenarioSet::validate() const {
    if (scenarios.empty()) throw ContractError("scenario set is empty");
    for (const auto& s : scenarios) {
        if (s.x0.size() != model.n) throw ContractError("scenario initial state has wrong dimension");
        if (s.W.rows() != model.n || s.W.cols() != T) throw ContractError("scenario horizon mismatch");
    }
}

namespace {

int disturbance_count(const ScenarioSet& set) {
    const int N = set.size();
    if (N == 0) throw ContractError("scenario set is empty");
    return set.disturbance_subsample > 0 ? std::min(N, set.disturbance_subsample) : N;
}

void check_controls(const ScenarioSet& set, const Vec& U) {
    if (U.size() != set.num_controls()) throw ContractError("control vector has wrong length");
}

const Vec& scenario_x0(const ScenarioSet& set, int i) {
    if (i < 0 || i >= set.size()) throw ContractError("scenario index out of range");
    return set.scenarios[i].x0;
}

}  // namespace

double fd_step(const Vec& point) { return std::max(1e-6, 1e-6 * point.norm()); }

double scenario_objective(const ScenarioSet& set, const Vec& x0, const Vec& U, const Vec& theta) {
    check_controls(set, U);
    const int Nw = disturbance_count(set);
    const auto Um = as_controls(U, set.model.m);
    double sum = 0.0;
    for (int j = 0; j < Nw; ++j)
        sum += total_cost(set.model, set.cost, x0, Um, theta, set.scenarios[j].W);
    return sum / Nw;
}

double scenario_objective(const ScenarioSet& set, int i, const Vec& U, const Vec& theta) {
    return scenario_objective(set, scenario_x0(set, i), U, theta);
}

ScenarioGradients scenario_gradients(const ScenarioSet& set, const Vec& x0, const Vec& U,
                                     const Vec& theta) {
    check_controls(set, U);
    const int Nw = disturbance_count(set);
    const auto Um = as_controls(U, set.model.m);
    ScenarioGradients out{Vec::Zero(U.size()), Vec::Zero(set.model.p), 0.0};
    for (int j = 0; j < Nw; ++j) {
        const auto g = cost_gradients(set.model, set.cost, x0, Um, theta, set.scenarios[j].W);
        out.grad_U += g.grad_U;
        out.grad_theta += g.grad_theta;
        out.value += g.cost;
    }
    out.grad_U /= Nw;
    out.grad_theta /= Nw;
    out.value /= Nw;
    return out;
}

ScenarioGradients scenario_gradients(const ScenarioSet& set, int i, const Vec& U, const Vec& theta) {
    return scenario_gradients(set, scenario_x0(set, i), U, theta);
}

namespace {

Mat hessian_uu(const ScenarioSet& set, const Vec& x0, const Vec& U, const Vec& theta) {
    const int d = static_cast<int>(U.size());
    const double h = fd_step(U);
    Mat H(d, d);
    Vec Up = U, Um = U;
    for (int k = 0; k < d; ++k) {
        Up(k) = U(k) + h;
        Um(k) = U(k) - h;
        H.col(k) = (scenario_gradients(set, x0, Up, theta).grad_U -
                    scenario_gradients(set, x0, Um, theta).grad_U) / (2.0 * h);
        Up(k) = U(k);
        Um(k) = U(k);
    }
    return 0.5 * (H + H.transpose());
}

}  // namespace

SolveReport solve_optimal_control(const ScenarioSet& set, const Vec& x0, const Vec& theta,
                                  const SolverConfig& cfg, const Vec* warm, const Mat* hessian_guess) {
    const int d = set.num_controls();
    Vec U = (warm && cfg.warm_start && warm->size() == d) ? *warm : Vec::Zero(d);
    auto g = scenario_gradients(set, x0, U, theta);
    SolveReport best{U, g.grad_U.norm(), 0, g.value};
    const bool guess_ok = hessian_guess && hessian_guess->rows() == d && hessian_guess->cols() == d;
    Eigen::LLT<Mat> llt;
    bool fresh = !guess_ok;
    if (guess_ok) llt.compute(*hessian_guess);
    for (int it = 0; it < cfg.max_iters; ++it) {
        const double gn = g.grad_U.norm();
        if (gn < best.grad_norm) best = {U, gn, it, g.value};
        if (gn <= cfg.tol) return {U, gn, it, g.value};

        Vec dir;
        if (fresh) llt.compute(hessian_uu(set, x0, U, theta));
        if (llt.info() == Eigen::Success) dir = -llt.solve(g.grad_U);
        double slope = dir.size() ? g.grad_U.dot(dir) : 0.0;
        if (!dir.size() || !dir.allFinite() || !(slope < 0.0)) {
            dir = -g.grad_U;
            slope = -gn * gn;
        }
        // rounding floor on the objective so that the last Newton steps are not rejected
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(g.value));
        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec trial = U + alpha * dir;
            double value;
            try {
                value = scenario_objective(set, x0, trial, theta);
            } catch (const OverflowError&) {
                alpha *= 0.5;
                continue;
            }
            if (value <= g.value + 1e-4 * alpha * slope + slack) {
                U = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (fresh) break;
            fresh = true;
            continue;
        }
        g = scenario_gradients(set, x0, U, theta);
        if (!fresh && g.grad_U.norm() > 0.25 * gn) fresh = true;
    }
    const double gn = g.grad_U.norm();
    if (gn <= cfg.tol) return {U, gn, cfg.max_iters, g.value};
    if (gn < best.grad_norm) best = {U, gn, cfg.max_iters, g.value};
    throw NonConvergenceError("inner solve did not reach tolerance (gradient norm " +
                                  std::to_string(best.grad_norm) + ")",
                              best.U, best.grad_norm);
}

SolveReport solve_optimal_control(const ScenarioSet& set, int i, const Vec& theta,
                                  const SolverConfig& cfg, const Vec* warm, const Mat* hessian_guess) {
    return solve_optimal_control(set, scenario_x0(set, i), theta, cfg, warm, hessian_guess);
}

OptimizerHessians optimizer_hessians(const ScenarioSet& set, const Vec& x0, const Vec& Ustar,
                                     const Vec& theta, double mu_floor) {
    check_controls(set, Ustar);
    OptimizerHessians H;
    H.H_UU = hessian_uu(set, x0, Ustar, theta);
    Eigen::SelfAdjointEigenSolver<Mat> es(H.H_UU, Eigen::EigenvaluesOnly);
    const double mu = es.eigenvalues().minCoeff();
    if (!(mu >= mu_floor))
        throw ConvexityError("H_UU minimum eigenvalue " + std::to_string(mu) + " below floor");

    const int p = set.model.p;
    H.H_Utheta.resize(Ustar.size(), p);
    const double h = fd_step(theta);
    Vec tp = theta, tm = theta;
    for (int k = 0; k < p; ++k) {
        tp(k) = theta(k) + h;
        tm(k) = theta(k) - h;
        H.H_Utheta.col(k) = (scenario_gradients(set, x0, Ustar, tp).grad_U -
                             scenario_gradients(set, x0, Ustar, tm).grad_U) / (2.0 * h);
        tp(k) = theta(k);
        tm(k) = theta(k);
    }
    return H;
}

OptimizerHessians optimizer_hessians(const ScenarioSet& set, int i, const Vec& Ustar,
                                     const Vec& theta, double mu_floor) {
    return optimizer_hessians(set, scenario_x0(set, i), Ustar, theta, mu_floor);
}

Mat optimizer_jacobian(const OptimizerHessians& H) {
    Eigen::LLT<Mat> llt(H.H_UU);
    if (llt.info() != Eigen::Success) throw ConvexityError("H_UU factorization failed");
    return -llt.solve(H.H_Utheta);
}

Mat optimizer_jacobian(const ScenarioSet& set, int i, const Vec& Ustar, const Vec& theta,
                       double mu_floor) {
    return optimizer_jacobian(optimizer_hessians(set, i, Ustar, theta, mu_floor));
}

}  // namespace spc
