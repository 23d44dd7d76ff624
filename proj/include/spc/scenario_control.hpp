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

#ifndef SPC_SCENARIO_CONTROL_HPP
#define SPC_SCENARIO_CONTROL_HPP

#include <vector>

#include "spc/cost.hpp"

namespace spc {

struct Scenario {
    Vec x0;
    Mat W;  // n x T
    int id = 0;
};

// Initial states paired with every disturbance sequence of the set.
struct ScenarioSet {
    ModelSpec model;
    CostMatrices cost;
    std::vector<Scenario> scenarios;
    int T = 0;
    // Number of disturbance sequences averaged per objective, 0 means all.
    int disturbance_subsample = 0;

    int size() const { return static_cast<int>(scenarios.size()); }
    int num_controls() const { return model.m * T; }
    void validate() const;
};

struct SolverConfig {
    double tol = 1e-9;
    int max_iters = 100;
    double mu_floor = 1e-8;
    bool warm_start = true;
};

struct SolveReport {
    Vec U;  // stacked, size mT
    double grad_norm = 0.0;
    int iterations = 0;
    double value = 0.0;
};

struct ScenarioGradients {
    Vec grad_U;
    Vec grad_theta;
    double value = 0.0;
};

// Views a stacked control vector as an m x T matrix.
inline Eigen::Map<const Mat> as_controls(const Vec& U, int m) {
    return Eigen::Map<const Mat>(U.data(), m, U.size() / m);
}

double scenario_objective(const ScenarioSet& set, const Vec& x0, const Vec& U, const Vec& theta);
double scenario_objective(const ScenarioSet& set, int i, const Vec& U, const Vec& theta);

ScenarioGradients scenario_gradients(const ScenarioSet& set, const Vec& x0, const Vec& U,
                                     const Vec& theta);
ScenarioGradients scenario_gradients(const ScenarioSet& set, int i, const Vec& U, const Vec& theta);

// Damped Newton with an Armijo halving line search. Throws NonConvergenceError.
// A Hessian guess (e.g. from a nearby theta) is used until it stops making progress,
// after which finite-difference Hessians are formed at the iterates.
SolveReport solve_optimal_control(const ScenarioSet& set, const Vec& x0, const Vec& theta,
                                  const SolverConfig& cfg = {}, const Vec* warm = nullptr,
                                  const Mat* hessian_guess = nullptr);
SolveReport solve_optimal_control(const ScenarioSet& set, int i, const Vec& theta,
                                  const SolverConfig& cfg = {}, const Vec* warm = nullptr,
                                  const Mat* hessian_guess = nullptr);

struct OptimizerHessians {
    Mat H_UU;
    Mat H_Utheta;
};

// Central differences of the analytic U-gradient. H_UU is symmetrized and
// checked against mu_floor (ConvexityError).
OptimizerHessians optimizer_hessians(const ScenarioSet& set, const Vec& x0, const Vec& Ustar,
                                     const Vec& theta, double mu_floor = 1e-8);
OptimizerHessians optimizer_hessians(const ScenarioSet& set, int i, const Vec& Ustar,
                                     const Vec& theta, double mu_floor = 1e-8);

// DU* = -H_UU^{-1} H_Utheta, size mT x p.
Mat optimizer_jacobian(const OptimizerHessians& H);
Mat optimizer_jacobian(const ScenarioSet& set, int i, const Vec& Ustar, const Vec& theta,
                       double mu_floor = 1e-8);

double fd_step(const Vec& point);

}  // namespace spc

#endif
