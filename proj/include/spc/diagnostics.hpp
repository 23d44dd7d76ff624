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

#ifndef SPC_DIAGNOSTICS_HPP
#define SPC_DIAGNOSTICS_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spc/surrogate.hpp"

namespace spc {

// Synthetic deployment: true parameters of the same model family and the true
// disturbance sequences.
struct DeploymentSet {
    ModelSpec model;
    Vec theta_true;
    CostMatrices cost;
    std::vector<Scenario> scenarios;

    void validate() const;
};

// V(theta): the scenario-optimal controls induced by theta (training residual
// scenarios) evaluated on the true system.
double deployment_metric(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta,
                         const SolverConfig& solver = {});

struct Decomposition {
    double V = 0.0;
    double L = 0.0;  // surrogate value
    double B = 0.0;  // V - L
};

Decomposition decompose(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta,
                        const Vec& theta_emp, const SolverConfig& solver = {});

double bias(const Vec& theta, const Vec& theta_emp, const DeploymentSet& dep, const ScenarioSet& set,
            const SolverConfig& solver = {});

// Empirical estimate (diagnostic, not a certificate): 2 * max sampled difference quotient of B.
double estimate_bias_lipschitz(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta_emp,
                               const Box& box, int samples, std::uint64_t seed = 11,
                               const SolverConfig& solver = {});

struct GridRow {
    Vec theta;
    double V = 0.0;
    double L = 0.0;
    double B = 0.0;
};

// Tensor grid over a box of dimension 1 or 2.
std::vector<GridRow> grid_sweep(const DeploymentSet& dep, const ScenarioSet& set, const Vec& theta_emp,
                                const Box& box, int points_per_axis, const SolverConfig& solver = {});

// Max slope of B over all grid pairs.
double grid_bias_lipschitz(const std::vector<GridRow>& rows);

void write_grid_csv(const std::vector<GridRow>& rows, const std::string& path);

struct TransferReport {
    double surrogate_decrease = 0.0;
    double step_norm = 0.0;
    double L_B = 0.0;
    double margin = 0.0;  // surrogate_decrease - L_B * step_norm
    double V0 = 0.0;
    double VK = 0.0;
    bool condition_holds = false;
    bool deployment_decreased = false;
    std::string verdict;  // certified | violated | inconclusive
};

TransferReport transfer_check(const RunRecord& run, const DeploymentSet& dep, const ScenarioSet& set,
                              const Vec& theta_emp, double L_B, const SolverConfig& solver = {});

struct ConvergenceCertificate {
    double worst_slack = 0.0;
    bool descent_holds = true;
    double min_gm_norm_sq = 0.0;
    double loss_best = 0.0;
    double rate_bound = 0.0;
    bool rate_holds = true;
    bool step_above_limit = false;
    std::vector<std::string> flags;
};

// Replays the per-iteration descent inequality and the O(1/K) stationarity bound.
// L_hat <= 0 skips the step-size check; Lstar_hint replaces the best observed loss when lower.
ConvergenceCertificate convergence_certificate(const RunRecord& run, double eta, double L_hat = 0.0,
                                               double Lstar_hint = std::numeric_limits<double>::infinity());

// A seeded end-to-end instance for a zoo model: dataset, prediction fit,
// residual scenarios, theta_emp and a deployment set.
struct SyntheticInstance {
    ModelSpec model;
    CostMatrices cost;
    Box box;
    Dataset data;
    Vec theta_true;
    Vec theta_tpc;
    Vec theta_emp;
    ScenarioSet set;
    DeploymentSet dep;
};

struct SyntheticOptions {
    int trajectories = 10;
    int horizon = 10;
    int deployment_scenarios = 8;
    bool theta_emp_from_tpc = false;
};

SyntheticInstance make_synthetic_instance(const std::string& model_id, std::uint64_t seed,
                                          const SyntheticOptions& opts = {});

}  // namespace spc

#endif
