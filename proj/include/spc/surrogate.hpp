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

#ifndef SPC_SURROGATE_HPP
#define SPC_SURROGATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spc/identification.hpp"

namespace spc {

enum class Variant { Fixed, Updated };

struct SurrogateConfig {
    double eta = 0.0;  // 0 selects 1 / L_hat
    int iters = 40;
    int lipschitz_samples = 6;
    std::uint64_t lipschitz_seed = 7;
    bool warm_start = true;
    Variant variant = Variant::Fixed;
    int tau = 10;
    bool early_stop = false;  // stop once ||G_eta|| <= 1e-8
    bool backtracking = false;
    SolverConfig solver;
    BoxMinimizeConfig fit;
};

struct SurrogatePoint {
    Vec theta;
    double loss = 0.0;
    Vec grad;  // empty when not requested
    std::vector<SolveReport> solves;
    double max_envelope = 0.0;  // max_i ||grad_U F_i(U_i*, theta)||
};

struct IterationLog {
    int k = 0;
    Vec theta;
    Vec theta_emp;
    double loss = 0.0;
    double gm_norm_sq = 0.0;
    double eta = 0.0;
    bool refresh = false;
    int solve_iterations = 0;
    double max_envelope = 0.0;
    double wall_seconds = 0.0;
};

struct RunRecord {
    Variant variant = Variant::Fixed;
    double eta = 0.0;
    double L_hat = 0.0;
    int K = 0;
    int tau = 0;
    bool early_stopped = false;
    int eta_halvings = 0;
    std::vector<IterationLog> log;  // entries for k = 0..K (fewer after an early stop)
    Vec theta_final;
    double wall_seconds = 0.0;
};

std::string to_string(Variant v);

// (1/N) sum_i [2 F_i(U_i*, theta) - F_i(U_i*, theta_emp)] with solves taken under theta.
double surrogate_loss(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                      const std::vector<SolveReport>& solves);

// (1/N) sum_i [2 d_theta F_i(U_i*, theta) - DU_i*' grad_U F_i(U_i*, theta_emp)]
Vec surrogate_gradient(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                       const std::vector<SolveReport>& solves, double mu_floor = 1e-8);

// Previous controls and Hessians, one per scenario.
struct WarmStart {
    std::vector<Vec> U;
    std::vector<Mat> H;
};

// Solves all inner problems (warm-started from *warm when given, updated in place) and
// evaluates the loss and optionally the gradient.
SurrogatePoint evaluate_surrogate(const ScenarioSet& set, const Vec& theta, const Vec& theta_emp,
                                  const SolverConfig& solver = {}, WarmStart* warm = nullptr,
                                  bool with_gradient = true);

Vec project_theta(const Vec& y, const Box& box);

Vec gradient_mapping(const Vec& theta, const Vec& grad, double eta, const Box& box);

// 2 * max over sampled pairs of ||grad(a) - grad(b)|| / ||a - b||. Samples are drawn
// uniformly in the box after the optional anchors.
double estimate_lipschitz(const ScenarioSet& set, const Vec& theta_emp, const Box& box, int samples,
                          std::uint64_t seed = 7, const std::vector<Vec>& anchors = {},
                          const SolverConfig& solver = {});

// Fixed-surrogate projected gradient descent.
RunRecord run_spc(const ScenarioSet& set, const Vec& theta0, const Vec& theta_emp, const Box& box,
                  const SurrogateConfig& cfg);

// theta_emp is rebuilt every tau iterations from counterfactual rollouts under the current iterate.
RunRecord run_updated_spc(const ScenarioSet& set, const Vec& theta0, const Vec& theta_emp0,
                          const Box& box, const SurrogateConfig& cfg);

void write_run_csv(const RunRecord& run, const std::string& path);
void write_run_summary(const RunRecord& run, const std::string& path);

}  // namespace spc

#endif
