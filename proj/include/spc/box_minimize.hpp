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

#ifndef SPC_BOX_MINIMIZE_HPP
#define SPC_BOX_MINIMIZE_HPP

#include <functional>

#include "spc/types.hpp"

namespace spc {

// Returns the objective value; fills the gradient and a positive semidefinite
// curvature model when the pointers are non-null.
using BoxObjective = std::function<double(const Vec& theta, Vec* grad, Mat* curvature)>;

struct BoxMinimizeConfig {
    double tol = 1e-8;
    int max_iters = 500;
};

struct BoxMinimizeResult {
    Vec theta;
    double value = 0.0;
    double gm_norm = 0.0;
    int iterations = 0;
};

// Projected Newton on the free coordinates with a projected-gradient fallback.
// Stops when the gradient mapping with step 1/lambda_max(curvature) is below tol.
BoxMinimizeResult box_minimize(const BoxObjective& objective, const Vec& theta0, const Box& box,
                               const BoxMinimizeConfig& cfg = {});

}  // namespace spc

#endif
