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

#ifndef SPC_COST_HPP
#define SPC_COST_HPP

#include "spc/dynamics.hpp"

namespace spc {

// J = sum_t (x_t' Q x_t + u_t' R u_t) + x_T' P x_T
struct CostMatrices {
    Mat Q;
    Mat R;
    Mat P;

    CostMatrices() = default;
    CostMatrices(Mat q, Mat r, Mat p) : Q(std::move(q)), R(std::move(r)), P(std::move(p)) { validate(); }

    static CostMatrices identity(int n, int m) {
        return CostMatrices(Mat::Identity(n, n), Mat::Identity(m, m), Mat::Identity(n, n));
    }

    void validate() const;
};

struct CostGradients {
    Vec grad_U;      // stacked u_0..u_{T-1}
    Vec grad_theta;
    double cost = 0.0;
};

double total_cost(const ModelSpec& model, const CostMatrices& cm, const Vec& x0, const Mat& U,
                  const Vec& theta, const Mat& W);

// Cost of an already computed trajectory.
double trajectory_cost(const CostMatrices& cm, const Mat& X, const Mat& U);

// One rollout and one backward adjoint pass.
CostGradients cost_gradients(const ModelSpec& model, const CostMatrices& cm, const Vec& x0,
                             const Mat& U, const Vec& theta, const Mat& W);

}  // namespace spc

#endif
