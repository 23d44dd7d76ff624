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

#include "spc/box_minimize.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace spc {

namespace {

double curvature_scale(const Mat& H) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    return top > 1e-14 ? top : 1.0;
}

}  // namespace

BoxMinimizeResult box_minimize(const BoxObjective& objective, const Vec& theta0, const Box& box,
                               const BoxMinimizeConfig& cfg) {
    const int p = static_cast<int>(theta0.size());
    Vec theta = box.clamp(theta0);
    Vec g(p);
    Mat H(p, p);
    double value = objective(theta, &g, &H);
    BoxMinimizeResult best{theta, value, std::numeric_limits<double>::infinity(), 0};

    for (int it = 0; it <= cfg.max_iters; ++it) {
        const double L = curvature_scale(H);
        const Vec G = (theta - box.clamp(theta - g / L)) * L;
        const double gm = G.norm();
        if (gm < best.gm_norm) best = {theta, value, gm, it};
        if (gm <= cfg.tol || it == cfg.max_iters) break;

        std::vector<int> free;
        for (int k = 0; k < p; ++k) {
            const bool at_lo = theta(k) <= box.lo(k) && g(k) > 0.0;
            const bool at_hi = theta(k) >= box.hi(k) && g(k) < 0.0;
            if (!at_lo && !at_hi) free.push_back(k);
        }
        Vec dir = Vec::Zero(p);
        if (!free.empty()) {
            const int nf = static_cast<int>(free.size());
            Mat Hf(nf, nf);
            Vec gf(nf);
            for (int a = 0; a < nf; ++a) {
                gf(a) = g(free[a]);
                for (int b = 0; b < nf; ++b) Hf(a, b) = H(free[a], free[b]);
            }
            Hf = 0.5 * (Hf + Hf.transpose());
            Hf.diagonal().array() += 1e-12 * L;
            Eigen::LLT<Mat> llt(Hf);
            Vec df = llt.info() == Eigen::Success ? Vec(-llt.solve(gf)) : Vec(-gf / L);
            if (!df.allFinite() || gf.dot(df) >= 0.0) df = -gf / L;
            for (int a = 0; a < nf; ++a) dir(free[a]) = df(a);
        }

        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
        auto try_steps = [&](const Vec& d) {
            double alpha = 1.0;
            for (int ls = 0; ls < 50; ++ls) {
                const Vec trial = box.clamp(theta + alpha * d);
                if ((trial - theta).norm() == 0.0) return false;
                const double v = objective(trial, nullptr, nullptr);
                if (std::isfinite(v) && v <= value + 1e-4 * g.dot(trial - theta) + slack && v <= value + slack) {
                    theta = trial;
                    return true;
                }
                alpha *= 0.5;
            }
            return false;
        };
        if (!try_steps(dir) && !try_steps(-g / L)) break;
        value = objective(theta, &g, &H);
    }
    if (best.gm_norm > cfg.tol)
        throw NonConvergenceError("box-constrained fit did not reach tolerance (gradient mapping " +
                                      std::to_string(best.gm_norm) + ")",
                                  best.theta, best.gm_norm);
    return best;
}

}  // namespace spc
