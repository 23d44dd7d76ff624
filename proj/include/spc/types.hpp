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

#ifndef SPC_TYPES_HPP
#define SPC_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace spc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dimension or argument contract violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A rollout produced a non-finite state.
class OverflowError : public std::runtime_error {
public:
    explicit OverflowError(int step)
        : std::runtime_error("non-finite state at step " + std::to_string(step)), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

// Hessian of the scenario objective is not uniformly positive definite.
class ConvexityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model has no free parameters to fit.
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, Vec best, double residual)
        : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
    const Vec& best() const { return best_; }
    double residual() const { return residual_; }

private:
    Vec best_;
    double residual_;
};

// Axis-aligned parameter box lo <= theta <= hi.
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) { validate(); }

    int dim() const { return static_cast<int>(lo.size()); }

    void validate() const {
        if (lo.size() != hi.size()) throw ContractError("box bounds differ in size");
        if ((lo.array() >= hi.array()).any()) throw ContractError("box has empty interior");
    }

    bool contains(const Vec& theta, double slack = 0.0) const {
        return theta.size() == lo.size() && (theta.array() >= lo.array() - slack).all() &&
               (theta.array() <= hi.array() + slack).all();
    }

    Vec clamp(const Vec& y) const { return y.cwiseMax(lo).cwiseMin(hi); }
};

}  // namespace spc

#endif
