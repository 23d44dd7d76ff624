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

#include "spc/identification.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace spc {

void Dataset::validate() const {
    const int N = static_cast<int>(trajectories.size());
    std::vector<int> seen(N, 0);
    for (int i : train) {
        if (i < 0 || i >= N) throw ContractError("train index out of range");
        ++seen[i];
    }
    for (int i : test) {
        if (i < 0 || i >= N) throw ContractError("test index out of range");
        ++seen[i];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
        throw ContractError("train/test split must be a partition");
    for (const auto& tr : trajectories)
        if (tr.X.cols() != tr.U.cols() + 1) throw ContractError("trajectory length must be T+1");
}

void split_dataset(Dataset& data, std::uint64_t seed, double train_fraction) {
    const int N = static_cast<int>(data.trajectories.size());
    std::vector<int> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    int n_train = static_cast<int>(std::lround(train_fraction * N));
    if (N >= 2) n_train = std::clamp(n_train, 1, N - 1);
    data.train.assign(perm.begin(), perm.begin() + n_train);
    data.test.assign(perm.begin() + n_train, perm.end());
    std::sort(data.train.begin(), data.train.end());
    std::sort(data.test.begin(), data.test.end());
}

namespace {

// Transitions (x_t, u_t) -> target y_t = x_{t+1} - offset_t.
struct TransitionBlock {
    const Mat* X;
    Mat U;
    const Mat* offset;  // may be null
};

double transition_loss(const std::vector<TransitionBlock>& blocks, const ModelSpec& model,
                       const Vec& theta, Vec* grad, Mat* curvature) {
    const int n = model.n, p = model.p;
    double sum = 0.0;
    long count = 0;
    if (grad) grad->setZero(p);
    if (curvature) curvature->setZero(p, p);
    Vec pred(n), r(n);
    Mat A(n, n), B(n, model.m), C(n, p);
    for (const auto& b : blocks) {
        const int T = static_cast<int>(b.U.cols());
        for (int t = 0; t < T; ++t) {
            model.eval(b.X->col(t), b.U.col(t), theta, pred);
            r = b.X->col(t + 1) - pred;
            if (b.offset) r -= b.offset->col(t);
            sum += r.squaredNorm();
            ++count;
            if (grad || curvature) {
                model.jacobians(b.X->col(t), b.U.col(t), theta, A, B, C);
                if (grad) grad->noalias() -= 2.0 * C.transpose() * r;
                if (curvature) curvature->noalias() += 2.0 * C.transpose() * C;
            }
        }
    }
    if (count == 0) throw ContractError("no transitions to fit");
    if (grad) *grad /= static_cast<double>(count);
    if (curvature) *curvature /= static_cast<double>(count);
    return sum / static_cast<double>(count);
}

std::vector<TransitionBlock> recorded_blocks(const Dataset& data, const std::vector<int>& idx) {
    std::vector<TransitionBlock> blocks;
    for (int i : idx) blocks.push_back({&data.trajectories.at(i).X, data.trajectories.at(i).U, nullptr});
    return blocks;
}

Vec fit_blocks(const std::vector<TransitionBlock>& blocks, const ModelSpec& model, const Box& box,
               const BoxMinimizeConfig& cfg, const Vec& start) {
    if (model.p == 0) throw DegenerateError("model has no free parameters (p = 0)");
    if (box.dim() != model.p) throw ContractError("box dimension differs from p");
    auto obj = [&](const Vec& th, Vec* g, Mat* H) { return transition_loss(blocks, model, th, g, H); };
    return box_minimize(obj, start, box, cfg).theta;
}

Vec box_center(const Box& box) { return 0.5 * (box.lo + box.hi); }

}  // namespace

double prediction_loss(const Dataset& data, const std::vector<int>& idx, const ModelSpec& model,
                       const Vec& theta, Vec* grad, Mat* curvature) {
    return transition_loss(recorded_blocks(data, idx), model, theta, grad, curvature);
}

Vec fit_tpc(const Dataset& data, const ModelSpec& model, const Box& box, const BoxMinimizeConfig& cfg) {
    if (model.p == 0) throw DegenerateError("model has no free parameters (p = 0)");
    if (data.train.empty()) throw ContractError("training split is empty");
    return fit_blocks(recorded_blocks(data, data.train), model, box, cfg, box_center(box));
}

std::vector<Mat> estimate_disturbances(const Dataset& data, const ModelSpec& model, const Vec& theta0) {
    std::vector<Mat> out;
    Vec pred(model.n);
    for (int i : data.train) {
        const auto& tr = data.trajectories.at(i);
        if (tr.X.rows() != model.n || tr.U.rows() != model.m) throw ContractError("dataset dimensions");
        const int T = static_cast<int>(tr.U.cols());
        Mat W(model.n, T);
        for (int t = 0; t < T; ++t) {
            model.eval(tr.X.col(t), tr.U.col(t), theta0, pred);
            W.col(t) = tr.X.col(t + 1) - pred;
        }
        out.push_back(std::move(W));
    }
    return out;
}

ScenarioSet make_scenario_set(const Dataset& data, const ModelSpec& model, const CostMatrices& cost,
                              const Vec& theta0) {
    const auto W = estimate_disturbances(data, model, theta0);
    ScenarioSet set;
    set.model = model;
    set.cost = cost;
    for (std::size_t k = 0; k < W.size(); ++k) {
        const int i = data.train[k];
        set.scenarios.push_back({data.trajectories[i].X.col(0), W[k], i});
    }
    if (set.scenarios.empty()) throw ContractError("training split is empty");
    set.T = static_cast<int>(set.scenarios.front().W.cols());
    set.validate();
    return set;
}

Mat counterfactual_rollout(const ScenarioSet& set, int i, const Vec& theta, const Vec& Ustar) {
    if (i < 0 || i >= set.size()) throw ContractError("scenario index out of range");
    const auto& s = set.scenarios[i];
    return rollout(set.model, s.x0, as_controls(Ustar, set.model.m), theta, s.W);
}

Vec fit_theta_emp(const std::vector<Mat>& rollouts, const std::vector<Vec>& controls,
                  const std::vector<Mat>& residuals, const ModelSpec& model, const Box& box,
                  const BoxMinimizeConfig& cfg, const Vec* start) {
    if (rollouts.size() != controls.size() || rollouts.size() != residuals.size())
        throw ContractError("counterfactual inputs differ in length");
    std::vector<TransitionBlock> blocks;
    for (std::size_t k = 0; k < rollouts.size(); ++k)
        blocks.push_back({&rollouts[k], Mat(as_controls(controls[k], model.m)), &residuals[k]});
    return fit_blocks(blocks, model, box, cfg, start ? box.clamp(*start) : box_center(box));
}

Vec build_theta_emp(const ScenarioSet& set, const Vec& theta, const Box& box, const SolverConfig& solver,
                    const BoxMinimizeConfig& cfg, std::vector<Vec>* warm) {
    std::vector<Mat> rollouts, residuals;
    std::vector<Vec> controls;
    for (int i = 0; i < set.size(); ++i) {
        const Vec* w = (warm && static_cast<int>(warm->size()) == set.size()) ? &(*warm)[i] : nullptr;
        const auto rep = solve_optimal_control(set, i, theta, solver, w);
        rollouts.push_back(counterfactual_rollout(set, i, theta, rep.U));
        controls.push_back(rep.U);
        residuals.push_back(set.scenarios[i].W);
    }
    if (warm) *warm = controls;
    return fit_theta_emp(rollouts, controls, residuals, set.model, box, cfg, &theta);
}

double prediction_mse(const Dataset& data, Split split, const ModelSpec& model, const Vec& theta) {
    const auto& idx = split == Split::Train ? data.train : data.test;
    if (idx.empty()) throw ContractError("requested split is empty");
    return prediction_loss(data, idx, model, theta);
}

void save_dataset(const Dataset& data, const ModelSpec& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["model"] = model.id;
    manifest["n"] = model.n;
    manifest["m"] = model.m;
    manifest["dt"] = data.dt;
    manifest["seed"] = data.seed;
    manifest["train"] = data.train;
    manifest["test"] = data.test;
    std::vector<std::string> files;
    for (std::size_t k = 0; k < data.trajectories.size(); ++k) {
        const auto& tr = data.trajectories[k];
        std::ostringstream name;
        name << "traj_" << std::setw(4) << std::setfill('0') << k << ".csv";
        files.push_back(name.str());
        std::ofstream os(fs::path(dir) / name.str());
        os << std::setprecision(17) << "t";
        for (int a = 0; a < tr.X.rows(); ++a) os << ",x" << a;
        for (int a = 0; a < tr.U.rows(); ++a) os << ",u" << a;
        os << "\n";
        for (int t = 0; t < tr.X.cols(); ++t) {
            os << t;
            for (int a = 0; a < tr.X.rows(); ++a) os << "," << tr.X(a, t);
            // the final state has no control; its u cells are left empty
            for (int a = 0; a < tr.U.rows(); ++a) {
                os << ",";
                if (t < tr.U.cols()) os << tr.U(a, t);
            }
            os << "\n";
        }
    }
    manifest["files"] = files;
    std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw ContractError("missing manifest.json in " + dir);
    const auto manifest = nlohmann::json::parse(in);
    const int n = manifest.at("n"), m = manifest.at("m");
    Dataset data;
    data.dt = manifest.at("dt");
    data.seed = manifest.at("seed");
    data.train = manifest.at("train").get<std::vector<int>>();
    data.test = manifest.at("test").get<std::vector<int>>();
    for (const auto& file : manifest.at("files")) {
        std::ifstream csv(fs::path(dir) / file.get<std::string>());
        std::string line;
        std::getline(csv, line);
        std::vector<std::vector<std::string>> rows;
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            cells.resize(1 + n + m);
            rows.push_back(cells);
        }
        const int T = static_cast<int>(rows.size()) - 1;
        RecordedTrajectory tr{Mat(n, T + 1), Mat(m, T)};
        for (int t = 0; t <= T; ++t) {
            for (int a = 0; a < n; ++a) tr.X(a, t) = std::stod(rows[t][1 + a]);
            if (t < T)
                for (int a = 0; a < m; ++a) tr.U(a, t) = std::stod(rows[t][1 + n + a]);
        }
        data.trajectories.push_back(std::move(tr));
    }
    data.validate();
    return data;
}

}  // namespace spc
