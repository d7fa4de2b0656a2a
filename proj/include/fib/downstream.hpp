#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fib/datalab.hpp"
#include "fib/matrix.hpp"
#include "fib/neural.hpp"

namespace fib::probe {

/// One downstream probe on frozen encoder features: a one-vs-rest
/// logistic classifier for one class, or a linear regressor for one
/// target column.
struct ProbeTask {
    enum class Kind { OneVsRestLogistic, LinearRegression };
    Kind kind = Kind::OneVsRestLogistic;
    std::size_t target_id = 0; // class id or output column
};

/// Least squares with an intercept column and 1e-8 ridge jitter.
/// Returns [w_1..w_d, intercept].
std::vector<double> fit_linear_regression(const FeatureMatrix& x, const std::vector<double>& y);

/// Full-batch gradient descent with backtracking line search on binary
/// cross-entropy, run until the gradient max-norm is below 1e-6 (or 5000
/// iterations). Returns [w_1..w_d, intercept].
std::vector<double> fit_logistic_ovr(const FeatureMatrix& x, const std::vector<double>& labels,
                                     double positive_class);

double predict_linear(const std::vector<double>& weights, std::span<const double> x);
double predict_logistic_prob(const std::vector<double>& weights, std::span<const double> x);

struct ModelSelectionRow {
    std::uint64_t seed = 0;
    double fib_at_best_epoch = 0.0;
    std::vector<double> task_metric; // accuracy or MSE per task
    std::vector<std::size_t> task_rank;
    std::size_t top3_count = 0;
    bool valid = true;
};

struct SelectionReport {
    std::vector<ModelSelectionRow> rows;
    std::vector<ProbeTask> tasks;
};

/// Per trained run: encode the splits with the best-epoch weights, fit
/// every probe on train features, score on test, rank per task (ties by
/// seed id) and count top-3 memberships.
SelectionReport selection_study(const std::vector<fib::nn::TrainRun>& runs,
                                const fib::data::SplitDataset& dataset,
                                const std::vector<ProbeTask>& tasks);

} // namespace fib::probe
