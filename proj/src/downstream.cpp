#include "fib/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fib/errors.hpp"

namespace fib::probe {

namespace {

// Gaussian elimination with partial pivoting on a (d x d) system
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t d = b.size();
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) {
            throw SingularSystem("solve_dense: zero pivot");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < d; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(d, 0.0);
    for (std::size_t r = d; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < d; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return x;
}

} // namespace

std::vector<double> fit_linear_regression(const FeatureMatrix& x, const std::vector<double>& y) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols() + 1; // intercept column appended
    if (y.size() != n) throw DimensionMismatch("fit_linear_regression: row counts differ");
    if (n <= x.cols()) throw TooFewRows("fit_linear_regression: need more rows than features");

    auto feature = [&](std::size_t row, std::size_t col) {
        return col < x.cols() ? x(row, col) : 1.0;
    };

    std::vector<std::vector<double>> gram(d, std::vector<double>(d, 0.0));
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double fa = feature(i, a);
            rhs[a] += fa * y[i];
            for (std::size_t b = a; b < d; ++b) gram[a][b] += fa * feature(i, b);
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < a; ++b) gram[a][b] = gram[b][a];
    }

    // residual gradient X^T (Xw - y) must be essentially zero
    auto residual_gradient = [&](const std::vector<double>& w) {
        std::vector<double> residual(n);
        for (std::size_t i = 0; i < n; ++i) {
            double pred = 0.0;
            for (std::size_t a = 0; a < d; ++a) pred += w[a] * feature(i, a);
            residual[i] = pred - y[i];
        }
        double max_grad = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += feature(i, a) * residual[i];
            max_grad = std::max(max_grad, std::abs(g));
        }
        return max_grad;
    };

    // exact normal equations first; fall back to a tiny ridge jitter when the
    // Gram matrix is singular or too ill-conditioned to pass the residual check
    const double tolerance = 1e-6 * static_cast<double>(n);
    try {
        auto weights = solve_dense(gram, rhs);
        if (residual_gradient(weights) < tolerance) return weights;
    } catch (const SingularSystem&) {
    }
    for (std::size_t a = 0; a < d; ++a) gram[a][a] += 1e-8;
    auto weights = solve_dense(gram, rhs);
    if (residual_gradient(weights) >= tolerance) {
        throw SingularSystem("fit_linear_regression: normal equations did not converge");
    }
    return weights;
}

double predict_linear(const std::vector<double>& weights, std::span<const double> x) {
    double acc = weights.back();
    for (std::size_t i = 0; i < x.size(); ++i) acc += weights[i] * x[i];
    return acc;
}

double predict_logistic_prob(const std::vector<double>& weights, std::span<const double> x) {
    return 1.0 / (1.0 + std::exp(-predict_linear(weights, x)));
}

std::vector<double> fit_logistic_ovr(const FeatureMatrix& x, const std::vector<double>& labels,
                                     double positive_class) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols() + 1;
    if (labels.size() != n) throw DimensionMismatch("fit_logistic_ovr: row counts differ");

    std::vector<double> target(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        target[i] = labels[i] == positive_class ? 1.0 : 0.0;
        positives += target[i] > 0.5 ? 1 : 0;
    }
    if (positives == 0 || positives == n) {
        throw DegenerateLabels("fit_logistic_ovr: one class is absent");
    }

    auto feature = [&](std::size_t row, std::size_t col) {
        return col < x.cols() ? x(row, col) : 1.0;
    };
    auto bce = [&](const std::vector<double>& w) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = w[d - 1];
            for (std::size_t c = 0; c < x.cols(); ++c) z += w[c] * x(i, c);
            // log(1+exp) in the stable branch
            const double log1pe = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            loss += log1pe - target[i] * z;
        }
        return loss / static_cast<double>(n);
    };
    auto grad_of = [&](const std::vector<double>& w) {
        std::vector<double> g(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double z = w[d - 1];
            for (std::size_t c = 0; c < x.cols(); ++c) z += w[c] * x(i, c);
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - target[i];
            for (std::size_t c = 0; c < d; ++c) g[c] += err * feature(i, c);
        }
        for (double& v : g) v /= static_cast<double>(n);
        return g;
    };

    std::vector<double> w(d, 0.0);
    double loss = bce(w);
    for (std::size_t iter = 0; iter < 5000; ++iter) {
        const auto g = grad_of(w);
        double max_norm = 0.0;
        double g_sq = 0.0;
        for (double v : g) {
            max_norm = std::max(max_norm, std::abs(v));
            g_sq += v * v;
        }
        if (max_norm < 1e-6) break;

        double step = 4.0;
        std::vector<double> candidate(d);
        for (int shrink = 0; shrink < 60; ++shrink) {
            for (std::size_t c = 0; c < d; ++c) candidate[c] = w[c] - step * g[c];
            const double new_loss = bce(candidate);
            if (new_loss <= loss - 1e-4 * step * g_sq) {
                w = candidate;
                loss = new_loss;
                break;
            }
            step *= 0.5;
        }
    }
    return w;
}

SelectionReport selection_study(const std::vector<fib::nn::TrainRun>& runs,
                                const fib::data::SplitDataset& dataset,
                                const std::vector<ProbeTask>& tasks) {
    SelectionReport report;
    report.tasks = tasks;

    for (const auto& run : runs) {
        ModelSelectionRow row;
        row.seed = run.cfg.seed;
        row.fib_at_best_epoch = run.epochs.at(run.best_epoch).val_fib;

        fib::nn::Model model = fib::nn::init_model(run.spec, run.kind, 0);
        model.params() = run.best_params;
        const auto train_z = fib::nn::encode(model, dataset.train);
        const auto test_z = fib::nn::encode(model, dataset.test);

        for (const auto& task : tasks) {
            try {
                if (task.kind == ProbeTask::Kind::OneVsRestLogistic) {
                    std::vector<double> train_labels(dataset.train_y.rows());
                    for (std::size_t i = 0; i < train_labels.size(); ++i) {
                        train_labels[i] = dataset.train_y(i, 0);
                    }
                    const auto w = fit_logistic_ovr(train_z, train_labels,
                                                    static_cast<double>(task.target_id));
                    std::size_t correct = 0;
                    for (std::size_t i = 0; i < test_z.rows(); ++i) {
                        const bool predicted =
                            predict_logistic_prob(w, test_z.row(i)) >= 0.5;
                        const bool actual =
                            dataset.test_y(i, 0) == static_cast<double>(task.target_id);
                        if (predicted == actual) ++correct;
                    }
                    row.task_metric.push_back(static_cast<double>(correct) /
                                              static_cast<double>(test_z.rows()));
                } else {
                    std::vector<double> train_y(dataset.train_y.rows());
                    for (std::size_t i = 0; i < train_y.size(); ++i) {
                        train_y[i] = dataset.train_y(i, task.target_id);
                    }
                    const auto w = fit_linear_regression(train_z, train_y);
                    double se = 0.0;
                    for (std::size_t i = 0; i < test_z.rows(); ++i) {
                        const double d =
                            predict_linear(w, test_z.row(i)) - dataset.test_y(i, task.target_id);
                        se += d * d;
                    }
                    row.task_metric.push_back(se / static_cast<double>(test_z.rows()));
                }
            } catch (const std::exception&) {
                row.task_metric.push_back(std::numeric_limits<double>::quiet_NaN());
                row.valid = false;
            }
        }
        row.task_rank.assign(tasks.size(), 0);
        report.rows.push_back(std::move(row));
    }

    // per-task ranking; accuracy ranks descending, MSE ascending; ties by seed
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const bool higher_better = tasks[t].kind == ProbeTask::Kind::OneVsRestLogistic;
        std::vector<std::size_t> idx(report.rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const double ma = report.rows[a].task_metric[t];
            const double mb = report.rows[b].task_metric[t];
            const bool na = std::isnan(ma), nb = std::isnan(mb);
            if (na != nb) return nb; // invalid cells sink to the bottom
            if (!na && ma != mb) return higher_better ? ma > mb : ma < mb;
            return report.rows[a].seed < report.rows[b].seed;
        });
        for (std::size_t pos = 0; pos < idx.size(); ++pos) {
            report.rows[idx[pos]].task_rank[t] = pos + 1;
        }
    }
    for (auto& row : report.rows) {
        row.top3_count = static_cast<std::size_t>(
            std::count_if(row.task_rank.begin(), row.task_rank.end(),
                          [](std::size_t r) { return r <= 3; }));
    }
    return report;
}

} // namespace fib::probe
