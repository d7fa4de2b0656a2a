#include "fib/datalab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fib/core.hpp"
#include "fib/errors.hpp"

namespace fib::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(cell, &consumed);
        if (consumed != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw ParseError("cannot parse '" + cell + "' at row " + std::to_string(row) +
                         ", column '" + col + "'");
    }
}

// splitmix64; used to derive independent per-shard seeds
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t shard_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(seed ^ mix64(a)) ^ mix64(b ^ 0x5851f42d4c957f2dULL));
}

Matrix take_rows(const Matrix& src, const std::vector<std::size_t>& order, std::size_t begin,
                 std::size_t end) {
    Matrix out(end - begin, src.cols());
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < src.cols(); ++j) out(i - begin, j) = src(order[i], j);
    }
    return out;
}

} // namespace

RawDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_csv_text(buffer.str(), schema, path);
}

RawDataset load_csv_text(const std::string& text, const CsvSchema& schema,
                         const std::string& name) {
    const std::string& path = name;
    if (schema.feature_cols.empty()) throw MissingColumn("schema names no feature columns");
    std::istringstream in(text);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_line(line);

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("column '" + name + "' not in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> fidx, tidx;
    for (const auto& c : schema.feature_cols) fidx.push_back(column_index(c));
    for (const auto& c : schema.target_cols) tidx.push_back(column_index(c));

    std::vector<double> fvals, tvals;
    std::size_t rows = 0;
    for (std::size_t row = 1; std::getline(in, line); ++row) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        }
        for (std::size_t j = 0; j < fidx.size(); ++j) {
            fvals.push_back(parse_cell(cells[fidx[j]], row, schema.feature_cols[j]));
        }
        for (std::size_t j = 0; j < tidx.size(); ++j) {
            tvals.push_back(parse_cell(cells[tidx[j]], row, schema.target_cols[j]));
        }
        ++rows;
    }

    RawDataset out;
    out.features = Matrix(rows, fidx.size());
    out.features.data() = std::move(fvals);
    out.targets = Matrix(rows, tidx.size());
    out.targets.data() = std::move(tvals);
    return out;
}

SplitDataset split_and_normalize(const RawDataset& raw, std::uint64_t seed) {
    const std::size_t n = raw.features.rows();
    if (n < 10) throw TooFewRows("split_and_normalize: need at least 10 rows");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_test = static_cast<std::size_t>(std::llround(0.20 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.24 * static_cast<double>(n)));
    const std::size_t n_train = n - n_test - n_val;

    SplitDataset ds;
    ds.train = take_rows(raw.features, order, 0, n_train);
    ds.val = take_rows(raw.features, order, n_train, n_train + n_val);
    ds.test = take_rows(raw.features, order, n_train + n_val, n);
    if (raw.targets.cols() > 0) {
        ds.train_y = take_rows(raw.targets, order, 0, n_train);
        ds.val_y = take_rows(raw.targets, order, n_train, n_train + n_val);
        ds.test_y = take_rows(raw.targets, order, n_train + n_val, n);
    }

    const std::size_t m = raw.features.cols();
    ds.normalization.mean.assign(m, 0.0);
    ds.normalization.std_dev.assign(m, 0.0);
    for (std::size_t i = 0; i < ds.train.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) ds.normalization.mean[j] += ds.train(i, j);
    }
    for (double& v : ds.normalization.mean) v /= static_cast<double>(ds.train.rows());
    for (std::size_t i = 0; i < ds.train.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = ds.train(i, j) - ds.normalization.mean[j];
            ds.normalization.std_dev[j] += d * d;
        }
    }
    for (double& v : ds.normalization.std_dev) {
        v = std::sqrt(v / static_cast<double>(ds.train.rows()));
    }

    auto apply = [&](Matrix& mat) {
        for (std::size_t i = 0; i < mat.rows(); ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double sd = ds.normalization.std_dev[j];
                mat(i, j) = sd > 0.0 ? (mat(i, j) - ds.normalization.mean[j]) / sd : 0.0;
            }
        }
    };
    apply(ds.train);
    apply(ds.val);
    apply(ds.test);
    return ds;
}

std::vector<NoiseResultRow> run_noise_experiment(const NoiseExperimentSpec& spec) {
    std::vector<NoiseResultRow> rows;
    rows.reserve(spec.fractions.size() * spec.trials);

    for (std::size_t fi = 0; fi < spec.fractions.size(); ++fi) {
        const double fraction = spec.fractions[fi];
        const auto n_perturb = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(spec.dim) / 100.0));
        for (std::size_t trial = 0; trial < spec.trials; ++trial) {
            std::mt19937_64 rng(shard_seed(spec.seed, fi, trial));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> noise(spec.noise_low, spec.noise_high);

            FeatureVector base(spec.dim);
            for (double& v : base) v = gauss(rng);

            // Floyd-style reservoir pick of n_perturb distinct indices
            std::vector<std::size_t> all(spec.dim);
            std::iota(all.begin(), all.end(), 0);
            FeatureVector perturbed = base;
            for (std::size_t i = 0; i < n_perturb; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, spec.dim - 1);
                std::swap(all[i], all[pick(rng)]);
                perturbed[all[i]] += noise(rng);
            }

            const double score = spec.grouping
                                     ? grouped_fib(base, perturbed, *spec.grouping).fib
                                     : fib_score(base, perturbed).fib;
            rows.push_back({fraction, trial, score});
        }
    }
    return rows;
}

std::vector<FractionQuantiles> summarize_noise(const std::vector<NoiseResultRow>& rows) {
    std::vector<double> fractions;
    for (const auto& r : rows) {
        if (std::find(fractions.begin(), fractions.end(), r.fraction) == fractions.end()) {
            fractions.push_back(r.fraction);
        }
    }
    auto quantile = [](std::vector<double>& sorted, double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * sorted[lo] + w * sorted[hi];
    };

    std::vector<FractionQuantiles> out;
    for (double f : fractions) {
        std::vector<double> scores;
        for (const auto& r : rows) {
            if (r.fraction == f) scores.push_back(r.fib);
        }
        std::sort(scores.begin(), scores.end());
        FractionQuantiles fq;
        fq.fraction = f;
        fq.p1 = quantile(scores, 0.01);
        fq.p25 = quantile(scores, 0.25);
        fq.p50 = quantile(scores, 0.50);
        fq.p75 = quantile(scores, 0.75);
        fq.p99 = quantile(scores, 0.99);
        out.push_back(fq);
    }
    return out;
}

} // namespace fib::data
