#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fib/grouping.hpp"
#include "fib/matrix.hpp"

namespace fib::data {

struct CsvSchema {
    std::vector<std::string> feature_cols;
    std::vector<std::string> target_cols; // may be empty
};

struct RawDataset {
    Matrix features;
    Matrix targets; // 0 columns when the schema names no targets
};

/// Per-feature z-score statistics fitted on the training split only.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

struct SplitDataset {
    Matrix train, val, test;
    Matrix train_y, val_y, test_y;
    Normalization normalization;
};

RawDataset load_csv(const std::string& path, const CsvSchema& schema);

/// Same parser over an in-memory CSV body (used for the bundled dataset).
RawDataset load_csv_text(const std::string& text, const CsvSchema& schema,
                         const std::string& name = "<memory>");

/// Seeded shuffle, 56/24/20 train/val/test partition, then z-score with
/// statistics from the training split. Zero-variance features map to 0.
SplitDataset split_and_normalize(const RawDataset& raw, std::uint64_t seed);

struct NoiseExperimentSpec {
    std::size_t dim = 1024;
    std::size_t trials = 10000;
    std::vector<double> fractions = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100}; // percent
    double noise_low = -1.0;
    double noise_high = 1.0;
    std::uint64_t seed = 0;
    std::optional<GroupingSpec> grouping;
};

struct NoiseResultRow {
    double fraction = 0.0;
    std::size_t trial = 0;
    double fib = 0.0;
};

/// Per trial: draw a standard-normal base vector, add uniform noise to a
/// ceil(fraction*dim/100)-subset chosen without replacement, score base
/// vs perturbed. Trials use per-(fraction,trial) derived seeds so shards
/// are independent and the run is reproducible.
std::vector<NoiseResultRow> run_noise_experiment(const NoiseExperimentSpec& spec);

/// Quantiles of the scores at one perturbation fraction.
struct FractionQuantiles {
    double fraction = 0.0;
    double p1 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p99 = 0.0;
};

std::vector<FractionQuantiles> summarize_noise(const std::vector<NoiseResultRow>& rows);

} // namespace fib::data
