#pragma once

#include <string>
#include <vector>

#include "fib/core.hpp"
#include "fib/datalab.hpp"
#include "fib/grouping.hpp"
#include "fib/neural.hpp"

#include "json.hpp"

namespace fib::io {

/// 17 significant digits: enough to round-trip any double exactly.
std::string render_double(double v);

nlohmann::json report_to_json(const FibReport& report);

nlohmann::json grouping_to_json(const GroupingSpec& spec);
GroupingSpec grouping_from_json(const nlohmann::json& j);

/// One row per epoch: epoch, train_loss, val_loss, val_mse, val_fib,
/// then one grouped-FIB column per spec.
void write_train_run_csv(const std::string& path, const fib::nn::TrainRun& run,
                         const std::vector<GroupingSpec>& specs);

void write_noise_csv(const std::string& path,
                     const std::vector<fib::data::NoiseResultRow>& rows);
nlohmann::json noise_summary_json(const std::vector<fib::data::FractionQuantiles>& quantiles);

/// Run manifest written beside every output directory: command, flags,
/// seed, version.
void write_manifest(const std::string& dir, const std::string& command,
                    const nlohmann::json& flags, std::uint64_t seed);

} // namespace fib::io
