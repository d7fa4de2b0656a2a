#include "fib/jsonio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fib::io {

std::string render_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::json report_to_json(const FibReport& report) {
    nlohmann::json j;
    j["fib"] = report.fib;
    j["nfii"] = report.nfii;
    j["fii"] = report.fii;
    j["k"] = report.k;
    j["balance_kind"] = to_string(report.balance_kind);
    if (report.has_mode) j["mode"] = to_string(report.mode);
    return j;
}

nlohmann::json grouping_to_json(const GroupingSpec& spec) {
    nlohmann::json j;
    j["k"] = spec.k;
    j["aggregation"] = to_string(spec.aggregation);
    j["reduction"] = to_string(spec.reduction);
    if (spec.aggregation == Aggregation::ExplicitAssignment) j["assignment"] = spec.assignment;
    return j;
}

GroupingSpec grouping_from_json(const nlohmann::json& j) {
    GroupingSpec spec;
    spec.k = j.at("k").get<std::size_t>();
    spec.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
    spec.reduction = reduction_from_string(j.at("reduction").get<std::string>());
    if (j.contains("assignment")) {
        spec.assignment = j.at("assignment").get<std::vector<std::size_t>>();
    }
    return spec;
}

void write_train_run_csv(const std::string& path, const fib::nn::TrainRun& run,
                         const std::vector<GroupingSpec>& specs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,train_loss,val_loss,val_mse,val_fib";
    for (const auto& spec : specs) out << ",val_fib_g" << spec.k;
    out << "\n";
    for (std::size_t e = 0; e < run.epochs.size(); ++e) {
        const auto& rec = run.epochs[e];
        out << e << ',' << render_double(rec.train_loss) << ',' << render_double(rec.val_loss)
            << ',' << render_double(rec.val_mse) << ',' << render_double(rec.val_fib);
        for (double g : rec.val_grouped_fib) out << ',' << render_double(g);
        out << "\n";
    }
}

void write_noise_csv(const std::string& path,
                     const std::vector<fib::data::NoiseResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "fraction,trial,fib\n";
    for (const auto& row : rows) {
        out << render_double(row.fraction) << ',' << row.trial << ',' << render_double(row.fib)
            << "\n";
    }
}

nlohmann::json noise_summary_json(const std::vector<fib::data::FractionQuantiles>& quantiles) {
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& q : quantiles) {
        summary.push_back({{"fraction", q.fraction},
                           {"p1", q.p1},
                           {"p25", q.p25},
                           {"p50", q.p50},
                           {"p75", q.p75},
                           {"p99", q.p99}});
    }
    return summary;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const nlohmann::json& flags, std::uint64_t seed) {
    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["flags"] = flags;
    manifest["seed"] = seed;
    manifest["version"] = "0.1.0";
    std::ofstream out(std::filesystem::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

} // namespace fib::io
