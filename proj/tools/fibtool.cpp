// Command-line front end: score computation, noise-injection studies,
// simplex verification, training sweeps, and representation-based model
// selection. Every command with an output directory writes a manifest so
// results can be reproduced exactly.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fib/core.hpp"
#include "fib/datalab.hpp"
#include "fib/downstream.hpp"
#include "fib/errors.hpp"
#include "fib/grouping.hpp"
#include "fib/jsonio.hpp"
#include "fib/neural.hpp"
#include "fib/simplex.hpp"

#include "iris_bundled.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fib::Matrix read_plain_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fib::ParseError("cannot open " + path);
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t count = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw fib::ParseError(path + ": cannot parse '" + cell + "'");
            }
            ++count;
        }
        if (cols == 0) {
            cols = count;
        } else if (count != cols) {
            throw fib::ParseError(path + ": ragged row");
        }
        ++rows;
    }
    fib::Matrix m(rows, cols);
    m.data() = std::move(values);
    return m;
}

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const double lo = std::stod(text.substr(0, dots));
        const double hi = std::stod(text.substr(dots + 2));
        for (double f = lo; f <= hi + 1e-9; f += 10.0) out.push_back(f);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
    return out;
}

fib::data::RawDataset load_dataset(const std::string& dataset, const std::string& targets) {
    fib::data::CsvSchema schema;
    if (dataset == "iris") {
        schema.feature_cols = {"sepal_length", "sepal_width", "petal_length", "petal_width"};
        schema.target_cols = {"species"};
        return fib::data::load_csv_text(kBundledIrisCsv, schema, "iris(bundled)");
    }
    // header decides the feature columns; targets are whatever the caller named
    std::ifstream in(dataset);
    if (!in) throw fib::ParseError("cannot open " + dataset);
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();

    std::set<std::string> target_names;
    std::stringstream ts(targets);
    std::string item;
    while (std::getline(ts, item, ',')) {
        if (!item.empty()) target_names.insert(item);
    }
    std::stringstream hs(header);
    while (std::getline(hs, item, ',')) {
        if (target_names.count(item)) {
            schema.target_cols.push_back(item);
        } else {
            schema.feature_cols.push_back(item);
        }
    }
    return fib::data::load_csv(dataset, schema);
}

int run_score(const std::string& x_path, const std::string& y_path, std::size_t groups,
              const std::string& balance, const std::string& mode) {
    const auto x = read_plain_matrix(x_path);
    const auto y = read_plain_matrix(y_path);
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw fib::DimensionMismatch("score: input shapes differ");
    }
    const auto kind = fib::balance_kind_from_string(balance);

    if (mode == "per-row") {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            fib::FibReport report;
            if (groups > 0) {
                fib::GroupingSpec spec;
                spec.k = groups;
                report = fib::grouped_fib(x.row_vector(i), y.row_vector(i), spec, kind);
            } else {
                report = fib::fib_score(x.row_vector(i), y.row_vector(i), kind);
            }
            std::cout << fib::io::report_to_json(report).dump() << "\n";
        }
        return 0;
    }

    fib::FibReport report = fib::fib_matrix(x, y, kind, fib::MatrixMode::PerFeatureAggregate);
    if (groups > 0) {
        fib::GroupingSpec spec;
        spec.k = groups;
        report.internal_error = fib::group_errors(report.internal_error, spec);
        report.impact = fib::feature_impact(report.internal_error);
        report.k = spec.k;
        report.fii = fib::feature_impact_imbalance(report.impact, kind);
        report.nfii = fib::normalize_fii(report.fii, report.k, kind);
        report.fib = 1.0 - report.nfii;
    }
    std::cout << fib::io::report_to_json(report).dump() << "\n";
    return 0;
}

int run_verify_simplex(std::size_t m_max, std::size_t samples, std::uint64_t seed) {
    json reports = json::array();
    try {
        for (std::size_t m = 2; m <= m_max; ++m) {
            const auto r = fib::verify_theorem_max(m, samples, seed + m);
            reports.push_back({{"m", r.m},
                               {"phi_bound", r.phi_bound},
                               {"psi_bound", r.psi_bound},
                               {"max_phi_observed", r.max_phi_observed},
                               {"max_psi_observed", r.max_psi_observed},
                               {"vertex_attains", r.vertex_attains}});
        }
    } catch (const fib::VerificationFailure& e) {
        std::cout << json{{"verified", false}, {"error", e.what()}}.dump(2) << "\n";
        return 1;
    }
    std::cout << json{{"verified", true}, {"reports", reports}}.dump(2) << "\n";
    return 0;
}

int run_noise(std::size_t dim, std::size_t trials, const std::string& fractions,
              std::size_t groups, std::uint64_t seed, const std::string& out_dir) {
    fib::data::NoiseExperimentSpec spec;
    spec.dim = dim;
    spec.trials = trials;
    spec.fractions = parse_fractions(fractions);
    spec.seed = seed;
    if (groups > 0) {
        fib::GroupingSpec g;
        g.k = groups;
        spec.grouping = g;
    }

    fs::create_directories(out_dir);
    const auto rows = fib::data::run_noise_experiment(spec);
    fib::io::write_noise_csv((fs::path(out_dir) / "results.csv").string(), rows);
    const auto summary = fib::data::summarize_noise(rows);
    std::ofstream sum(fs::path(out_dir) / "summary.json");
    sum << fib::io::noise_summary_json(summary).dump(2) << "\n";

    json flags{{"dim", dim},    {"trials", trials}, {"fractions", fractions},
               {"groups", groups}, {"out", out_dir}};
    fib::io::write_manifest(out_dir, "noise", flags, seed);
    return 0;
}

struct TrainFlags {
    std::string dataset = "iris";
    std::string targets;
    std::string layers = "4,2";
    std::string kind = "ae";
    std::size_t epochs = 100;
    double lr = 1e-3;
    std::size_t batch = 32;
    std::size_t seeds = 1;
    std::uint64_t seed_base = 0;
    std::uint64_t split_seed = 0;
    std::string fib_groups;
    std::string hidden = "relu";
    std::string output_act = "identity";
    double kl_weight = 1.0;
    std::string out_dir = "out";
};

int run_train(const TrainFlags& f) {
    const auto raw = load_dataset(f.dataset, f.targets);
    const auto ds = fib::data::split_and_normalize(raw, f.split_seed);

    fib::nn::LayerSpec spec;
    spec.input_dim = ds.train.cols();
    spec.sizes = parse_sizes(f.layers);
    spec.hidden = fib::nn::activation_from_string(f.hidden);
    spec.output = fib::nn::activation_from_string(f.output_act);
    const auto kind = f.kind == "vae" ? fib::nn::ModelKind::VAE : fib::nn::ModelKind::AE;

    std::vector<fib::GroupingSpec> gspecs;
    if (!f.fib_groups.empty()) {
        for (std::size_t k : parse_sizes(f.fib_groups)) {
            fib::GroupingSpec g;
            g.k = k;
            gspecs.push_back(g);
        }
    }

    fs::create_directories(f.out_dir);
    double sum_final_fib = 0.0, sum_final_mse = 0.0;
    for (std::size_t i = 0; i < f.seeds; ++i) {
        const std::uint64_t seed = f.seed_base + i;
        fib::nn::TrainConfig cfg;
        cfg.learning_rate = f.lr;
        cfg.epochs = f.epochs;
        cfg.batch_size = f.batch;
        cfg.seed = seed;
        cfg.kl_weight = f.kl_weight;

        auto model = fib::nn::init_model(spec, kind, seed);
        const auto run = fib::nn::train(model, ds, cfg, gspecs);

        const std::string tag = std::to_string(seed);
        fib::io::write_train_run_csv((fs::path(f.out_dir) / ("run_" + tag + ".csv")).string(),
                                     run, gspecs);
        fib::nn::save_snapshot((fs::path(f.out_dir) / ("snapshot_" + tag + ".bin")).string(),
                               run.spec, run.kind, run.best_params);
        json meta{{"seed", seed},
                  {"best_epoch", run.best_epoch},
                  {"fib_at_best_epoch", run.epochs[run.best_epoch].val_fib},
                  {"val_loss_at_best_epoch", run.epochs[run.best_epoch].val_loss},
                  {"snapshot", "snapshot_" + tag + ".bin"}};
        std::ofstream mf(fs::path(f.out_dir) / ("run_" + tag + ".json"));
        mf << meta.dump(2) << "\n";

        sum_final_fib += run.epochs.back().val_fib;
        sum_final_mse += run.epochs.back().val_mse;
    }

    json summary{{"seeds", f.seeds},
                 {"mean_final_val_fib", sum_final_fib / static_cast<double>(f.seeds)},
                 {"mean_final_val_mse", sum_final_mse / static_cast<double>(f.seeds)}};
    std::ofstream sf(fs::path(f.out_dir) / "sweep_summary.json");
    sf << summary.dump(2) << "\n";

    json flags{{"dataset", f.dataset}, {"targets", f.targets},   {"layers", f.layers},
               {"kind", f.kind},       {"epochs", f.epochs},     {"lr", f.lr},
               {"batch", f.batch},     {"seeds", f.seeds},       {"split_seed", f.split_seed},
               {"fib_groups", f.fib_groups}, {"hidden", f.hidden}, {"output", f.output_act},
               {"kl_weight", f.kl_weight}};
    fib::io::write_manifest(f.out_dir, "train", flags, f.seed_base);
    return 0;
}

std::vector<fib::probe::ProbeTask> auto_tasks(const fib::data::SplitDataset& ds) {
    std::vector<fib::probe::ProbeTask> tasks;
    if (ds.train_y.cols() == 0) throw fib::MissingColumn("select: dataset has no targets");
    if (ds.train_y.cols() == 1) {
        // integer-looking single column: one-vs-rest classification per class
        std::set<double> classes;
        bool integral = true;
        for (std::size_t i = 0; i < ds.train_y.rows(); ++i) {
            const double v = ds.train_y(i, 0);
            if (v != std::floor(v)) integral = false;
            classes.insert(v);
        }
        if (integral && classes.size() <= 10) {
            for (double c : classes) {
                tasks.push_back({fib::probe::ProbeTask::Kind::OneVsRestLogistic,
                                 static_cast<std::size_t>(c)});
            }
            return tasks;
        }
    }
    for (std::size_t j = 0; j < ds.train_y.cols(); ++j) {
        tasks.push_back({fib::probe::ProbeTask::Kind::LinearRegression, j});
    }
    return tasks;
}

int run_select(const std::string& runs_dir, const std::string& dataset,
               const std::string& targets, std::uint64_t split_seed,
               const std::string& out_dir) {
    const auto raw = load_dataset(dataset, targets);
    const auto ds = fib::data::split_and_normalize(raw, split_seed);

    std::vector<fib::nn::TrainRun> runs;
    std::vector<fs::path> metas;
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") {
            metas.push_back(entry.path());
        }
    }
    std::sort(metas.begin(), metas.end());
    for (const auto& meta_path : metas) {
        std::ifstream mf(meta_path);
        json meta = json::parse(mf);
        const auto model = fib::nn::load_snapshot(
            (fs::path(runs_dir) / meta.at("snapshot").get<std::string>()).string());

        fib::nn::TrainRun run;
        run.spec = model.spec();
        run.kind = model.kind();
        run.cfg.seed = meta.at("seed").get<std::uint64_t>();
        run.best_params = model.params();
        run.best_epoch = 0;
        fib::nn::EpochRecord rec;
        rec.val_fib = meta.at("fib_at_best_epoch").get<double>();
        run.epochs.push_back(rec);
        runs.push_back(std::move(run));
    }
    if (runs.empty()) throw fib::ParseError("select: no run_*.json found in " + runs_dir);

    const auto tasks = auto_tasks(ds);
    const auto report = fib::probe::selection_study(runs, ds, tasks);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "selection.csv");
    csv << "seed,fib";
    for (std::size_t t = 0; t < tasks.size(); ++t) csv << ",metric_" << t;
    for (std::size_t t = 0; t < tasks.size(); ++t) csv << ",rank_" << t;
    csv << ",top3_count\n";
    for (const auto& row : report.rows) {
        csv << row.seed << ',' << fib::io::render_double(row.fib_at_best_epoch);
        for (double m : row.task_metric) csv << ',' << fib::io::render_double(m);
        for (std::size_t r : row.task_rank) csv << ',' << r;
        csv << ',' << row.top3_count << "\n";
    }

    json summary;
    summary["n_models"] = report.rows.size();
    summary["n_tasks"] = tasks.size();
    {
        double fib_hi = 0.0, fib_lo = 0.0;
        std::size_t n_hi = 0, n_lo = 0;
        for (const auto& row : report.rows) {
            if (row.top3_count >= 2) {
                fib_hi += row.fib_at_best_epoch;
                ++n_hi;
            } else if (row.top3_count == 0) {
                fib_lo += row.fib_at_best_epoch;
                ++n_lo;
            }
        }
        summary["mean_fib_top3_ge2"] = n_hi ? json(fib_hi / static_cast<double>(n_hi)) : json();
        summary["mean_fib_top3_eq0"] = n_lo ? json(fib_lo / static_cast<double>(n_lo)) : json();
    }
    std::ofstream sf(fs::path(out_dir) / "selection_summary.json");
    sf << summary.dump(2) << "\n";

    json flags{{"runs", runs_dir}, {"dataset", dataset}, {"targets", targets},
               {"split_seed", split_seed}};
    fib::io::write_manifest(out_dir, "select", flags, split_seed);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature impact balance toolkit"};
    app.require_subcommand(1);

    // score
    auto* score = app.add_subcommand("score", "Score CSV matrix pairs");
    std::string x_path, y_path, balance = "mse", mode = "per-row";
    std::size_t groups = 0;
    score->add_option("--x", x_path, "left CSV matrix")->required();
    score->add_option("--y", y_path, "right CSV matrix")->required();
    score->add_option("--groups", groups, "group count (0 = ungrouped)");
    score->add_option("--balance", balance)->check(CLI::IsMember({"mse", "mae"}));
    score->add_option("--mode", mode)->check(CLI::IsMember({"per-row", "aggregate"}));

    // verify-simplex
    auto* verify = app.add_subcommand("verify-simplex", "Certify the imbalance maxima");
    std::size_t m_max = 16, samples = 100000;
    std::uint64_t vseed = 0;
    verify->add_option("--m-max", m_max)->check(CLI::Range(std::size_t{2}, std::size_t{16}));
    verify->add_option("--samples", samples);
    verify->add_option("--seed", vseed);

    // noise
    auto* noise = app.add_subcommand("noise", "Noise-injection study");
    std::size_t dim = 1024, trials = 10000, ngroups = 0;
    std::string fractions = "10..100", nout = "noise_out";
    std::uint64_t nseed = 0;
    noise->add_option("--dim", dim);
    noise->add_option("--trials", trials);
    noise->add_option("--fractions", fractions, "comma list or lo..hi (step 10)");
    noise->add_option("--groups", ngroups);
    noise->add_option("--seed", nseed);
    noise->add_option("--out", nout)->required();

    // train
    auto* train = app.add_subcommand("train", "Autoencoder training sweep");
    TrainFlags tf;
    train->add_option("--dataset", tf.dataset, "CSV path or 'iris' for the bundled copy");
    train->add_option("--targets", tf.targets, "comma list of target column names");
    train->add_option("--layers", tf.layers);
    train->add_option("--kind", tf.kind)->check(CLI::IsMember({"ae", "vae"}));
    train->add_option("--epochs", tf.epochs);
    train->add_option("--lr", tf.lr);
    train->add_option("--batch", tf.batch);
    train->add_option("--seeds", tf.seeds);
    train->add_option("--seed-base", tf.seed_base);
    train->add_option("--split-seed", tf.split_seed);
    train->add_option("--fib-groups", tf.fib_groups, "comma list of group counts");
    train->add_option("--hidden", tf.hidden)
        ->check(CLI::IsMember({"relu", "tanh", "identity"}));
    train->add_option("--output", tf.output_act)
        ->check(CLI::IsMember({"identity", "sigmoid"}));
    train->add_option("--kl-weight", tf.kl_weight);
    train->add_option("--out", tf.out_dir)->required();

    // select
    auto* select = app.add_subcommand("select", "Model selection study over trained runs");
    std::string runs_dir, sdataset = "iris", stargets, sout = "select_out";
    std::uint64_t sseed = 0;
    select->add_option("--runs", runs_dir)->required();
    select->add_option("--dataset", sdataset);
    select->add_option("--targets", stargets);
    select->add_option("--split-seed", sseed);
    select->add_option("--out", sout)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (score->parsed()) return run_score(x_path, y_path, groups, balance, mode);
        if (verify->parsed()) return run_verify_simplex(m_max, samples, vseed);
        if (noise->parsed()) return run_noise(dim, trials, fractions, ngroups, nseed, nout);
        if (train->parsed()) return run_train(tf);
        if (select->parsed()) return run_select(runs_dir, sdataset, stargets, sseed, sout);
    } catch (const fib::VerificationFailure& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
