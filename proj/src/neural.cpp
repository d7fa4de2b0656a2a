#include "fib/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "fib/core.hpp"
#include "fib/datalab.hpp"
#include "fib/errors.hpp"

#include "json.hpp"

namespace fib::nn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "tanh") return Activation::Tanh;
    if (s == "identity") return Activation::Identity;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(ModelKind k) {
    return k == ModelKind::AE ? "ae" : "vae";
}

namespace {

double apply_act(Activation a, double z) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Identity: return z;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// derivative expressed through the activation output
double act_deriv(Activation a, double out) {
    switch (a) {
        case Activation::ReLU: return out > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - out * out;
        case Activation::Identity: return 1.0;
        case Activation::Sigmoid: return out * (1.0 - out);
    }
    return 1.0;
}

} // namespace

Model init_model(const LayerSpec& spec, ModelKind kind, std::uint64_t seed) {
    if (spec.sizes.empty()) throw BadSpec("init_model: empty layer sizes");
    if (spec.input_dim == 0) throw BadSpec("init_model: input_dim must be positive");

    Model model;
    model.spec_ = spec;
    model.kind_ = kind;

    const std::size_t latent = spec.sizes.back();
    std::vector<std::pair<std::size_t, std::size_t>> shapes; // (in, out)
    std::vector<Activation> acts;

    // encoder
    std::size_t prev = spec.input_dim;
    for (std::size_t i = 0; i + 1 < spec.sizes.size(); ++i) {
        shapes.emplace_back(prev, spec.sizes[i]);
        acts.push_back(spec.hidden);
        prev = spec.sizes[i];
    }
    // latent layer is linear; a VAE emits mean and log-variance pairs
    shapes.emplace_back(prev, kind == ModelKind::VAE ? 2 * latent : latent);
    acts.push_back(Activation::Identity);
    model.encoder_layers_ = shapes.size();

    // mirrored decoder
    prev = latent;
    for (std::size_t i = spec.sizes.size() - 1; i-- > 0;) {
        shapes.emplace_back(prev, spec.sizes[i]);
        acts.push_back(spec.hidden);
        prev = spec.sizes[i];
    }
    shapes.emplace_back(prev, spec.input_dim);
    acts.push_back(spec.output);

    std::size_t offset = 0;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        Model::LayerMeta meta;
        meta.in = shapes[l].first;
        meta.out = shapes[l].second;
        meta.act = acts[l];
        meta.w_offset = offset;
        offset += meta.in * meta.out;
        meta.b_offset = offset;
        offset += meta.out;
        model.layers_.push_back(meta);
    }

    model.params_.assign(offset, 0.0);
    std::mt19937_64 rng(seed);
    for (const auto& meta : model.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(meta.in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < meta.in * meta.out; ++i) {
            model.params_[meta.w_offset + i] = dist(rng);
        }
    }
    return model;
}

namespace {

struct Cache {
    std::vector<Matrix> outputs; // post-activation per layer
    Matrix mu, logvar, eps, z;   // VAE pieces
};

// y = x W^T + b, activation applied; W is out x in row-major
Matrix affine_forward(const Matrix& x, const std::vector<double>& params,
                      const Model::LayerMeta& meta) {
    Matrix y(x.rows(), meta.out);
    const double* w = params.data() + meta.w_offset;
    const double* b = params.data() + meta.b_offset;
    for (std::size_t n = 0; n < x.rows(); ++n) {
        const auto xn = x.row(n);
        auto yn = y.row(n);
        for (std::size_t o = 0; o < meta.out; ++o) {
            double acc = b[o];
            const double* wo = w + o * meta.in;
            for (std::size_t i = 0; i < meta.in; ++i) acc += wo[i] * xn[i];
            yn[o] = apply_act(meta.act, acc);
        }
    }
    return y;
}

// accumulates parameter gradients and returns the input delta;
// `delta` arrives on the activation output and is folded through act'
Matrix affine_backward(const Matrix& input, const Matrix& output, Matrix delta,
                       const std::vector<double>& params, const Model::LayerMeta& meta,
                       std::vector<double>& grad) {
    for (std::size_t n = 0; n < delta.rows(); ++n) {
        auto dn = delta.row(n);
        const auto on = output.row(n);
        for (std::size_t o = 0; o < meta.out; ++o) dn[o] *= act_deriv(meta.act, on[o]);
    }
    double* gw = grad.data() + meta.w_offset;
    double* gb = grad.data() + meta.b_offset;
    const double* w = params.data() + meta.w_offset;
    Matrix dx(input.rows(), meta.in);
    for (std::size_t n = 0; n < input.rows(); ++n) {
        const auto xn = input.row(n);
        const auto dn = delta.row(n);
        auto dxn = dx.row(n);
        for (std::size_t o = 0; o < meta.out; ++o) {
            const double d = dn[o];
            gb[o] += d;
            double* gwo = gw + o * meta.in;
            const double* wo = w + o * meta.in;
            for (std::size_t i = 0; i < meta.in; ++i) {
                gwo[i] += d * xn[i];
                dxn[i] += d * wo[i];
            }
        }
    }
    return dx;
}

ForwardResult run_forward(const Model& model, const FeatureMatrix& batch,
                          const FeatureMatrix* noise, Cache* cache) {
    if (batch.cols() != model.spec().input_dim) {
        throw DimensionMismatch("forward: batch width does not match input_dim");
    }
    const std::size_t n = batch.rows();
    const std::size_t latent = model.latent_dim();

    Matrix current = batch;
    Cache local;
    Cache& c = cache ? *cache : local;
    c.outputs.clear();

    ForwardResult result;
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
        if (model.kind() == ModelKind::VAE && l == model.encoder_layer_count()) {
            // split encoder head into mean / log-variance, reparameterize
            c.mu = Matrix(n, latent);
            c.logvar = Matrix(n, latent);
            c.z = Matrix(n, latent);
            c.eps = Matrix(n, latent);
            double kl = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < latent; ++j) {
                    const double mu = current(i, j);
                    const double lv = current(i, latent + j);
                    const double e = noise ? (*noise)(i, j) : 0.0;
                    c.mu(i, j) = mu;
                    c.logvar(i, j) = lv;
                    c.eps(i, j) = e;
                    c.z(i, j) = mu + std::exp(0.5 * lv) * e;
                    kl += 0.5 * (std::exp(lv) + mu * mu - 1.0 - lv);
                }
            }
            result.kl = kl / static_cast<double>(n);
            result.latent = c.z;
            current = c.z;
        }
        current = affine_forward(current, model.params(), model.layers()[l]);
        c.outputs.push_back(current);
        if (model.kind() == ModelKind::AE && l + 1 == model.encoder_layer_count()) {
            result.latent = current;
        }
    }
    result.reconstruction = std::move(current);
    return result;
}

} // namespace

ForwardResult forward(const Model& model, const FeatureMatrix& batch, std::mt19937_64& rng) {
    if (model.kind() == ModelKind::AE) return run_forward(model, batch, nullptr, nullptr);
    Matrix noise(batch.rows(), model.latent_dim());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : noise.data()) v = gauss(rng);
    return run_forward(model, batch, &noise, nullptr);
}

ForwardResult forward_fixed(const Model& model, const FeatureMatrix& batch,
                            const FeatureMatrix* noise) {
    return run_forward(model, batch, noise, nullptr);
}

FeatureMatrix encode(const Model& model, const FeatureMatrix& data) {
    if (data.cols() != model.spec().input_dim) {
        throw DimensionMismatch("encode: width does not match input_dim");
    }
    Matrix current = data;
    for (std::size_t l = 0; l < model.encoder_layer_count(); ++l) {
        current = affine_forward(current, model.params(), model.layers()[l]);
    }
    if (model.kind() == ModelKind::VAE) {
        const std::size_t latent = model.latent_dim();
        Matrix mu(current.rows(), latent);
        for (std::size_t i = 0; i < current.rows(); ++i) {
            for (std::size_t j = 0; j < latent; ++j) mu(i, j) = current(i, j);
        }
        return mu;
    }
    return current;
}

double loss_on(const Model& model, const FeatureMatrix& batch, const FeatureMatrix* noise,
               double kl_weight) {
    const auto result = run_forward(model, batch, noise, nullptr);
    double se = 0.0;
    for (std::size_t i = 0; i < batch.data().size(); ++i) {
        const double d = result.reconstruction.data()[i] - batch.data()[i];
        se += d * d;
    }
    double loss = se / static_cast<double>(batch.data().size());
    if (model.kind() == ModelKind::VAE) loss += kl_weight * result.kl;
    return loss;
}

std::vector<double> gradient(const Model& model, const FeatureMatrix& batch,
                             const FeatureMatrix* noise, double kl_weight) {
    Cache cache;
    const auto result = run_forward(model, batch, noise, &cache);
    const std::size_t n = batch.rows();
    const auto total = static_cast<double>(batch.data().size());

    std::vector<double> grad(model.params().size(), 0.0);
    Matrix delta(n, batch.cols());
    for (std::size_t i = 0; i < batch.data().size(); ++i) {
        delta.data()[i] = 2.0 * (result.reconstruction.data()[i] - batch.data()[i]) / total;
    }

    const auto& layers = model.layers();
    const std::size_t enc = model.encoder_layer_count();
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix* input;
        if (l == 0) {
            input = &batch;
        } else if (model.kind() == ModelKind::VAE && l == enc) {
            input = &cache.z;
        } else {
            input = &cache.outputs[l - 1];
        }
        delta = affine_backward(*input, cache.outputs[l], std::move(delta), model.params(),
                                layers[l], grad);

        if (model.kind() == ModelKind::VAE && l == enc) {
            // delta now sits on z; route through the reparameterization and
            // add the KL term's gradient on (mu, logvar)
            const std::size_t latent = model.latent_dim();
            Matrix head_delta(n, 2 * latent);
            const double nd = static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < latent; ++j) {
                    const double dz = delta(i, j);
                    const double lv = cache.logvar(i, j);
                    const double mu = cache.mu(i, j);
                    head_delta(i, j) = dz + kl_weight * mu / nd;
                    head_delta(i, latent + j) =
                        dz * cache.eps(i, j) * 0.5 * std::exp(0.5 * lv) +
                        kl_weight * 0.5 * (std::exp(lv) - 1.0) / nd;
                }
            }
            delta = std::move(head_delta);
        }
    }
    return grad;
}

double gradient_check(const Model& model, const FeatureMatrix& batch, std::uint64_t seed) {
    Matrix noise;
    const Matrix* noise_ptr = nullptr;
    if (model.kind() == ModelKind::VAE) {
        noise = Matrix(batch.rows(), model.latent_dim());
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : noise.data()) v = gauss(rng);
        noise_ptr = &noise;
    }

    const double kl_weight = 1.0;
    const auto analytic = gradient(model, batch, noise_ptr, kl_weight);

    Model probe = model;
    constexpr double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t p = 0; p < probe.params().size(); ++p) {
        const double saved = probe.params()[p];
        probe.params()[p] = saved + h;
        const double up = loss_on(probe, batch, noise_ptr, kl_weight);
        probe.params()[p] = saved - h;
        const double down = loss_on(probe, batch, noise_ptr, kl_weight);
        probe.params()[p] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-3});
        max_rel = std::max(max_rel, std::abs(numeric - analytic[p]) / denom);
    }
    return max_rel;
}

double grouped_fib_matrix(const FeatureMatrix& x, const FeatureMatrix& y,
                          const GroupingSpec& spec) {
    if (!x.same_shape(y)) throw DimensionMismatch("grouped_fib_matrix: shapes differ");
    ErrorVector agg(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) agg[j] += std::abs(x(i, j) - y(i, j));
    }
    for (double& v : agg) v /= static_cast<double>(x.rows());
    const auto grouped = group_errors(agg, spec);
    const auto impact = feature_impact(grouped);
    const double fii = feature_impact_imbalance(impact, BalanceErrorKind::MSE);
    return 1.0 - normalize_fii(fii, spec.k, BalanceErrorKind::MSE);
}

TrainRun train(Model& model, const fib::data::SplitDataset& dataset, const TrainConfig& cfg,
               const std::vector<GroupingSpec>& fib_specs) {
    if (dataset.train.cols() != model.spec().input_dim) {
        throw DimensionMismatch("train: dataset width does not match input_dim");
    }

    TrainRun run;
    run.spec = model.spec();
    run.kind = model.kind();
    run.cfg = cfg;

    const std::size_t n_train = dataset.train.rows();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    // separate streams: shuffling and VAE noise must not perturb each other
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 noise_rng(cfg.seed ^ 0x517cc1b727220a95ULL);

    std::vector<double> m1(model.params().size(), 0.0);
    std::vector<double> m2(model.params().size(), 0.0);
    std::size_t step = 0;

    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, n_train);
            Matrix batch(end - start, dataset.train.cols());
            for (std::size_t i = start; i < end; ++i) {
                const auto src = dataset.train.row(order[i]);
                std::copy(src.begin(), src.end(), batch.row(i - start).begin());
            }

            Matrix noise;
            const Matrix* noise_ptr = nullptr;
            if (model.kind() == ModelKind::VAE) {
                noise = Matrix(batch.rows(), model.latent_dim());
                std::normal_distribution<double> gauss(0.0, 1.0);
                for (double& v : noise.data()) v = gauss(noise_rng);
                noise_ptr = &noise;
            }

            const double batch_loss = loss_on(model, batch, noise_ptr, cfg.kl_weight);
            if (!std::isfinite(batch_loss)) {
                throw DivergenceDetected("train: loss became non-finite at epoch " +
                                         std::to_string(epoch));
            }
            epoch_loss += batch_loss * static_cast<double>(batch.rows());
            seen += batch.rows();

            const auto grad = gradient(model, batch, noise_ptr, cfg.kl_weight);
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto& params = model.params();
            for (std::size_t p = 0; p < params.size(); ++p) {
                m1[p] = cfg.beta1 * m1[p] + (1.0 - cfg.beta1) * grad[p];
                m2[p] = cfg.beta2 * m2[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
                params[p] -= cfg.learning_rate * (m1[p] / bc1) /
                             (std::sqrt(m2[p] / bc2) + cfg.epsilon);
            }
        }

        // mean-decoded validation pass
        const auto val = run_forward(model, dataset.val, nullptr, nullptr);
        double se = 0.0;
        for (std::size_t i = 0; i < dataset.val.data().size(); ++i) {
            const double d = val.reconstruction.data()[i] - dataset.val.data()[i];
            se += d * d;
        }
        EpochRecord rec;
        rec.train_loss = epoch_loss / static_cast<double>(seen);
        rec.val_mse = se / static_cast<double>(dataset.val.data().size());
        rec.val_kl = val.kl;
        rec.val_loss = rec.val_mse +
                       (model.kind() == ModelKind::VAE ? cfg.kl_weight * val.kl : 0.0);
        rec.val_fib = fib_matrix(dataset.val, val.reconstruction, BalanceErrorKind::MSE,
                                 MatrixMode::PerFeatureAggregate)
                          .fib;
        for (const auto& gspec : fib_specs) {
            rec.val_grouped_fib.push_back(
                grouped_fib_matrix(dataset.val, val.reconstruction, gspec));
        }
        run.epochs.push_back(std::move(rec));

        if (run.epochs.back().val_loss < best_val) {
            best_val = run.epochs.back().val_loss;
            run.best_epoch = epoch;
            run.best_params = model.params();
        }
    }
    return run;
}

void save_snapshot(const std::string& path, const LayerSpec& spec, ModelKind kind,
                   const std::vector<double>& params) {
    nlohmann::json header;
    header["input_dim"] = spec.input_dim;
    header["sizes"] = spec.sizes;
    header["hidden"] = to_string(spec.hidden);
    header["output"] = to_string(spec.output);
    header["kind"] = to_string(kind);
    header["param_count"] = params.size();
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto len = static_cast<std::uint64_t>(text.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
}

Model load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    const auto header = nlohmann::json::parse(text);

    LayerSpec spec;
    spec.input_dim = header.at("input_dim").get<std::size_t>();
    spec.sizes = header.at("sizes").get<std::vector<std::size_t>>();
    spec.hidden = activation_from_string(header.at("hidden").get<std::string>());
    spec.output = activation_from_string(header.at("output").get<std::string>());
    const ModelKind kind =
        header.at("kind").get<std::string>() == "vae" ? ModelKind::VAE : ModelKind::AE;

    Model model = init_model(spec, kind, 0);
    const auto count = header.at("param_count").get<std::size_t>();
    if (count != model.params().size()) {
        throw std::runtime_error(path + ": parameter count does not match architecture");
    }
    in.read(reinterpret_cast<char*>(model.params().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated parameter block");
    return model;
}

} // namespace fib::nn
