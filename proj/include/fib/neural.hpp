#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fib/grouping.hpp"
#include "fib/matrix.hpp"

namespace fib::data {
struct SplitDataset;
}

namespace fib::nn {

enum class Activation { ReLU, Tanh, Identity, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

enum class ModelKind { AE, VAE };

std::string to_string(ModelKind k);

/// Encoder widths; the decoder mirrors them. The last size is the latent
/// dimension. `hidden` is applied after each non-latent layer on both
/// sides; the latent layer is linear (for a VAE it emits mean and
/// log-variance pairs).
struct LayerSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> sizes;
    Activation hidden = Activation::ReLU;
    Activation output = Activation::Identity;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double kl_weight = 1.0; // VAE only
};

/// Fully connected autoencoder with a flat parameter vector; layer
/// metadata indexes into it.
class Model {
  public:
    struct LayerMeta {
        std::size_t in = 0, out = 0;
        std::size_t w_offset = 0, b_offset = 0;
        Activation act = Activation::Identity;
    };

    Model() = default;

    const LayerSpec& spec() const { return spec_; }
    ModelKind kind() const { return kind_; }
    std::size_t latent_dim() const { return spec_.sizes.back(); }
    std::size_t encoder_layer_count() const { return encoder_layers_; }
    const std::vector<LayerMeta>& layers() const { return layers_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    friend Model init_model(const LayerSpec& spec, ModelKind kind, std::uint64_t seed);

  private:
    LayerSpec spec_;
    ModelKind kind_ = ModelKind::AE;
    std::vector<LayerMeta> layers_; // encoder layers first, then decoder
    std::size_t encoder_layers_ = 0;
    std::vector<double> params_;
};

/// Fan-in-scaled uniform weights, zero biases; deterministic per seed.
Model init_model(const LayerSpec& spec, ModelKind kind, std::uint64_t seed);

struct ForwardResult {
    FeatureMatrix reconstruction;
    FeatureMatrix latent; // sampled code for VAE, code for AE
    double kl = 0.0;      // mean analytic KL to the unit Gaussian (VAE)
};

/// Stochastic forward pass; the VAE draws reparameterization noise from
/// `rng`. AEs ignore it.
ForwardResult forward(const Model& model, const FeatureMatrix& batch, std::mt19937_64& rng);

/// Forward with caller-fixed VAE noise (one row per sample); used by the
/// gradient check so finite differences see a deterministic function.
ForwardResult forward_fixed(const Model& model, const FeatureMatrix& batch,
                            const FeatureMatrix* noise);

/// Deterministic encoding; the VAE uses the mean head.
FeatureMatrix encode(const Model& model, const FeatureMatrix& data);

/// Training loss on a batch: mean squared reconstruction error
/// (+ kl_weight * KL for VAE).
double loss_on(const Model& model, const FeatureMatrix& batch, const FeatureMatrix* noise,
               double kl_weight);

/// Analytic parameter gradient of loss_on; same fixed-noise convention.
std::vector<double> gradient(const Model& model, const FeatureMatrix& batch,
                             const FeatureMatrix* noise, double kl_weight);

/// Max relative error between analytic and central finite-difference
/// gradients (step 1e-5), with VAE noise frozen per `seed`.
double gradient_check(const Model& model, const FeatureMatrix& batch, std::uint64_t seed);

struct EpochRecord {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_mse = 0.0;
    double val_fib = 0.0;
    double val_kl = 0.0;
    std::vector<double> val_grouped_fib; // one per requested grouping spec
};

struct TrainRun {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0; // argmin val_loss
    std::vector<double> best_params;
    LayerSpec spec;
    ModelKind kind = ModelKind::AE;
    TrainConfig cfg;
};

/// Mini-batch Adam over the training split; evaluates validation loss,
/// MSE, aggregate FIB, and grouped FIB after every epoch.
TrainRun train(Model& model, const fib::data::SplitDataset& dataset, const TrainConfig& cfg,
               const std::vector<GroupingSpec>& fib_specs = {});

/// Aggregate-mode FIB with the per-feature errors reduced to groups.
double grouped_fib_matrix(const FeatureMatrix& x, const FeatureMatrix& y,
                          const GroupingSpec& spec);

/// Parameter snapshot: JSON header (architecture) + raw doubles.
void save_snapshot(const std::string& path, const LayerSpec& spec, ModelKind kind,
                   const std::vector<double>& params);
Model load_snapshot(const std::string& path);

} // namespace fib::nn
