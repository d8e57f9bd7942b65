#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairad/matrix.hpp"

namespace fairad {

enum class Activation { Identity, ReLU, Tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One affine map followed by an elementwise activation.
struct MlpLayer {
  Matrix weights;            // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::Identity;

  MlpLayer() = default;
  MlpLayer(std::size_t out_dim, std::size_t in_dim, Activation act)
      : weights(out_dim, in_dim), bias(out_dim, 0.0), activation(act) {}

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
  void validate() const;
};

/// Autoencoder G = g_d ∘ g_e. The encoder maps R^d -> R^r, the decoder
/// maps R^r -> R^d; layer widths must chain.
struct AutoencoderModel {
  std::vector<MlpLayer> encoder;
  std::vector<MlpLayer> decoder;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  void validate() const;
  std::size_t parameter_count() const;

  bool operator==(const AutoencoderModel& other) const;
};

/// Hidden widths used when a config does not specify an architecture:
/// [32, 32] for d <= 8, [128] otherwise.
std::vector<std::size_t> default_hidden_widths(std::size_t input_dim);

/// Builds a model whose encoder stacks the given hidden widths (ReLU unless
/// overridden) and whose decoder is a single identity-activated affine map
/// back to the input dimension. Weights are Glorot-uniform, biases zero.
AutoencoderModel make_autoencoder(std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden_widths,
                                  std::uint64_t seed,
                                  Activation hidden_activation = Activation::ReLU);

/// Per-layer record of inputs and activated outputs; sufficient for exact
/// backpropagation through both stacks.
struct ForwardCache {
  std::vector<Matrix> encoder_inputs;
  std::vector<Matrix> encoder_outputs;
  std::vector<Matrix> decoder_inputs;
  std::vector<Matrix> decoder_outputs;

  const Matrix& z() const { return encoder_outputs.back(); }
  const Matrix& recon() const { return decoder_outputs.back(); }
};

ForwardCache forward(const AutoencoderModel& model, const Matrix& batch);

/// Gradients mirroring the model's parameter shapes.
struct GradientSet {
  std::vector<Matrix> encoder_weights;
  std::vector<std::vector<double>> encoder_bias;
  std::vector<Matrix> decoder_weights;
  std::vector<std::vector<double>> decoder_bias;

  static GradientSet zeros_like(const AutoencoderModel& model);
  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double c);
  double max_abs() const;
};

/// Backpropagates the supplied output adjoints: d_recon is dLoss/d(recon),
/// d_z the direct (pre-decoder) dLoss/dz term. Either may be empty, meaning
/// zero. Returns exact analytic parameter gradients.
GradientSet backward(const AutoencoderModel& model, const ForwardCache& cache,
                     const Matrix& d_recon, const Matrix& d_z);

enum class OptMethod { SGD, Adam };

std::string opt_method_name(OptMethod m);
OptMethod opt_method_from_name(const std::string& name);

struct OptimizerState {
  OptMethod method = OptMethod::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_stab = 1e-8;
  long step = 0;
  GradientSet first_moment;
  GradientSet second_moment;
  bool moments_ready = false;

  static OptimizerState sgd(double lr);
  static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                             double epsilon_stab = 1e-8);
};

/// One optimizer step in place; increments the step counter. Throws
/// NumericError naming the offending layer if a gradient entry is non-finite.
void apply_update(AutoencoderModel& model, const GradientSet& grads,
                  OptimizerState& state);

/// Versioned JSON checkpoint; load(save(m)) is bit-identical to m.
void save_model(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model(const std::string& path);

std::string model_to_json_string(const AutoencoderModel& model);
AutoencoderModel model_from_json_string(const std::string& text);

}  // namespace fairad
