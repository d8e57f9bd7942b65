#include "fairad/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fairad/rng.hpp"

namespace fairad {

using nlohmann::json;

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
  }
  throw LookupError("unknown activation enum value");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  throw LookupError("unknown activation: " + name);
}

void MlpLayer::validate() const {
  if (bias.size() != weights.rows()) {
    throw ShapeError("layer bias length " + std::to_string(bias.size()) +
                     " does not match weight rows " + std::to_string(weights.rows()));
  }
}

void AutoencoderModel::validate() const {
  if (encoder.empty() || decoder.empty()) {
    throw ShapeError("autoencoder needs at least one encoder and one decoder layer");
  }
  std::size_t width = input_dim;
  for (const auto& layer : encoder) {
    layer.validate();
    if (layer.in_dim() != width) throw ShapeError("encoder layer width mismatch");
    width = layer.out_dim();
  }
  if (width != hidden_dim) throw ShapeError("encoder output width != hidden_dim");
  for (const auto& layer : decoder) {
    layer.validate();
    if (layer.in_dim() != width) throw ShapeError("decoder layer width mismatch");
    width = layer.out_dim();
  }
  if (width != input_dim) throw ShapeError("decoder output width != input_dim");
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : encoder) n += l.weights.size() + l.bias.size();
  for (const auto& l : decoder) n += l.weights.size() + l.bias.size();
  return n;
}

bool AutoencoderModel::operator==(const AutoencoderModel& other) const {
  auto layers_equal = [](const std::vector<MlpLayer>& a, const std::vector<MlpLayer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i].weights == b[i].weights) || a[i].bias != b[i].bias ||
          a[i].activation != b[i].activation) {
        return false;
      }
    }
    return true;
  };
  return input_dim == other.input_dim && hidden_dim == other.hidden_dim &&
         layers_equal(encoder, other.encoder) && layers_equal(decoder, other.decoder);
}

std::vector<std::size_t> default_hidden_widths(std::size_t input_dim) {
  if (input_dim <= 8) return {32, 32};
  return {128};
}

namespace {

void glorot_init(MlpLayer& layer, Rng& rng) {
  const double fan_in = static_cast<double>(layer.in_dim());
  const double fan_out = static_cast<double>(layer.out_dim());
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : layer.weights.data()) w = rng.uniform(-a, a);
  for (double& b : layer.bias) b = 0.0;
}

}  // namespace

AutoencoderModel make_autoencoder(std::size_t input_dim,
                                  const std::vector<std::size_t>& hidden_widths,
                                  std::uint64_t seed, Activation hidden_activation) {
  if (input_dim == 0) throw ShapeError("input_dim must be positive");
  if (hidden_widths.empty()) throw ShapeError("need at least one hidden width");
  AutoencoderModel model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_widths.back();
  Rng rng(seed);
  std::size_t width = input_dim;
  for (std::size_t h : hidden_widths) {
    MlpLayer layer(h, width, hidden_activation);
    glorot_init(layer, rng);
    model.encoder.push_back(std::move(layer));
    width = h;
  }
  MlpLayer out(input_dim, width, Activation::Identity);
  glorot_init(out, rng);
  model.decoder.push_back(std::move(out));
  model.validate();
  return model;
}

namespace {

void apply_activation(Matrix& m, Activation act) {
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::ReLU:
      for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::Tanh:
      for (double& v : m.data()) v = std::tanh(v);
      return;
  }
}

// d(activation)/d(pre-activation), recoverable from the activated output.
double activation_grad_from_output(double out, Activation act) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return out > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - out * out;
  }
  return 1.0;
}

Matrix layer_forward(const MlpLayer& layer, const Matrix& input) {
  Matrix out(input.rows(), layer.out_dim());
  gemm(false, true, 1.0, input, layer.weights, 0.0, out);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
  }
  apply_activation(out, layer.activation);
  return out;
}

// Backward through one layer: consumes dLoss/d(output), fills the layer's
// parameter gradients, returns dLoss/d(input).
Matrix layer_backward(const MlpLayer& layer, const Matrix& input, const Matrix& output,
                      const Matrix& d_output, Matrix& d_weights,
                      std::vector<double>& d_bias) {
  Matrix d_pre = d_output;
  for (std::size_t i = 0; i < d_pre.rows(); ++i) {
    auto dp = d_pre.row(i);
    auto out = output.row(i);
    for (std::size_t j = 0; j < dp.size(); ++j) {
      dp[j] *= activation_grad_from_output(out[j], layer.activation);
    }
  }
  d_weights = Matrix(layer.out_dim(), layer.in_dim());
  gemm(true, false, 1.0, d_pre, input, 0.0, d_weights);
  d_bias.assign(layer.out_dim(), 0.0);
  for (std::size_t i = 0; i < d_pre.rows(); ++i) {
    auto dp = d_pre.row(i);
    for (std::size_t j = 0; j < dp.size(); ++j) d_bias[j] += dp[j];
  }
  Matrix d_input(input.rows(), input.cols());
  gemm(false, false, 1.0, d_pre, layer.weights, 0.0, d_input);
  return d_input;
}

}  // namespace

ForwardCache forward(const AutoencoderModel& model, const Matrix& batch) {
  model.validate();
  if (batch.cols() != model.input_dim) {
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim));
  }
  ForwardCache cache;
  Matrix current = batch;
  for (const auto& layer : model.encoder) {
    cache.encoder_inputs.push_back(current);
    current = layer_forward(layer, current);
    cache.encoder_outputs.push_back(current);
  }
  for (const auto& layer : model.decoder) {
    cache.decoder_inputs.push_back(current);
    current = layer_forward(layer, current);
    cache.decoder_outputs.push_back(current);
  }
  cache.recon().ensure_finite("forward output");
  return cache;
}

GradientSet GradientSet::zeros_like(const AutoencoderModel& model) {
  GradientSet g;
  for (const auto& l : model.encoder) {
    g.encoder_weights.emplace_back(l.weights.rows(), l.weights.cols());
    g.encoder_bias.emplace_back(l.bias.size(), 0.0);
  }
  for (const auto& l : model.decoder) {
    g.decoder_weights.emplace_back(l.weights.rows(), l.weights.cols());
    g.decoder_bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (encoder_weights.size() != other.encoder_weights.size() ||
      decoder_weights.size() != other.decoder_weights.size()) {
    throw ShapeError("GradientSet+=: layer count mismatch");
  }
  for (std::size_t i = 0; i < encoder_weights.size(); ++i) {
    encoder_weights[i] += other.encoder_weights[i];
    for (std::size_t j = 0; j < encoder_bias[i].size(); ++j) {
      encoder_bias[i][j] += other.encoder_bias[i][j];
    }
  }
  for (std::size_t i = 0; i < decoder_weights.size(); ++i) {
    decoder_weights[i] += other.decoder_weights[i];
    for (std::size_t j = 0; j < decoder_bias[i].size(); ++j) {
      decoder_bias[i][j] += other.decoder_bias[i][j];
    }
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double c) {
  for (auto& m : encoder_weights) m *= c;
  for (auto& b : encoder_bias) {
    for (double& v : b) v *= c;
  }
  for (auto& m : decoder_weights) m *= c;
  for (auto& b : decoder_bias) {
    for (double& v : b) v *= c;
  }
  return *this;
}

double GradientSet::max_abs() const {
  double mx = 0.0;
  auto scan = [&mx](const std::vector<double>& v) {
    for (double x : v) mx = std::max(mx, std::fabs(x));
  };
  for (const auto& m : encoder_weights) scan(m.data());
  for (const auto& b : encoder_bias) scan(b);
  for (const auto& m : decoder_weights) scan(m.data());
  for (const auto& b : decoder_bias) scan(b);
  return mx;
}

GradientSet backward(const AutoencoderModel& model, const ForwardCache& cache,
                     const Matrix& d_recon, const Matrix& d_z) {
  const Matrix& recon = cache.recon();
  const Matrix& z = cache.z();
  if (!d_recon.empty() && !d_recon.same_shape(recon)) {
    throw ShapeError("backward: d_recon shape mismatch");
  }
  if (!d_z.empty() && !d_z.same_shape(z)) {
    throw ShapeError("backward: d_z shape mismatch");
  }

  GradientSet grads = GradientSet::zeros_like(model);

  Matrix current = d_recon.empty() ? Matrix(recon.rows(), recon.cols()) : d_recon;
  for (std::size_t li = model.decoder.size(); li-- > 0;) {
    current = layer_backward(model.decoder[li], cache.decoder_inputs[li],
                             cache.decoder_outputs[li], current,
                             grads.decoder_weights[li], grads.decoder_bias[li]);
  }
  if (!d_z.empty()) current += d_z;
  for (std::size_t li = model.encoder.size(); li-- > 0;) {
    current = layer_backward(model.encoder[li], cache.encoder_inputs[li],
                             cache.encoder_outputs[li], current,
                             grads.encoder_weights[li], grads.encoder_bias[li]);
  }
  return grads;
}

std::string opt_method_name(OptMethod m) {
  return m == OptMethod::SGD ? "sgd" : "adam";
}

OptMethod opt_method_from_name(const std::string& name) {
  if (name == "sgd") return OptMethod::SGD;
  if (name == "adam") return OptMethod::Adam;
  throw LookupError("unknown optimizer: " + name);
}

OptimizerState OptimizerState::sgd(double lr) {
  OptimizerState s;
  s.method = OptMethod::SGD;
  s.learning_rate = lr;
  return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2,
                                    double epsilon_stab) {
  OptimizerState s;
  s.method = OptMethod::Adam;
  s.learning_rate = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon_stab = epsilon_stab;
  return s;
}

namespace {

void check_finite_grads(const GradientSet& grads, const std::string& stack,
                        const std::vector<Matrix>& weights,
                        const std::vector<std::vector<double>>& bias) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].all_finite()) {
      throw NumericError("non-finite weight gradient in " + stack + " layer " +
                         std::to_string(i));
    }
    for (double v : bias[i]) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite bias gradient in " + stack + " layer " +
                           std::to_string(i));
      }
    }
  }
  (void)grads;
}

void adam_update_array(std::vector<double>& param, const std::vector<double>& grad,
                       std::vector<double>& m, std::vector<double>& v,
                       const OptimizerState& s, double bc1, double bc2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon_stab);
  }
}

void sgd_update_array(std::vector<double>& param, const std::vector<double>& grad,
                      double lr) {
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

}  // namespace

void apply_update(AutoencoderModel& model, const GradientSet& grads,
                  OptimizerState& state) {
  if (state.learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (grads.encoder_weights.size() != model.encoder.size() ||
      grads.decoder_weights.size() != model.decoder.size()) {
    throw ShapeError("apply_update: gradient layer count mismatch");
  }
  check_finite_grads(grads, "encoder", grads.encoder_weights, grads.encoder_bias);
  check_finite_grads(grads, "decoder", grads.decoder_weights, grads.decoder_bias);

  if (state.method == OptMethod::SGD) {
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
      sgd_update_array(model.encoder[i].weights.data(),
                       grads.encoder_weights[i].data(), state.learning_rate);
      sgd_update_array(model.encoder[i].bias, grads.encoder_bias[i],
                       state.learning_rate);
    }
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
      sgd_update_array(model.decoder[i].weights.data(),
                       grads.decoder_weights[i].data(), state.learning_rate);
      sgd_update_array(model.decoder[i].bias, grads.decoder_bias[i],
                       state.learning_rate);
    }
    state.step += 1;
    return;
  }

  if (!state.moments_ready) {
    state.first_moment = GradientSet::zeros_like(model);
    state.second_moment = GradientSet::zeros_like(model);
    state.moments_ready = true;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < model.encoder.size(); ++i) {
    adam_update_array(model.encoder[i].weights.data(),
                      grads.encoder_weights[i].data(),
                      state.first_moment.encoder_weights[i].data(),
                      state.second_moment.encoder_weights[i].data(), state, bc1, bc2);
    adam_update_array(model.encoder[i].bias, grads.encoder_bias[i],
                      state.first_moment.encoder_bias[i],
                      state.second_moment.encoder_bias[i], state, bc1, bc2);
  }
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    adam_update_array(model.decoder[i].weights.data(),
                      grads.decoder_weights[i].data(),
                      state.first_moment.decoder_weights[i].data(),
                      state.second_moment.decoder_weights[i].data(), state, bc1, bc2);
    adam_update_array(model.decoder[i].bias, grads.decoder_bias[i],
                      state.first_moment.decoder_bias[i],
                      state.second_moment.decoder_bias[i], state, bc1, bc2);
  }
}

namespace {

json layer_to_json(const MlpLayer& layer) {
  return json{{"out_dim", layer.out_dim()},
              {"in_dim", layer.in_dim()},
              {"activation", activation_name(layer.activation)},
              {"weights", layer.weights.data()},
              {"bias", layer.bias}};
}

MlpLayer layer_from_json(const json& j) {
  MlpLayer layer;
  const std::size_t out_dim = j.at("out_dim").get<std::size_t>();
  const std::size_t in_dim = j.at("in_dim").get<std::size_t>();
  layer.weights = Matrix(out_dim, in_dim, j.at("weights").get<std::vector<double>>());
  layer.bias = j.at("bias").get<std::vector<double>>();
  layer.activation = activation_from_name(j.at("activation").get<std::string>());
  layer.validate();
  return layer;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

std::string model_to_json_string(const AutoencoderModel& model) {
  model.validate();
  json j;
  j["format"] = "fairad-model";
  j["format_version"] = kCheckpointVersion;
  j["input_dim"] = model.input_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["encoder"] = json::array();
  for (const auto& l : model.encoder) j["encoder"].push_back(layer_to_json(l));
  j["decoder"] = json::array();
  for (const auto& l : model.decoder) j["decoder"].push_back(layer_to_json(l));
  return j.dump(2);
}

AutoencoderModel model_from_json_string(const std::string& text) {
  json j = json::parse(text);
  if (j.value("format", "") != "fairad-model") {
    throw SchemaError("not a fairad model checkpoint");
  }
  if (j.at("format_version").get<int>() != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version");
  }
  AutoencoderModel model;
  model.input_dim = j.at("input_dim").get<std::size_t>();
  model.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  for (const auto& lj : j.at("encoder")) model.encoder.push_back(layer_from_json(lj));
  for (const auto& lj : j.at("decoder")) model.decoder.push_back(layer_from_json(lj));
  model.validate();
  return model;
}

void save_model(const AutoencoderModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << model_to_json_string(model) << "\n";
}

AutoencoderModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_string(ss.str());
}

}  // namespace fairad
