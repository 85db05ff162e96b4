#include "tgopt/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgopt/error.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "linear";
}

Activation activation_from_string(std::string_view s) {
  if (s == "linear") return Activation::Linear;
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw Error(ErrorCode::InvalidSpec, "unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) noexcept { return k == LossKind::MSE ? "mse" : "bce"; }

LossKind loss_kind_from_string(std::string_view s) {
  if (s == "mse") return LossKind::MSE;
  if (s == "bce") return LossKind::BCE;
  throw Error(ErrorCode::InvalidSpec, "unknown loss kind '" + std::string(s) + "'");
}

void NetSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw Error(ErrorCode::InvalidSpec, "a network needs an input and an output width");
  }
  for (int w : layer_widths) {
    if (w < 1) throw Error(ErrorCode::InvalidSpec, "layer widths must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning rate must be > 0");
}

// ---------------------------------------------------------------------------
// Params

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::VectorXd Params::flatten() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : layers) {
    out.segment(k, l.weights.size()) =
        Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    k += l.weights.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return out;
}

void Params::assign_flat(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw Error(ErrorCode::ShapeMismatch, "flat parameter vector has wrong length");
  }
  Eigen::Index k = 0;
  for (auto& l : layers) {
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) =
        flat.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

Params Params::zeros_like() const {
  Params z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

bool Params::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.bias.allFinite();
  });
}

std::size_t parameter_count(std::span<const int> layer_widths) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < layer_widths.size(); ++i) {
    n += static_cast<std::size_t>(layer_widths[i]) * static_cast<std::size_t>(layer_widths[i + 1]) +
         static_cast<std::size_t>(layer_widths[i + 1]);
  }
  return n;
}

Params init_layers(std::span<const std::pair<int, int>> shapes, std::uint64_t seed) {
  Rng rng(seed);
  Params p;
  p.layers.reserve(shapes.size());
  for (const auto& [in, out] : shapes) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer l;
    l.weights.resize(out, in);
    // Row-major fill order so the stream does not depend on Eigen storage.
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) l.weights(r, c) = rng.uniform(-bound, bound);
    }
    l.bias = Eigen::VectorXd::Zero(out);
    p.layers.push_back(std::move(l));
  }
  return p;
}

Params init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<std::pair<int, int>> shapes;
  for (std::size_t i = 0; i + 1 < spec.layer_widths.size(); ++i) {
    shapes.emplace_back(spec.layer_widths[i], spec.layer_widths[i + 1]);
  }
  return init_layers(shapes, seed);
}

// ---------------------------------------------------------------------------
// Forward / backward

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::Linear: return z;
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp()))
          .cwiseMax(kSigmoidClamp)
          .cwiseMin(1.0 - kSigmoidClamp)
          .matrix();
  }
  return z;
}

namespace {

// d(activation)/d(pre-activation), expressed through the activation output.
Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& y) {
  switch (a) {
    case Activation::Linear: return Eigen::MatrixXd::Ones(y.rows(), y.cols());
    case Activation::ReLU: return (y.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh: return (1.0 - y.array().square()).matrix();
    case Activation::Sigmoid: return (y.array() * (1.0 - y.array())).matrix();
  }
  return Eigen::MatrixXd::Ones(y.rows(), y.cols());
}

std::vector<Activation> activations_of(const NetSpec& spec) {
  std::vector<Activation> acts(spec.n_layers());
  for (std::size_t l = 0; l < acts.size(); ++l) acts[l] = spec.activation(l);
  return acts;
}

}  // namespace

Eigen::MatrixXd forward_layers(std::span<const DenseLayer> layers,
                               std::span<const Activation> activations, const Eigen::MatrixXd& x,
                               ForwardTape* tape) {
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (h.cols() != layer.weights.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " expects " +
                                                std::to_string(layer.weights.cols()) +
                                                " inputs, got " + std::to_string(h.cols()));
    }
    Eigen::MatrixXd z = h * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    Eigen::MatrixXd out = apply_activation(activations[l], z);
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->outputs.push_back(out);
    }
    h = std::move(out);
  }
  return h;
}

Eigen::MatrixXd backward_layers(std::span<const DenseLayer> layers,
                                std::span<const Activation> activations, const ForwardTape& tape,
                                const Eigen::MatrixXd& grad_output, std::span<DenseLayer> grads) {
  Eigen::MatrixXd upstream = grad_output;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::MatrixXd delta =
        upstream.cwiseProduct(activation_derivative(activations[l], tape.outputs[l]));
    grads[l].weights.noalias() += delta.transpose() * tape.inputs[l];
    grads[l].bias += delta.colwise().sum().transpose();
    upstream = delta * layers[l].weights;
  }
  return upstream;
}

Eigen::MatrixXd forward(const NetSpec& spec, const Params& params, const Eigen::MatrixXd& x) {
  if (x.cols() != spec.input_width()) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.cols()) +
                                              " columns, network expects " +
                                              std::to_string(spec.input_width()));
  }
  const auto acts = activations_of(spec);
  return forward_layers(params.layers, acts, x);
}

// ---------------------------------------------------------------------------
// Losses and metrics

namespace {

void check_same_length(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  if (pred.size() != y.size() || pred.size() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "prediction/target lengths " +
                                              std::to_string(pred.size()) + " vs " +
                                              std::to_string(y.size()));
  }
}

void check_bce_domain(const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorCode::DomainError, "BCE target not in {0,1}");
    if (!(pred(i) > 0.0 && pred(i) < 1.0)) {
      throw Error(ErrorCode::DomainError, "BCE prediction outside (0,1)");
    }
  }
}

}  // namespace

double loss(LossKind kind, const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  check_same_length(pred, y);
  if (kind == LossKind::MSE) return (pred - y).squaredNorm() / static_cast<double>(y.size());
  check_bce_domain(pred, y);
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    s += y(i) * std::log(pred(i)) + (1.0 - y(i)) * std::log(1.0 - pred(i));
  }
  return -s / static_cast<double>(y.size());
}

Eigen::VectorXd loss_gradient(LossKind kind, const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& y) {
  check_same_length(pred, y);
  const double n = static_cast<double>(y.size());
  if (kind == LossKind::MSE) return 2.0 * (pred - y) / n;
  check_bce_domain(pred, y);
  return ((pred - y).array() / (pred.array() * (1.0 - pred.array())) / n).matrix();
}

Params grad(const NetSpec& spec, const Params& params, const Eigen::MatrixXd& x,
            const Eigen::VectorXd& y, LossKind kind) {
  if (x.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "empty batch");
  if (x.cols() != spec.input_width() || spec.output_width() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "batch does not match network shape");
  }
  const auto acts = activations_of(spec);
  ForwardTape tape;
  const Eigen::MatrixXd out = forward_layers(params.layers, acts, x, &tape);
  const Eigen::VectorXd dpred = loss_gradient(kind, out.col(0), y);
  Params g = params.zeros_like();
  backward_layers(params.layers, acts, tape, dpred, g.layers);
  return g;
}

MetricKind metric_for(LossKind kind) noexcept {
  return kind == LossKind::MSE ? MetricKind::MSE : MetricKind::LogLoss;
}

double metric(MetricKind kind, const Eigen::VectorXd& pred, const Eigen::VectorXd& y) {
  check_same_length(pred, y);
  const auto n = static_cast<double>(y.size());
  switch (kind) {
    case MetricKind::MSE: return loss(LossKind::MSE, pred, y);
    case MetricKind::LogLoss: {
      const Eigen::VectorXd p = pred.cwiseMax(kSigmoidClamp).cwiseMin(1.0 - kSigmoidClamp);
      return loss(LossKind::BCE, p, y);
    }
    case MetricKind::ErrorRate: {
      double wrong = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double label = pred(i) > 0.5 ? 1.0 : 0.0;
        wrong += label != y(i) ? 1.0 : 0.0;
      }
      return wrong / n;
    }
    case MetricKind::AUC: {
      // Mann-Whitney U with mid-ranks for ties.
      std::vector<Eigen::Index> order(static_cast<std::size_t>(y.size()));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) { return pred(a) < pred(b); });
      std::vector<double> rank(order.size());
      for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && pred(order[j + 1]) == pred(order[i])) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[static_cast<std::size_t>(order[k])] = mid;
        i = j + 1;
      }
      double n_pos = 0.0;
      double rank_sum = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) == 1.0) {
          n_pos += 1.0;
          rank_sum += rank[static_cast<std::size_t>(i)];
        } else if (y(i) != 0.0) {
          throw Error(ErrorCode::DomainError, "AUC labels must be 0 or 1");
        }
      }
      const double n_neg = n - n_pos;
      if (n_pos == 0.0 || n_neg == 0.0) {
        throw Error(ErrorCode::DegenerateLabels, "AUC needs both classes");
      }
      return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Optimizer and training loop

AdamState AdamState::for_params(const Params& p) { return {p.zeros_like(), p.zeros_like(), 0}; }

void adam_step(Params& params, const Params& grads, AdamState& state, double learning_rate) {
  if (state.m.layers.size() != params.layers.size()) state = AdamState::for_params(params);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  const auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    p.array() -= learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEpsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weights, grads.layers[l].weights, state.m.layers[l].weights,
           state.v.layers[l].weights);
    update(params.layers[l].bias, grads.layers[l].bias, state.m.layers[l].bias,
           state.v.layers[l].bias);
  }
}

std::vector<double> default_curve_checkpoints() { return {0.1, 0.2, 0.3, 0.5, 0.7, 1.0}; }

int auto_batch_size(std::size_t n_rows) {
  return std::clamp(static_cast<int>(n_rows / 16), 8, 128);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidSpec, "epochs must be >= 1");
  if (batch_size && *batch_size < 1) throw Error(ErrorCode::InvalidSpec, "batch size must be >= 1");
  double prev = 0.0;
  for (double f : curve_checkpoints) {
    if (!(f > prev && f <= 1.0)) {
      throw Error(ErrorCode::InvalidSpec, "curve checkpoints must increase within (0, 1]");
    }
    prev = f;
  }
}

int TrainConfig::effective_batch_size(std::size_t n_rows) const {
  return batch_size.value_or(auto_batch_size(n_rows));
}

std::optional<double> LearningCurve::at(double fraction) const {
  for (const auto& p : points) {
    if (std::abs(p.fraction - fraction) < 1e-9) return p.loss;
  }
  return std::nullopt;
}

std::vector<long> checkpoint_steps(std::span<const double> fractions, long total_steps) {
  std::vector<long> steps;
  steps.reserve(fractions.size());
  for (double f : fractions) {
    steps.push_back(std::clamp(static_cast<long>(std::llround(f * static_cast<double>(total_steps))),
                               1L, total_steps));
  }
  return steps;
}

TrainResult train(const NetSpec& spec, const TrainConfig& config, const Eigen::MatrixXd& x_train,
                  const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_val,
                  const Eigen::VectorXd& y_val, const Params* init) {
  spec.validate();
  config.validate();
  if (x_train.rows() == 0 || x_train.rows() != y_train.size() || x_val.rows() != y_val.size() ||
      x_val.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "training/validation data shapes");
  }
  if (spec.output_width() != 1) throw Error(ErrorCode::InvalidSpec, "output width must be 1");

  std::vector<double> fractions = config.curve_checkpoints;
  if (fractions.empty() || std::abs(fractions.back() - 1.0) > 1e-12) fractions.push_back(1.0);

  const auto n = static_cast<std::size_t>(x_train.rows());
  const auto batch = static_cast<std::size_t>(config.effective_batch_size(n));
  const long steps_per_epoch = static_cast<long>((n + batch - 1) / batch);
  const long total_steps = steps_per_epoch * config.epochs;
  const auto ck_steps = checkpoint_steps(fractions, total_steps);

  TrainResult result;
  result.params = init ? *init : init_params(spec, derive_seed(config.seed, "init"));
  AdamState adam = AdamState::for_params(result.params);
  Rng rng(derive_seed(config.seed, "batches"));
  const auto acts = activations_of(spec);
  const auto val_loss = [&] {
    const Eigen::VectorXd pred = forward_layers(result.params.layers, acts, x_val).col(0);
    return metric(metric_for(config.loss_kind), pred, y_val);
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Eigen::Index> rows;
  Params g = result.params.zeros_like();
  ForwardTape tape;
  std::size_t next_ck = 0;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                  order.begin() + static_cast<std::ptrdiff_t>(end));
      const Eigen::MatrixXd xb = x_train(rows, Eigen::all);
      const Eigen::VectorXd yb = y_train(rows);
      for (auto& l : g.layers) {
        l.weights.setZero();
        l.bias.setZero();
      }
      const Eigen::MatrixXd out = forward_layers(result.params.layers, acts, xb, &tape);
      backward_layers(result.params.layers, acts, tape, loss_gradient(config.loss_kind, out.col(0), yb),
                      g.layers);
      adam_step(result.params, g, adam, spec.learning_rate);
      ++step;
      while (next_ck < ck_steps.size() && ck_steps[next_ck] == step) {
        const double l = val_loss();
        if (!std::isfinite(l) || !result.params.all_finite()) {
          throw Error(ErrorCode::NumericalDivergence,
                      "validation loss became non-finite at step " + std::to_string(step));
        }
        result.curve.points.push_back({fractions[next_ck], l});
        ++next_ck;
      }
    }
  }
  result.final_val_loss = result.curve.points.back().loss;
  return result;
}

}  // namespace tgopt
