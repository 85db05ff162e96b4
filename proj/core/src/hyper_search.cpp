#include "tgopt/hyper_search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tgopt/error.hpp"

namespace tgopt {

std::string_view to_string(Tunable t) noexcept {
  switch (t) {
    case Tunable::Layers: return "layers";
    case Tunable::Neurons: return "neurons";
    case Tunable::LearningRate: return "learning_rate";
    case Tunable::HiddenActivation: return "hidden_activation";
    case Tunable::OutputActivation: return "output_activation";
    case Tunable::Features: return "features";
  }
  return "layers";
}

void SearchSpace::validate() const {
  double sum = 0.0;
  for (double p : pick_probabilities) {
    if (p < 0.0) throw Error(ErrorCode::ConfigInvalid, "pick probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::ConfigInvalid, "pick probabilities must sum to 1");
  if (!(beta_alpha > 0.0 && beta_alpha <= 1.0) || !(beta_neurons > 0.0 && beta_neurons <= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "beta values must be in (0, 1]");
  }
  if (new_layer_min < 1 || new_layer_max < new_layer_min) {
    throw Error(ErrorCode::ConfigInvalid, "bad new-layer width range");
  }
}

namespace {

constexpr Activation kActivations[] = {Activation::Linear, Activation::ReLU, Activation::Tanh,
                                       Activation::Sigmoid};

Tunable draw_tunable(const SearchSpace& space, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < space.pick_probabilities.size(); ++i) {
    u -= space.pick_probabilities[i];
    if (u < 0.0) return static_cast<Tunable>(i);
  }
  return Tunable::Features;
}

Activation other_activation(Activation current, Rng& rng) {
  std::vector<Activation> options;
  for (auto a : kActivations) {
    if (a != current) options.push_back(a);
  }
  return options[rng.index(options.size())];
}

}  // namespace

Neighbour random_neighbour(const ArchCandidate& a, const SearchSpace& space, Rng& rng) {
  space.validate();
  for (;;) {
    Neighbour out{a, draw_tunable(space, rng)};
    ArchCandidate& c = out.candidate;
    switch (out.changed) {
      case Tunable::Layers: {
        const bool add = rng.bernoulli(0.5);
        if (add) {
          if (c.hidden_widths.size() >= space.max_layers) continue;
          const std::size_t pos = rng.index(c.hidden_widths.size() + 1);
          const int width = rng.uniform_int(space.new_layer_min, space.new_layer_max);
          c.hidden_widths.insert(c.hidden_widths.begin() + static_cast<std::ptrdiff_t>(pos), width);
        } else {
          if (c.hidden_widths.size() <= 1) continue;
          const std::size_t pos = rng.index(c.hidden_widths.size());
          c.hidden_widths.erase(c.hidden_widths.begin() + static_cast<std::ptrdiff_t>(pos));
        }
        return out;
      }
      case Tunable::Neurons: {
        const std::size_t layer = rng.index(c.hidden_widths.size());
        int& h = c.hidden_widths[layer];
        const int delta = static_cast<int>(std::ceil(h * space.beta_neurons));
        const bool up = rng.bernoulli(0.5) || h - delta < 1;
        h += up ? delta : -delta;
        return out;
      }
      case Tunable::LearningRate: {
        const bool up = rng.bernoulli(0.5);
        c.learning_rate *= up ? 1.0 + space.beta_alpha : 1.0 - space.beta_alpha;
        if (!(c.learning_rate > 0.0)) continue;
        return out;
      }
      case Tunable::HiddenActivation:
        c.hidden_activation = other_activation(c.hidden_activation, rng);
        return out;
      case Tunable::OutputActivation:
        c.output_activation = other_activation(c.output_activation, rng);
        return out;
      case Tunable::Features: {
        std::vector<std::string> unused;
        for (const auto& f : space.available_features) {
          if (std::find(c.feature_names.begin(), c.feature_names.end(), f) == c.feature_names.end()) {
            unused.push_back(f);
          }
        }
        bool add = rng.bernoulli(0.5);
        if (c.feature_names.size() <= 1) add = true;
        if (unused.empty()) add = false;
        if (add && unused.empty()) continue;
        if (!add && c.feature_names.size() <= 1) continue;
        if (add) {
          c.feature_names.push_back(unused[rng.index(unused.size())]);
          // Keep the order of available_features so equal sets compare equal.
          std::vector<std::string> ordered;
          for (const auto& f : space.available_features) {
            if (std::find(c.feature_names.begin(), c.feature_names.end(), f) !=
                c.feature_names.end()) {
              ordered.push_back(f);
            }
          }
          for (const auto& f : c.feature_names) {
            if (std::find(ordered.begin(), ordered.end(), f) == ordered.end()) ordered.push_back(f);
          }
          c.feature_names = std::move(ordered);
        } else {
          c.feature_names.erase(c.feature_names.begin() +
                                static_cast<std::ptrdiff_t>(rng.index(c.feature_names.size())));
        }
        return out;
      }
    }
  }
}

double arch_score(const ArchCandidate& a, std::span<const TrainingRecord> train_records,
                  std::span<const TrainingRecord> val_records, double omega,
                  const PredictorConfig& config) {
  const auto model = train_predictor(train_records, a, config);
  std::vector<double> pred;
  std::vector<double> actual;
  for (const auto& r : val_records) {
    pred.push_back(predict_gain(model, r.features));
    actual.push_back(r.observed_gain);
  }
  return r_squared(pred, actual) - omega * static_cast<double>(a.parameter_count());
}

std::string candidate_hash(const ArchCandidate& a) {
  std::ostringstream s;
  for (const auto& f : a.feature_names) s << f << ',';
  s << '|';
  for (int w : a.hidden_widths) s << w << ',';
  s << '|' << to_string(a.hidden_activation) << '|' << to_string(a.output_activation) << '|';
  s.precision(17);
  s << a.learning_rate;
  std::ostringstream hex;
  hex << std::hex << fnv1a(s.str());
  return hex.str();
}

NasResult nas_search(const ArchCandidate& start, const SearchSpace& space, int iters, double p,
                     const ArchScorer& score, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "nas"));
  Rng accept_rng(derive_seed(seed, "nas_accept"));
  NasResult res;
  ArchCandidate current = start;
  double current_score = score(current);
  res.best = current;
  res.best_score = current_score;
  for (int i = 1; i <= iters; ++i) {
    auto nb = random_neighbour(current, space, rng);
    const double s = score(nb.candidate);
    const double prob = std::min(1.0, std::exp((s - current_score) * p));
    NasLogEntry entry{i, s, accept_rng.uniform() < prob, candidate_hash(nb.candidate), nb.changed};
    if (entry.accepted) {
      current = nb.candidate;
      current_score = s;
    }
    if (s > res.best_score) {
      res.best = nb.candidate;
      res.best_score = s;
    }
    res.log.push_back(std::move(entry));
  }
  return res;
}

}  // namespace tgopt
