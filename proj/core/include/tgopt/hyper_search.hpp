#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgopt/predictor.hpp"
#include "tgopt/rng.hpp"

namespace tgopt {

using ArchCandidate = PredictorArch;

enum class Tunable { Layers, Neurons, LearningRate, HiddenActivation, OutputActivation, Features };

std::string_view to_string(Tunable t) noexcept;

struct SearchSpace {
  /// Pick probability per Tunable, in enum order.
  std::array<double, 6> pick_probabilities{0.1, 0.3, 0.25, 0.075, 0.075, 0.2};
  double beta_alpha = 0.1;
  double beta_neurons = 0.1;
  int new_layer_min = 4;
  int new_layer_max = 128;
  std::size_t max_layers = 8;
  /// Features the search may add; empty disables feature moves.
  std::vector<std::string> available_features;

  void validate() const;
};

struct Neighbour {
  ArchCandidate candidate;
  Tunable changed;
};

/// Changes exactly one tunable. Invalid moves (removing the last hidden layer,
/// exceeding max_layers) are redrawn; removing the last feature becomes an
/// addition.
Neighbour random_neighbour(const ArchCandidate& a, const SearchSpace& space, Rng& rng);

/// Validation R^2 minus omega times the trainable parameter count.
double arch_score(const ArchCandidate& a, std::span<const TrainingRecord> train_records,
                  std::span<const TrainingRecord> val_records, double omega,
                  const PredictorConfig& config);

/// Stable identifier of a candidate, for logs.
std::string candidate_hash(const ArchCandidate& a);

struct NasLogEntry {
  int iteration = 0;
  double score = 0.0;
  bool accepted = false;
  std::string candidate_hash;
  Tunable changed = Tunable::Layers;
};

struct NasResult {
  ArchCandidate best;
  double best_score = 0.0;
  std::vector<NasLogEntry> log;
};

using ArchScorer = std::function<double(const ArchCandidate&)>;

/// Random local search; a neighbour with score s' replaces the current
/// candidate (score s) with probability min(1, exp((s' - s) * p)).
NasResult nas_search(const ArchCandidate& start, const SearchSpace& space, int iters, double p,
                     const ArchScorer& score, std::uint64_t seed);

}  // namespace tgopt
