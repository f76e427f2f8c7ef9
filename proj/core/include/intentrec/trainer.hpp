#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "intentrec/adam.hpp"
#include "intentrec/intent_vae.hpp"
#include "intentrec/recommender.hpp"
#include "intentrec/rng.hpp"
#include "intentrec/simulator.hpp"
#include "intentrec/tape.hpp"

namespace intentrec::train {

enum class LossMode { kCrossEntropy, kReinforce };
enum class Variant { kControl, kExperiment };

// Purpose tags for derived random streams; documented in the README.
inline constexpr std::uint64_t kStreamInit = 0;
inline constexpr std::uint64_t kStreamSteps = 1;
inline constexpr std::uint64_t kStreamEval = 2;
inline constexpr std::uint64_t kStreamProbe = 3;

/// One training/evaluation example assembled from a trajectory position.
struct Example {
  std::vector<int> history;  // item ids before t, oldest first, length <= history_len
  Tensor x;
  Tensor y;
  Tensor context;
  int label = 0;  // item consumed at t
  int regime = 0;
  int s_past = 0;
  int s_future = 0;
  int user_id = 0;
  int step = 0;
};

Example make_example(const sim::SimConfig& cfg, const sim::Trajectory& traj, std::size_t t,
                     std::size_t history_len);
std::vector<Example> make_examples(const sim::SimConfig& cfg,
                                   std::span<const sim::Trajectory> users,
                                   std::size_t history_len);

/// First `frac` of users (by id) train, the rest are held out.
std::pair<std::vector<const sim::Trajectory*>, std::vector<const sim::Trajectory*>>
split_users(std::span<const sim::Trajectory> users, double frac);

struct TrainSettings {
  std::size_t steps = 5000;
  std::size_t batch_size = 32;
  double learning_rate = 3e-3;
  double lambda = 0.1;
  LossMode loss_mode = LossMode::kCrossEntropy;
  Variant variant = Variant::kExperiment;
  bool sample_z = true;  // false: condition on the prior mean (ablation)
  double reinforce_baseline_beta = 0.99;
  std::uint64_t seed = 42;
};

/// All trainable state: the intent module, the recommender, and the scalar
/// REINFORCE baseline.
struct Model {
  vae::IntentModuleParams intent;
  rec::RecommenderParams rec;
  double reinforce_baseline = 0.0;

  /// Canonical (name, set) order; fixes gradient reduction, optimizer and
  /// checkpoint layout.
  std::vector<std::pair<std::string, ParameterSet*>> sets();
};

Model init_model(const vae::IntentDims& dims, const vae::ClipBounds& clip, double init_epsilon,
                 const rec::RecConfig& rec_cfg, std::size_t catalog_size, std::size_t d_context,
                 std::uint64_t seed);

struct StepMetrics {
  std::uint64_t step = 0;
  double total_loss = 0.0;
  double rec_loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
};

/// Non-finite quantity encountered mid-training; carries the step index and
/// the offending term.
class TrainingAbort : public std::runtime_error {
public:
  TrainingAbort(std::uint64_t step, std::string term)
      : std::runtime_error("training aborted at step " + std::to_string(step) +
                           ": non-finite " + term),
        step_(step),
        term_(std::move(term)) {}
  std::uint64_t step() const { return step_; }
  const std::string& term() const { return term_; }

private:
  std::uint64_t step_;
  std::string term_;
};

std::vector<const Example*> sample_batch(std::span<const Example> pool, std::size_t n, Rng& rng);

/// Owns the optimizer states and the step loop body. The per-step random
/// stream is derived from (seed, step index), so resuming from a checkpoint
/// replays the exact uninterrupted run.
class Trainer {
public:
  Trainer(Model& model, const TrainSettings& settings, const sim::SimConfig& sim_cfg);

  /// One joint update of the recommender and intent module on `batch`.
  StepMetrics train_step(std::uint64_t step_index, std::span<const Example* const> batch,
                         Rng& rng);

  /// train_step with the canonical derived stream and batch for this step.
  StepMetrics run_step(std::uint64_t step_index, std::span<const Example> pool);

  double effective_lambda() const;
  std::vector<AdamState>& optimizer_states() { return opt_; }
  const TrainSettings& settings() const { return settings_; }

private:
  Model& model_;
  TrainSettings settings_;
  const sim::SimConfig& sim_cfg_;
  std::vector<int> primary_topic_;  // per regime, for the synthetic reward
  std::vector<AdamState> opt_;
  Tape tape_;
};

/// Mean log-probability of the next item over `examples`, with the intent
/// sample drawn from the per-example derived eval stream. Control models
/// condition on a zero intent vector.
double heldout_log_likelihood(Model& model, Variant variant, bool sample_z,
                              std::span<const Example> examples, std::uint64_t seed);

struct LogVarRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Extremes of the clipped log-variances produced by all three intent heads
/// over the given examples (decoder evaluated at a posterior sample).
LogVarRange eval_log_var_range(const vae::IntentModuleParams& intent,
                               std::span<const Example> examples, std::uint64_t seed);

}  // namespace intentrec::train
