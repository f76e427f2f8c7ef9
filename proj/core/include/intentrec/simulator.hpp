#pragma once

#include <cstdint>
#include <vector>

#include "intentrec/tensor.hpp"

namespace intentrec::sim {

/// Ground-truth discrete intent state. Behavior counts are Poisson with the
/// regime's rates; the consumed item's topic follows the regime's preference.
struct IntentRegime {
  int id = 0;
  std::vector<double> topic_pref;  // categorical over topics, sums to 1
  double click_rate = 0.0;         // Poisson mean per step
  double search_rate = 0.0;
  double switch_prob = 0.0;        // per-step probability of resampling the regime
};

struct SimConfig {
  std::size_t k_intents = 4;
  std::size_t n_topics = 8;
  std::size_t catalog_size = 500;
  std::size_t trajectory_len = 200;
  std::size_t window = 5;  // past/future feature window, in steps
  std::size_t tod_buckets = 4;
  std::size_t device_categories = 2;
  std::vector<IntentRegime> regimes;

  // Feature layout: x = [log1p clicks, log1p searches, log1p topic counts,
  // tod one-hot, device one-hot]; y = the same minus the context block.
  std::size_t d_x() const { return 2 + n_topics + tod_buckets + device_categories; }
  std::size_t d_y() const { return 2 + n_topics; }
  std::size_t d_context() const { return tod_buckets + device_categories; }

  // Catalog partitioned round-robin: item i belongs to topic i mod n_topics.
  std::size_t topic_of(std::size_t item) const { return item % n_topics; }
  std::size_t items_in_topic(std::size_t topic) const;

  void validate() const;  // throws on an inconsistent configuration
};

/// Regime set where regime k prefers topic 2k with `primary_weight`, topic
/// 2k+1 with `secondary_weight`, and spreads the rest uniformly. Requires
/// 2 * k_intents <= n_topics so primary topics stay distinct.
std::vector<IntentRegime> make_regimes(std::size_t k_intents, std::size_t n_topics,
                                       const std::vector<double>& click_rates,
                                       const std::vector<double>& search_rates,
                                       const std::vector<double>& switch_probs,
                                       double primary_weight, double secondary_weight);

/// One simulated user: parallel per-step arrays plus per-user context.
struct Trajectory {
  int user_id = 0;
  int device = 0;
  std::vector<int> items;
  std::vector<int> clicks;
  std::vector<int> searches;
  std::vector<int> regime_ids;
  std::vector<bool> switched;  // true exactly when the regime id changed
  std::vector<int> tod;        // time-of-day bucket per step

  std::size_t size() const { return items.size(); }
};

/// Observed features at one step. x covers only events before t, y only
/// events at or after t; both windows truncate at trajectory edges.
struct BehaviorFeatures {
  Tensor x;
  Tensor y;
  Tensor context;  // tod one-hot || device one-hot (also embedded in x)
  int s_past = 0;
  int s_future = 0;
};

/// Markov regime-switching rollout, fully determined by (config, user_seed).
Trajectory simulate_user(const SimConfig& cfg, int user_id, std::uint64_t user_seed);

BehaviorFeatures behavior_features(const SimConfig& cfg, const Trajectory& traj, std::size_t t);

}  // namespace intentrec::sim
