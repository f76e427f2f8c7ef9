#include "intentrec/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "intentrec/rng.hpp"

namespace intentrec::sim {

namespace {

// Time-of-day advances one bucket every kTodStepsPerBucket steps, from a
// random per-user phase.
constexpr std::size_t kTodStepsPerBucket = 50;

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;  // guard against rounding at the right edge
}

}  // namespace

std::size_t SimConfig::items_in_topic(std::size_t topic) const {
  if (topic >= n_topics) throw std::out_of_range("SimConfig::items_in_topic: bad topic");
  return (catalog_size - topic + n_topics - 1) / n_topics;
}

void SimConfig::validate() const {
  if (k_intents == 0 || n_topics == 0 || catalog_size == 0 || trajectory_len == 0 ||
      window == 0 || tod_buckets == 0 || device_categories == 0) {
    throw std::invalid_argument("SimConfig: all sizes must be positive");
  }
  if (catalog_size < n_topics) {
    throw std::invalid_argument("SimConfig: catalog smaller than the topic count");
  }
  if (regimes.size() != k_intents) {
    throw std::invalid_argument("SimConfig: expected " + std::to_string(k_intents) +
                                " regimes, got " + std::to_string(regimes.size()));
  }
  for (const IntentRegime& r : regimes) {
    if (r.topic_pref.size() != n_topics) {
      throw std::invalid_argument("SimConfig: regime topic preference length mismatch");
    }
    double sum = 0.0;
    for (double p : r.topic_pref) {
      if (p < 0.0) throw std::invalid_argument("SimConfig: negative topic preference");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("SimConfig: regime topic preference does not sum to 1");
    }
    if (r.click_rate < 0.0 || r.search_rate < 0.0) {
      throw std::invalid_argument("SimConfig: negative behavior rate");
    }
    if (r.switch_prob < 0.0 || r.switch_prob > 1.0) {
      throw std::invalid_argument("SimConfig: switch probability outside [0, 1]");
    }
  }
}

std::vector<IntentRegime> make_regimes(std::size_t k_intents, std::size_t n_topics,
                                       const std::vector<double>& click_rates,
                                       const std::vector<double>& search_rates,
                                       const std::vector<double>& switch_probs,
                                       double primary_weight, double secondary_weight) {
  if (click_rates.size() != k_intents || search_rates.size() != k_intents ||
      switch_probs.size() != k_intents) {
    throw std::invalid_argument("make_regimes: rate list lengths must equal k_intents");
  }
  if (2 * k_intents > n_topics) {
    throw std::invalid_argument("make_regimes: need 2 * k_intents <= n_topics");
  }
  if (primary_weight < 0.0 || secondary_weight < 0.0 ||
      primary_weight + secondary_weight > 1.0) {
    throw std::invalid_argument("make_regimes: invalid preference weights");
  }
  std::vector<IntentRegime> out(k_intents);
  const double rest = (1.0 - primary_weight - secondary_weight) /
                      static_cast<double>(n_topics - 2);
  for (std::size_t k = 0; k < k_intents; ++k) {
    IntentRegime& r = out[k];
    r.id = static_cast<int>(k);
    r.topic_pref.assign(n_topics, rest);
    r.topic_pref[2 * k] = primary_weight;
    r.topic_pref[2 * k + 1] = secondary_weight;
    r.click_rate = click_rates[k];
    r.search_rate = search_rates[k];
    r.switch_prob = switch_probs[k];
  }
  return out;
}

Trajectory simulate_user(const SimConfig& cfg, int user_id, std::uint64_t user_seed) {
  cfg.validate();
  Rng rng(user_seed);
  Trajectory traj;
  traj.user_id = user_id;
  const std::size_t T = cfg.trajectory_len;
  traj.items.reserve(T);
  traj.clicks.reserve(T);
  traj.searches.reserve(T);
  traj.regime_ids.reserve(T);
  traj.switched.reserve(T);
  traj.tod.reserve(T);

  // Draw order is fixed: regime, device, tod phase, then per step
  // (switch draw, counts, topic, item).
  std::size_t regime = rng.index(cfg.k_intents);
  traj.device = static_cast<int>(rng.index(cfg.device_categories));
  const std::size_t tod_phase = rng.index(cfg.tod_buckets * kTodStepsPerBucket);

  for (std::size_t t = 0; t < T; ++t) {
    bool changed = false;
    if (t > 0 && rng.uniform() < cfg.regimes[regime].switch_prob) {
      const std::size_t next = rng.index(cfg.k_intents);
      changed = next != regime;
      regime = next;
    }
    const IntentRegime& r = cfg.regimes[regime];
    traj.regime_ids.push_back(static_cast<int>(regime));
    traj.switched.push_back(changed);
    traj.clicks.push_back(rng.poisson(r.click_rate));
    traj.searches.push_back(rng.poisson(r.search_rate));
    const std::size_t topic = sample_categorical(r.topic_pref, rng);
    const std::size_t pick = rng.index(cfg.items_in_topic(topic));
    traj.items.push_back(static_cast<int>(topic + pick * cfg.n_topics));
    traj.tod.push_back(
        static_cast<int>(((tod_phase + t) / kTodStepsPerBucket) % cfg.tod_buckets));
  }
  return traj;
}

BehaviorFeatures behavior_features(const SimConfig& cfg, const Trajectory& traj, std::size_t t) {
  if (t >= traj.size()) {
    throw std::out_of_range("behavior_features: step " + std::to_string(t) +
                            " outside trajectory of length " + std::to_string(traj.size()));
  }
  const std::size_t past_begin = t >= cfg.window ? t - cfg.window : 0;
  const std::size_t future_end = std::min(traj.size(), t + cfg.window);

  int clicks_past = 0, searches_past = 0, clicks_future = 0, searches_future = 0;
  std::vector<int> topics_past(cfg.n_topics, 0), topics_future(cfg.n_topics, 0);
  for (std::size_t s = past_begin; s < t; ++s) {
    clicks_past += traj.clicks[s];
    searches_past += traj.searches[s];
    ++topics_past[cfg.topic_of(traj.items[s])];
  }
  for (std::size_t s = t; s < future_end; ++s) {
    clicks_future += traj.clicks[s];
    searches_future += traj.searches[s];
    ++topics_future[cfg.topic_of(traj.items[s])];
  }

  BehaviorFeatures f;
  f.s_past = searches_past;
  f.s_future = searches_future;

  f.x = Tensor({cfg.d_x()});
  std::size_t i = 0;
  f.x[i++] = std::log1p(static_cast<double>(clicks_past));
  f.x[i++] = std::log1p(static_cast<double>(searches_past));
  for (std::size_t k = 0; k < cfg.n_topics; ++k) {
    f.x[i++] = std::log1p(static_cast<double>(topics_past[k]));
  }
  const std::size_t ctx_offset = i;
  f.x[i + traj.tod[t]] = 1.0;
  i += cfg.tod_buckets;
  f.x[i + traj.device] = 1.0;
  i += cfg.device_categories;

  f.y = Tensor({cfg.d_y()});
  std::size_t j = 0;
  f.y[j++] = std::log1p(static_cast<double>(clicks_future));
  f.y[j++] = std::log1p(static_cast<double>(searches_future));
  for (std::size_t k = 0; k < cfg.n_topics; ++k) {
    f.y[j++] = std::log1p(static_cast<double>(topics_future[k]));
  }

  f.context = Tensor({cfg.d_context()});
  for (std::size_t c = 0; c < cfg.d_context(); ++c) f.context[c] = f.x[ctx_offset + c];
  return f;
}

}  // namespace intentrec::sim
