#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "intentrec/nn.hpp"
#include "intentrec/param_set.hpp"
#include "intentrec/tape.hpp"
#include "intentrec/tensor.hpp"

namespace intentrec::rec {

struct RecConfig {
  std::size_t d_emb = 16;
  std::size_t gru_hidden = 32;
  std::vector<std::size_t> post_fusion_hidden = {64, 64};
  std::size_t d_repr = 32;
  std::size_t history_len = 10;
  double init_scale = 0.05;
};

/// Item embedding table, GRU history encoder, post-fusion MLP, and the
/// policy's output embedding table.
struct RecommenderParams {
  RecConfig cfg;
  std::size_t catalog_size = 0;
  std::size_t d_z = 0;
  std::size_t d_context = 0;
  ParameterSet item_emb;     // "table": catalog x d_emb
  ParameterSet gru;
  ParameterSet post_fusion;  // MLP over concat(hidden, z, context)
  ParameterSet policy_emb;   // "table": catalog x d_repr

  std::vector<std::size_t> post_fusion_sizes() const;
};

RecommenderParams init_recommender(const RecConfig& cfg, std::size_t catalog_size, std::size_t d_z,
                                   std::size_t d_context, std::uint64_t seed);

/// Final GRU state after consuming the item embeddings in order. An empty
/// history maps to the zero vector.
Tensor encode_history(const RecommenderParams& p, std::span<const int> items);
Value encode_history_graph(Tape& t, RecommenderParams& p, std::span<const int> items);

/// Post-fusion MLP over concat(hidden, z, context). The graph route wraps z
/// in stop_gradient, so no recommendation gradient reaches the intent module.
Tensor fuse(const RecommenderParams& p, const Tensor& hidden, const Tensor& z,
            const Tensor& context);
Value fuse_graph(Tape& t, RecommenderParams& p, Value hidden, Value z, Value context);

struct PolicyDistribution {
  Tensor logits;         // catalog_size
  Tensor probabilities;  // softmax(logits), sums to 1
};

/// logits[i] = <policy embedding of item i, user_repr>, then a
/// max-subtracted softmax.
PolicyDistribution policy(const RecommenderParams& p, const Tensor& user_repr);
Value policy_log_probs_graph(Tape& t, RecommenderParams& p, Value user_repr);

/// -log p(label); next-item supervision.
double rec_loss_ce(const PolicyDistribution& dist, int label);
Value rec_loss_ce_graph(Tape& t, Value log_probs, int label);

/// Score-function estimator: -(reward - baseline) * log p(action).
double rec_loss_reinforce(const PolicyDistribution& dist, int action, double reward,
                          double baseline);
Value rec_loss_reinforce_graph(Tape& t, Value log_probs, int action, double reward,
                               double baseline);

/// rec - lambda * elbo. lambda must be >= 0; zero is the control model.
double total_loss(double rec, double elbo, double lambda);
Value total_loss_graph(Tape& t, Value rec, Value elbo, double lambda);

}  // namespace intentrec::rec
