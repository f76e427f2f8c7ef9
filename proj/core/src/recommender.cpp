#include "intentrec/recommender.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "intentrec/rng.hpp"

namespace intentrec::rec {

namespace {

Tensor uniform_table(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

void check_item(const RecommenderParams& p, int item, const char* what) {
  if (item < 0 || static_cast<std::size_t>(item) >= p.catalog_size) {
    throw std::out_of_range(std::string(what) + ": item id " + std::to_string(item) +
                            " outside catalog of " + std::to_string(p.catalog_size));
  }
}

}  // namespace

std::vector<std::size_t> RecommenderParams::post_fusion_sizes() const {
  std::vector<std::size_t> s{cfg.gru_hidden + d_z + d_context};
  s.insert(s.end(), cfg.post_fusion_hidden.begin(), cfg.post_fusion_hidden.end());
  s.push_back(cfg.d_repr);
  return s;
}

RecommenderParams init_recommender(const RecConfig& cfg, std::size_t catalog_size,
                                   std::size_t d_z, std::size_t d_context, std::uint64_t seed) {
  if (catalog_size == 0) throw std::invalid_argument("init_recommender: empty catalog");
  if (cfg.init_scale <= 0.0) throw std::invalid_argument("init_recommender: bad init_scale");
  RecommenderParams p;
  p.cfg = cfg;
  p.catalog_size = catalog_size;
  p.d_z = d_z;
  p.d_context = d_context;
  Rng r_items(derive_seed(seed, 0));
  Rng r_gru(derive_seed(seed, 1));
  Rng r_fusion(derive_seed(seed, 2));
  Rng r_policy(derive_seed(seed, 3));
  p.item_emb.add("table", uniform_table(catalog_size, cfg.d_emb, cfg.init_scale, r_items));
  init_gru(p.gru, cfg.d_emb, cfg.gru_hidden, cfg.init_scale, r_gru);
  init_mlp(p.post_fusion, p.post_fusion_sizes(), cfg.init_scale, r_fusion);
  p.policy_emb.add("table", uniform_table(catalog_size, cfg.d_repr, cfg.init_scale, r_policy));
  return p;
}

Tensor encode_history(const RecommenderParams& p, std::span<const int> items) {
  Tensor h({p.cfg.gru_hidden});
  const Tensor& table = p.item_emb.value("table");
  Tensor x({p.cfg.d_emb});
  for (int item : items) {
    check_item(p, item, "encode_history");
    for (std::size_t j = 0; j < p.cfg.d_emb; ++j) {
      x[j] = table.data()[static_cast<std::size_t>(item) * p.cfg.d_emb + j];
    }
    h = gru_step(p.gru, h, x);
  }
  return h;
}

Value encode_history_graph(Tape& t, RecommenderParams& p, std::span<const int> items) {
  Value h = t.constant(Tensor({p.cfg.gru_hidden}));
  Value table = items.empty() ? Value{} : t.parameter(p.item_emb, "table");
  for (int item : items) {
    check_item(p, item, "encode_history");
    Value x = t.row(table, static_cast<std::size_t>(item));
    h = gru_step_graph(t, p.gru, h, x);
  }
  return h;
}

Tensor fuse(const RecommenderParams& p, const Tensor& hidden, const Tensor& z,
            const Tensor& context) {
  if (hidden.size() != p.cfg.gru_hidden || z.size() != p.d_z || context.size() != p.d_context) {
    throw std::invalid_argument("fuse: input sizes (" + std::to_string(hidden.size()) + ", " +
                                std::to_string(z.size()) + ", " + std::to_string(context.size()) +
                                ") do not match the configuration");
  }
  Tensor in({hidden.size() + z.size() + context.size()});
  std::size_t i = 0;
  for (double v : hidden.values()) in[i++] = v;
  for (double v : z.values()) in[i++] = v;
  for (double v : context.values()) in[i++] = v;
  return mlp_forward(p.post_fusion, in, p.post_fusion_sizes(), Activation::kRelu);
}

Value fuse_graph(Tape& t, RecommenderParams& p, Value hidden, Value z, Value context) {
  // The intent sample conditions the policy but never receives its gradient.
  Value parts[] = {hidden, t.stop_gradient(z), context};
  Value in = t.concat(parts);
  return mlp_graph(t, p.post_fusion, in, p.post_fusion_sizes(), Activation::kRelu);
}

PolicyDistribution policy(const RecommenderParams& p, const Tensor& user_repr) {
  if (user_repr.size() != p.cfg.d_repr) {
    throw std::invalid_argument("policy: user_repr length " + std::to_string(user_repr.size()) +
                                " does not match d_repr " + std::to_string(p.cfg.d_repr));
  }
  const Tensor& table = p.policy_emb.value("table");
  PolicyDistribution dist;
  dist.logits = Tensor({p.catalog_size});
  for (std::size_t i = 0; i < p.catalog_size; ++i) {
    double s = 0.0;
    const double* row = table.data() + i * p.cfg.d_repr;
    for (std::size_t j = 0; j < p.cfg.d_repr; ++j) s += row[j] * user_repr[j];
    dist.logits[i] = s;
  }
  double mx = dist.logits[0];
  for (double v : dist.logits.values()) mx = std::max(mx, v);
  double z = 0.0;
  dist.probabilities = Tensor({p.catalog_size});
  for (std::size_t i = 0; i < p.catalog_size; ++i) {
    dist.probabilities[i] = std::exp(dist.logits[i] - mx);
    z += dist.probabilities[i];
  }
  for (std::size_t i = 0; i < p.catalog_size; ++i) dist.probabilities[i] /= z;
  return dist;
}

Value policy_log_probs_graph(Tape& t, RecommenderParams& p, Value user_repr) {
  Value table = t.parameter(p.policy_emb, "table");
  return t.log_softmax(t.matvec(table, user_repr));
}

double rec_loss_ce(const PolicyDistribution& dist, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= dist.logits.size()) {
    throw std::out_of_range("rec_loss_ce: label " + std::to_string(label) + " out of range");
  }
  // Computed from the logits (log-softmax form) rather than the normalized
  // probabilities, so small probabilities cannot underflow.
  double mx = dist.logits[0];
  for (double v : dist.logits.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : dist.logits.values()) z += std::exp(v - mx);
  return -(dist.logits[label] - mx - std::log(z));
}

Value rec_loss_ce_graph(Tape& t, Value log_probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= t.value(log_probs).size()) {
    throw std::out_of_range("rec_loss_ce_graph: label " + std::to_string(label) +
                            " out of range");
  }
  return t.neg(t.pick(log_probs, static_cast<std::size_t>(label)));
}

double rec_loss_reinforce(const PolicyDistribution& dist, int action, double reward,
                          double baseline) {
  return (reward - baseline) * rec_loss_ce(dist, action);
}

Value rec_loss_reinforce_graph(Tape& t, Value log_probs, int action, double reward,
                               double baseline) {
  return t.scale(rec_loss_ce_graph(t, log_probs, action), reward - baseline);
}

double total_loss(double rec, double elbo, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("total_loss: negative lambda");
  return rec - lambda * elbo;
}

Value total_loss_graph(Tape& t, Value rec, Value elbo, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("total_loss_graph: negative lambda");
  return t.sub(rec, t.scale(elbo, lambda));
}

}  // namespace intentrec::rec
