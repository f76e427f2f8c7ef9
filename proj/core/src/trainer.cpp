#include "intentrec/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace intentrec::train {

Example make_example(const sim::SimConfig& cfg, const sim::Trajectory& traj, std::size_t t,
                     std::size_t history_len) {
  sim::BehaviorFeatures f = sim::behavior_features(cfg, traj, t);
  Example ex;
  const std::size_t begin = t >= history_len ? t - history_len : 0;
  ex.history.assign(traj.items.begin() + begin, traj.items.begin() + t);
  ex.x = std::move(f.x);
  ex.y = std::move(f.y);
  ex.context = std::move(f.context);
  ex.label = traj.items[t];
  ex.regime = traj.regime_ids[t];
  ex.s_past = f.s_past;
  ex.s_future = f.s_future;
  ex.user_id = traj.user_id;
  ex.step = static_cast<int>(t);
  return ex;
}

std::vector<Example> make_examples(const sim::SimConfig& cfg,
                                   std::span<const sim::Trajectory> users,
                                   std::size_t history_len) {
  std::vector<Example> out;
  for (const sim::Trajectory& traj : users) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      out.push_back(make_example(cfg, traj, t, history_len));
    }
  }
  return out;
}

std::pair<std::vector<const sim::Trajectory*>, std::vector<const sim::Trajectory*>>
split_users(std::span<const sim::Trajectory> users, double frac) {
  if (frac <= 0.0 || frac >= 1.0) throw std::invalid_argument("split_users: frac outside (0, 1)");
  const std::size_t n_train =
      std::min(users.size() - 1, static_cast<std::size_t>(std::llround(frac * users.size())));
  std::pair<std::vector<const sim::Trajectory*>, std::vector<const sim::Trajectory*>> out;
  for (std::size_t u = 0; u < users.size(); ++u) {
    (u < n_train ? out.first : out.second).push_back(&users[u]);
  }
  return out;
}

std::vector<std::pair<std::string, ParameterSet*>> Model::sets() {
  return {
      {"prior", &intent.prior_net},     {"encoder", &intent.encoder_net},
      {"decoder", &intent.decoder_net}, {"item_emb", &rec.item_emb},
      {"gru", &rec.gru},                {"post_fusion", &rec.post_fusion},
      {"policy_emb", &rec.policy_emb},
  };
}

Model init_model(const vae::IntentDims& dims, const vae::ClipBounds& clip, double init_epsilon,
                 const rec::RecConfig& rec_cfg, std::size_t catalog_size, std::size_t d_context,
                 std::uint64_t seed) {
  Model m;
  m.intent = vae::init_params(dims, clip, init_epsilon, derive_seed(seed, kStreamInit));
  m.rec = rec::init_recommender(rec_cfg, catalog_size, dims.d_z, d_context,
                                derive_seed(seed, kStreamInit + 100));
  return m;
}

std::vector<const Example*> sample_batch(std::span<const Example> pool, std::size_t n, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("sample_batch: empty example pool");
  std::vector<const Example*> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(&pool[rng.index(pool.size())]);
  return batch;
}

Trainer::Trainer(Model& model, const TrainSettings& settings, const sim::SimConfig& sim_cfg)
    : model_(model), settings_(settings), sim_cfg_(sim_cfg) {
  if (settings_.batch_size == 0) throw std::invalid_argument("Trainer: batch_size must be >= 1");
  if (settings_.lambda < 0.0) throw std::invalid_argument("Trainer: negative lambda");
  for (const sim::IntentRegime& r : sim_cfg_.regimes) {
    const auto it = std::max_element(r.topic_pref.begin(), r.topic_pref.end());
    primary_topic_.push_back(static_cast<int>(it - r.topic_pref.begin()));
  }
  AdamConfig cfg;
  cfg.lr = settings_.learning_rate;
  for (auto& [name, ps] : model_.sets()) opt_.emplace_back(*ps, cfg);
}

double Trainer::effective_lambda() const {
  return settings_.variant == Variant::kControl ? 0.0 : settings_.lambda;
}

StepMetrics Trainer::train_step(std::uint64_t step_index, std::span<const Example* const> batch,
                                Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const std::size_t d_z = model_.intent.dims.d_z;
  const double lambda = effective_lambda();

  tape_.reset();
  std::vector<Value> totals;
  totals.reserve(batch.size());
  double rec_sum = 0.0, recon_sum = 0.0, kl_sum = 0.0, reward_sum = 0.0;

  for (const Example* ex : batch) {
    // Fixed draw order per example: intent-sample noise, posterior noise,
    // then (in REINFORCE mode) the action. Both variants consume the same
    // draws, so control and experiment runs stay aligned stream-for-stream.
    Tensor z_noise({d_z});
    for (std::size_t i = 0; i < d_z; ++i) z_noise[i] = rng.normal();
    Tensor post_noise({d_z});
    for (std::size_t i = 0; i < d_z; ++i) post_noise[i] = rng.normal();

    Value x = tape_.constant(ex->x);
    Value y = tape_.constant(ex->y);
    Value context = tape_.constant(ex->context);

    Value z;
    if (settings_.variant == Variant::kExperiment) {
      vae::GaussianNodes pr = vae::prior_graph(tape_, model_.intent, x);
      z = settings_.sample_z ? vae::reparameterize_graph(tape_, pr, z_noise) : pr.mean;
    } else {
      z = tape_.constant(Tensor({d_z}));
    }

    Value hidden = rec::encode_history_graph(tape_, model_.rec, ex->history);
    Value user_repr = rec::fuse_graph(tape_, model_.rec, hidden, z, context);
    Value log_probs = rec::policy_log_probs_graph(tape_, model_.rec, user_repr);

    Value rec_v;
    if (settings_.loss_mode == LossMode::kCrossEntropy) {
      rec_v = rec::rec_loss_ce_graph(tape_, log_probs, ex->label);
    } else {
      const Tensor& lp = tape_.value(log_probs);
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t action = lp.size() - 1;
      for (std::size_t i = 0; i < lp.size(); ++i) {
        acc += std::exp(lp[i]);
        if (u < acc) {
          action = i;
          break;
        }
      }
      const double reward =
          sim_cfg_.topic_of(action) == static_cast<std::size_t>(primary_topic_[ex->regime])
              ? 1.0
              : 0.0;
      reward_sum += reward;
      rec_v = rec::rec_loss_reinforce_graph(tape_, log_probs, static_cast<int>(action), reward,
                                            model_.reinforce_baseline);
    }

    vae::ElboNodes e = vae::elbo_graph(tape_, model_.intent, x, y, post_noise);
    totals.push_back(rec::total_loss_graph(tape_, rec_v, e.elbo, lambda));

    rec_sum += tape_.scalar_value(rec_v);
    recon_sum += tape_.scalar_value(e.recon);
    kl_sum += tape_.scalar_value(e.kl);
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Value batch_loss = tape_.scale(tape_.add_n(totals), inv_b);

  StepMetrics m;
  m.step = step_index;
  m.total_loss = tape_.scalar_value(batch_loss);
  m.rec_loss = rec_sum * inv_b;
  m.recon = recon_sum * inv_b;
  m.kl = kl_sum * inv_b;
  const std::pair<const char*, double> terms[] = {{"total_loss", m.total_loss},
                                                  {"rec_loss", m.rec_loss},
                                                  {"recon", m.recon},
                                                  {"kl", m.kl}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) throw TrainingAbort(step_index, name);
  }

  auto sets = model_.sets();
  std::vector<ParameterSet*> raw;
  raw.reserve(sets.size());
  for (auto& [name, ps] : sets) raw.push_back(ps);
  try {
    evaluate_with_gradients(tape_, batch_loss, raw);
    double sq = 0.0;
    for (ParameterSet* ps : raw) sq += ps->grad_sq_norm();
    m.grad_norm = std::sqrt(sq);
    if (!std::isfinite(m.grad_norm)) throw TrainingAbort(step_index, "grad_norm");
    for (std::size_t k = 0; k < raw.size(); ++k) opt_[k].step(*raw[k]);
  } catch (const TrainingAbort&) {
    throw;
  } catch (const std::runtime_error& err) {
    throw TrainingAbort(step_index, std::string("update (") + err.what() + ")");
  }

  if (settings_.loss_mode == LossMode::kReinforce) {
    const double beta = settings_.reinforce_baseline_beta;
    model_.reinforce_baseline =
        beta * model_.reinforce_baseline + (1.0 - beta) * reward_sum * inv_b;
  }
  return m;
}

StepMetrics Trainer::run_step(std::uint64_t step_index, std::span<const Example> pool) {
  Rng rng(derive_seed(derive_seed(settings_.seed, kStreamSteps), step_index));
  auto batch = sample_batch(pool, settings_.batch_size, rng);
  return train_step(step_index, batch, rng);
}

double heldout_log_likelihood(Model& model, Variant variant, bool sample_z,
                              std::span<const Example> examples, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("heldout_log_likelihood: no examples");
  const std::size_t d_z = model.intent.dims.d_z;
  const std::uint64_t stream = derive_seed(seed, kStreamEval);
  double sum = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    Tensor z({d_z});
    Rng rng(derive_seed(stream, i));
    if (variant == Variant::kExperiment) {
      vae::DiagGaussian pr = vae::prior(model.intent, ex.x);
      if (sample_z) {
        Tensor noise({d_z});
        for (std::size_t k = 0; k < d_z; ++k) noise[k] = rng.normal();
        z = vae::reparameterize(pr, noise, vae::LatentSample::Source::kPrior).z;
      } else {
        z = pr.mean;
      }
    }
    Tensor hidden = rec::encode_history(model.rec, ex.history);
    Tensor user_repr = rec::fuse(model.rec, hidden, z, ex.context);
    rec::PolicyDistribution dist = rec::policy(model.rec, user_repr);
    sum -= rec::rec_loss_ce(dist, ex.label);
  }
  return sum / static_cast<double>(examples.size());
}

LogVarRange eval_log_var_range(const vae::IntentModuleParams& intent,
                               std::span<const Example> examples, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("eval_log_var_range: no examples");
  LogVarRange r{std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  auto fold = [&r](const Tensor& lv) {
    for (double v : lv.values()) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  };
  const std::uint64_t stream = derive_seed(seed, kStreamEval + 10);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    vae::DiagGaussian pr = vae::prior(intent, ex.x);
    vae::DiagGaussian q = vae::encode(intent, ex.x, ex.y);
    fold(pr.log_var);
    fold(q.log_var);
    Rng rng(derive_seed(stream, i));
    Tensor noise({intent.dims.d_z});
    for (std::size_t k = 0; k < noise.size(); ++k) noise[k] = rng.normal();
    vae::LatentSample s = vae::reparameterize(q, noise, vae::LatentSample::Source::kPosterior);
    fold(vae::decode(intent, s.z).log_var);
  }
  return r;
}

}  // namespace intentrec::train
