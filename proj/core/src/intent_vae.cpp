#include "intentrec/intent_vae.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "intentrec/rng.hpp"
#include "intentrec/scalar_ops.hpp"

namespace intentrec::vae {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

void check_bounds(const ClipBounds& b) {
  if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
    throw std::invalid_argument("ClipBounds: need finite lo < hi");
  }
}

void check_dim(const Tensor& t, std::size_t want, const char* what) {
  if (t.ndim() != 1 || t.size() != want) {
    throw std::invalid_argument(std::string(what) + ": expected 1-D length " +
                                std::to_string(want) + ", got " + t.shape_str());
  }
}

/// Splits a 2d-length network output into (mean, clipped log-variance).
DiagGaussian split_head(const Tensor& out, std::size_t d, const ClipBounds& clip) {
  Tensor mean({d});
  Tensor log_var({d});
  for (std::size_t i = 0; i < d; ++i) {
    mean[i] = out[i];
    log_var[i] = out[d + i];
  }
  return {std::move(mean), soft_clip(log_var, clip)};
}

GaussianNodes split_head_graph(Tape& t, Value out, std::size_t d, const ClipBounds& clip) {
  Value mean = t.slice(out, 0, d);
  Value log_var = soft_clip_graph(t, t.slice(out, d, d), clip);
  return {mean, log_var};
}

}  // namespace

std::vector<std::size_t> IntentDims::prior_sizes() const {
  std::vector<std::size_t> s{d_x};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(2 * d_z);
  return s;
}

std::vector<std::size_t> IntentDims::encoder_sizes() const {
  std::vector<std::size_t> s{d_x + d_y};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(2 * d_z);
  return s;
}

std::vector<std::size_t> IntentDims::decoder_sizes() const {
  std::vector<std::size_t> s{d_z};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(2 * d_y);
  return s;
}

IntentModuleParams init_params(const IntentDims& dims, const ClipBounds& clip, double init_epsilon,
                               std::uint64_t seed) {
  check_bounds(clip);
  if (init_epsilon <= 0.0) throw std::invalid_argument("init_params: init_epsilon must be > 0");
  if (dims.d_z >= dims.d_y) {
    throw std::invalid_argument("init_params: d_z must be smaller than d_y (bottleneck)");
  }
  IntentModuleParams p;
  p.dims = dims;
  p.clip = clip;
  p.init_epsilon = init_epsilon;
  Rng r_prior(derive_seed(seed, 0));
  Rng r_enc(derive_seed(seed, 1));
  Rng r_dec(derive_seed(seed, 2));
  init_mlp(p.prior_net, dims.prior_sizes(), init_epsilon, r_prior);
  init_mlp(p.encoder_net, dims.encoder_sizes(), init_epsilon, r_enc);
  init_mlp(p.decoder_net, dims.decoder_sizes(), init_epsilon, r_dec);
  return p;
}

Tensor soft_clip(const Tensor& v, const ClipBounds& bounds) {
  check_bounds(bounds);
  if (!bounds.enabled) return v;
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = soft_clip_scalar(v[i], bounds.lo, bounds.hi);
  }
  return out;
}

Value soft_clip_graph(Tape& t, Value v, const ClipBounds& bounds) {
  check_bounds(bounds);
  if (!bounds.enabled) return v;
  return t.soft_clip(v, bounds.lo, bounds.hi);
}

DiagGaussian prior(const IntentModuleParams& p, const Tensor& x) {
  check_dim(x, p.dims.d_x, "prior: x");
  Tensor out = mlp_forward(p.prior_net, x, p.dims.prior_sizes(), Activation::kRelu);
  return split_head(out, p.dims.d_z, p.clip);
}

DiagGaussian encode(const IntentModuleParams& p, const Tensor& x, const Tensor& y) {
  check_dim(x, p.dims.d_x, "encode: x");
  check_dim(y, p.dims.d_y, "encode: y");
  Tensor xy({p.dims.d_x + p.dims.d_y});
  for (std::size_t i = 0; i < x.size(); ++i) xy[i] = x[i];
  for (std::size_t i = 0; i < y.size(); ++i) xy[x.size() + i] = y[i];
  Tensor out = mlp_forward(p.encoder_net, xy, p.dims.encoder_sizes(), Activation::kRelu);
  return split_head(out, p.dims.d_z, p.clip);
}

DiagGaussian decode(const IntentModuleParams& p, const Tensor& z) {
  check_dim(z, p.dims.d_z, "decode: z");
  Tensor out = mlp_forward(p.decoder_net, z, p.dims.decoder_sizes(), Activation::kRelu);
  return split_head(out, p.dims.d_y, p.clip);
}

GaussianNodes prior_graph(Tape& t, IntentModuleParams& p, Value x) {
  check_dim(t.value(x), p.dims.d_x, "prior_graph: x");
  Value out = mlp_graph(t, p.prior_net, x, p.dims.prior_sizes(), Activation::kRelu);
  return split_head_graph(t, out, p.dims.d_z, p.clip);
}

GaussianNodes encode_graph(Tape& t, IntentModuleParams& p, Value x, Value y) {
  check_dim(t.value(x), p.dims.d_x, "encode_graph: x");
  check_dim(t.value(y), p.dims.d_y, "encode_graph: y");
  Value xy_parts[] = {x, y};
  Value xy = t.concat(xy_parts);
  Value out = mlp_graph(t, p.encoder_net, xy, p.dims.encoder_sizes(), Activation::kRelu);
  return split_head_graph(t, out, p.dims.d_z, p.clip);
}

GaussianNodes decode_graph(Tape& t, IntentModuleParams& p, Value z) {
  check_dim(t.value(z), p.dims.d_z, "decode_graph: z");
  Value out = mlp_graph(t, p.decoder_net, z, p.dims.decoder_sizes(), Activation::kRelu);
  return split_head_graph(t, out, p.dims.d_y, p.clip);
}

LatentSample reparameterize(const DiagGaussian& g, const Tensor& noise, LatentSample::Source src) {
  if (!g.mean.same_shape(g.log_var) || !g.mean.same_shape(noise)) {
    throw std::invalid_argument("reparameterize: dimension mismatch, mean " + g.mean.shape_str() +
                                ", noise " + noise.shape_str());
  }
  LatentSample s;
  s.noise = noise;
  s.source = src;
  s.z = Tensor(g.mean.shape());
  for (std::size_t i = 0; i < s.z.size(); ++i) {
    s.z[i] = g.mean[i] + std::exp(0.5 * g.log_var[i]) * noise[i];
  }
  return s;
}

Value reparameterize_graph(Tape& t, const GaussianNodes& g, const Tensor& noise) {
  if (!t.value(g.mean).same_shape(noise)) {
    throw std::invalid_argument("reparameterize_graph: noise shape " + noise.shape_str() +
                                " does not match mean " + t.value(g.mean).shape_str());
  }
  Value std_dev = t.exp_(t.scale(g.log_var, 0.5));
  return t.add(g.mean, t.mul(std_dev, t.constant(noise)));
}

double kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p) {
  if (!q.mean.same_shape(p.mean) || !q.mean.same_shape(q.log_var) ||
      !p.mean.same_shape(p.log_var)) {
    throw std::invalid_argument("kl_diag_gaussian: dimension mismatch");
  }
  // Per element: (lv_p - lv_q) + exp(lv_q - lv_p) + (mu_q - mu_p)^2 exp(-lv_p) - 1.
  // The variance ratio is computed as exp(lv_q - lv_p) so identical inputs
  // give exactly zero. Same evaluation order as kl_graph.
  double s = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    const double diff = q.mean[i] - p.mean[i];
    const double term = ((p.log_var[i] - q.log_var[i]) + std::exp(q.log_var[i] - p.log_var[i])) +
                        (diff * diff) * std::exp(-p.log_var[i]);
    s += term - 1.0;
  }
  return 0.5 * s;
}

Value kl_graph(Tape& t, const GaussianNodes& q, const GaussianNodes& p) {
  Value diff = t.sub(q.mean, p.mean);
  Value ratio = t.exp_(t.sub(q.log_var, p.log_var));
  Value maha = t.mul(t.mul(diff, diff), t.exp_(t.neg(p.log_var)));
  Value core = t.add(t.add(t.sub(p.log_var, q.log_var), ratio), maha);
  return t.scale(t.sum(t.add_scalar(core, -1.0)), 0.5);
}

double gaussian_log_likelihood(const DiagGaussian& g, const Tensor& y) {
  if (!g.mean.same_shape(y) || !g.mean.same_shape(g.log_var)) {
    throw std::invalid_argument("gaussian_log_likelihood: dimension mismatch, mean " +
                                g.mean.shape_str() + " vs y " + y.shape_str());
  }
  // Sum of: -1/2 log 2pi - 1/2 lv - 1/2 (y - mu)^2 exp(-lv). Same order as graph.
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = y[i] - g.mean[i];
    s += g.log_var[i] + (diff * diff) * std::exp(-g.log_var[i]);
  }
  return -0.5 * s - 0.5 * kLogTwoPi * static_cast<double>(y.size());
}

Value gaussian_log_likelihood_graph(Tape& t, const GaussianNodes& g, Value y) {
  Value diff = t.sub(y, g.mean);
  Value maha = t.mul(t.mul(diff, diff), t.exp_(t.neg(g.log_var)));
  Value s = t.sum(t.add(g.log_var, maha));
  const double d = static_cast<double>(t.value(y).size());
  return t.add_scalar(t.scale(s, -0.5), -0.5 * kLogTwoPi * d);
}

ElboParts elbo(const IntentModuleParams& p, const Tensor& x, const Tensor& y,
               const Tensor& noise) {
  DiagGaussian q = encode(p, x, y);
  DiagGaussian pr = prior(p, x);
  LatentSample s = reparameterize(q, noise, LatentSample::Source::kPosterior);
  DiagGaussian lik = decode(p, s.z);
  ElboParts out;
  out.recon = gaussian_log_likelihood(lik, y);
  out.kl = kl_diag_gaussian(q, pr);
  out.elbo = out.recon - out.kl;
  return out;
}

ElboNodes elbo_graph(Tape& t, IntentModuleParams& p, Value x, Value y, const Tensor& noise) {
  GaussianNodes q = encode_graph(t, p, x, y);
  GaussianNodes pr = prior_graph(t, p, x);
  Value z = reparameterize_graph(t, q, noise);
  GaussianNodes lik = decode_graph(t, p, z);
  ElboNodes out;
  out.recon = gaussian_log_likelihood_graph(t, lik, y);
  out.kl = kl_graph(t, q, pr);
  out.elbo = t.sub(out.recon, out.kl);
  return out;
}

}  // namespace intentrec::vae
