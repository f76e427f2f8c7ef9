#pragma once

#include <cstdint>
#include <vector>

#include "intentrec/nn.hpp"
#include "intentrec/param_set.hpp"
#include "intentrec/tape.hpp"
#include "intentrec/tensor.hpp"

namespace intentrec::vae {

/// Diagonal Gaussian given by mean and log-variance of equal dimension.
struct DiagGaussian {
  Tensor mean;
  Tensor log_var;
};

/// Log-variance bounds (lo, hi). `enabled = false` turns the soft clip into
/// the identity; that configuration exists only to demonstrate the failure
/// mode it prevents.
struct ClipBounds {
  double lo = -8.0;
  double hi = 4.0;
  bool enabled = true;
};

struct LatentSample {
  enum class Source { kPrior, kPosterior };
  Tensor z;
  Tensor noise;  // the epsilon draw that produced z
  Source source = Source::kPrior;
};

struct IntentDims {
  std::size_t d_x = 16;
  std::size_t d_y = 10;
  std::size_t d_z = 4;
  std::vector<std::size_t> hidden = {32, 32};

  std::vector<std::size_t> prior_sizes() const;    // d_x -> hidden -> 2*d_z
  std::vector<std::size_t> encoder_sizes() const;  // d_x+d_y -> hidden -> 2*d_z
  std::vector<std::size_t> decoder_sizes() const;  // d_z -> hidden -> 2*d_y
};

/// Prior, encoder and decoder networks plus the settings they were built
/// with. Each network emits mean || raw log-variance; the log-variance is
/// soft-clipped before use.
struct IntentModuleParams {
  IntentDims dims;
  ClipBounds clip;
  double init_epsilon = 1e-3;
  ParameterSet prior_net;
  ParameterSet encoder_net;
  ParameterSet decoder_net;
};

/// Weights ~ U(-eps, eps), biases zero, so prior and encoder start out near
/// N(0, I) for any input and the KL term starts near zero.
IntentModuleParams init_params(const IntentDims& dims, const ClipBounds& clip, double init_epsilon,
                               std::uint64_t seed);

/// f(v) = v - softplus(v - hi) + softplus(lo - v), elementwise. Total and
/// strictly increasing; output lies strictly inside (lo, hi).
Tensor soft_clip(const Tensor& v, const ClipBounds& bounds);
Value soft_clip_graph(Tape& t, Value v, const ClipBounds& bounds);

DiagGaussian prior(const IntentModuleParams& p, const Tensor& x);
DiagGaussian encode(const IntentModuleParams& p, const Tensor& x, const Tensor& y);
DiagGaussian decode(const IntentModuleParams& p, const Tensor& z);  // no x by design

/// Mean/log-variance node pair for the graph route.
struct GaussianNodes {
  Value mean;
  Value log_var;
};

GaussianNodes prior_graph(Tape& t, IntentModuleParams& p, Value x);
GaussianNodes encode_graph(Tape& t, IntentModuleParams& p, Value x, Value y);
GaussianNodes decode_graph(Tape& t, IntentModuleParams& p, Value z);

/// z = mean + exp(log_var / 2) * noise. The caller supplies the noise draw.
LatentSample reparameterize(const DiagGaussian& g, const Tensor& noise, LatentSample::Source src);
Value reparameterize_graph(Tape& t, const GaussianNodes& g, const Tensor& noise);

/// KL(q || p) between diagonal Gaussians, closed form; exactly zero when the
/// two parameter tensors are identical.
double kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p);
Value kl_graph(Tape& t, const GaussianNodes& q, const GaussianNodes& p);

double gaussian_log_likelihood(const DiagGaussian& g, const Tensor& y);
Value gaussian_log_likelihood_graph(Tape& t, const GaussianNodes& g, Value y);

struct ElboParts {
  double elbo = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

/// Single-sample estimator: recon = log p(y | z), z ~ q(z|x,y) via the given
/// noise; kl = KL(q(z|x,y) || p(z|x)); elbo = recon - kl.
ElboParts elbo(const IntentModuleParams& p, const Tensor& x, const Tensor& y, const Tensor& noise);

struct ElboNodes {
  Value elbo;
  Value recon;
  Value kl;
};

ElboNodes elbo_graph(Tape& t, IntentModuleParams& p, Value x, Value y, const Tensor& noise);

}  // namespace intentrec::vae
