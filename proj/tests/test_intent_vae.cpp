#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "doctest.h"
#include "intentrec/grad_check.hpp"
#include "intentrec/intent_vae.hpp"
#include "intentrec/rng.hpp"
#include "support/gauss_hermite.hpp"

using namespace intentrec;
using namespace intentrec::vae;

namespace {

Tensor randn(std::size_t n, Rng& rng) {
  Tensor t({n});
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.normal();
  return t;
}

IntentDims tiny_dims() {
  IntentDims d;
  d.d_x = 3;
  d.d_y = 2;
  d.d_z = 1;
  d.hidden = {8};
  return d;
}

}  // namespace

TEST_CASE("init_params") {
  IntentDims dims;  // library defaults
  ClipBounds clip;

  SUBCASE("near-standard-normal start: KL(q || p) < 1e-3 on random inputs") {
    auto p = init_params(dims, clip, 1e-3, 9001);
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
      Tensor x = randn(dims.d_x, rng);
      Tensor y = randn(dims.d_y, rng);
      CHECK(kl_diag_gaussian(encode(p, x, y), prior(p, x)) < 1e-3);
    }
  }

  SUBCASE("biases start exactly zero") {
    auto p = init_params(dims, clip, 1e-3, 42);
    for (const auto* net : {&p.prior_net, &p.encoder_net, &p.decoder_net}) {
      for (const auto& e : net->entries()) {
        if (e.name[0] != 'b') continue;
        for (double v : e.value.values()) CHECK(v == 0.0);
      }
    }
  }

  SUBCASE("same seed reproduces parameters bitwise") {
    auto a = init_params(dims, clip, 1e-3, 123);
    auto b = init_params(dims, clip, 1e-3, 123);
    for (std::size_t k = 0; k < a.prior_net.size(); ++k) {
      const Tensor& ta = a.prior_net.entries()[k].value;
      const Tensor& tb = b.prior_net.entries()[k].value;
      for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i] == tb[i]);
    }
  }

  SUBCASE("invalid arguments are rejected") {
    CHECK_THROWS(init_params(dims, clip, 0.0, 1));
    CHECK_THROWS(init_params(dims, clip, -1e-3, 1));
    IntentDims bad = dims;
    bad.d_z = bad.d_y;  // no bottleneck
    CHECK_THROWS(init_params(bad, clip, 1e-3, 1));
    CHECK_THROWS(init_params(dims, ClipBounds{4.0, -8.0, true}, 1e-3, 1));
  }
}

TEST_CASE("soft_clip") {
  ClipBounds b{-10.0, 10.0, true};

  SUBCASE("symmetric bounds cancel exactly at zero") {
    Tensor out = soft_clip(Tensor::of({0.0}), b);
    CHECK(out[0] == 0.0);
  }

  SUBCASE("asymptotes approach the bounds") {
    CHECK(soft_clip(Tensor::of({100.0}), b)[0] == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(soft_clip(Tensor::of({-100.0}), b)[0] == doctest::Approx(-10.0).epsilon(1e-8));
  }

  SUBCASE("strictly monotone over a random grid") {
    Rng rng(5);
    std::vector<double> grid;
    for (int i = 0; i < 500; ++i) grid.push_back(rng.uniform(-30.0, 30.0));
    std::sort(grid.begin(), grid.end());
    double prev = soft_clip(Tensor::of({grid[0]}), b)[0];
    for (std::size_t i = 1; i < grid.size(); ++i) {
      double cur = soft_clip(Tensor::scalar(grid[i]), b)[0];
      CHECK(cur > prev);
      prev = cur;
    }
  }

  SUBCASE("output strictly inside (lo, hi), even for huge inputs") {
    ClipBounds tight{-8.0, 4.0, true};
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
      double v = rng.uniform(-1000.0, 1000.0);
      double c = soft_clip(Tensor::scalar(v), tight)[0];
      CHECK(c > tight.lo);
      CHECK(c < tight.hi);
    }
  }

  SUBCASE("disabled clip is the identity") {
    ClipBounds off{-8.0, 4.0, false};
    CHECK(soft_clip(Tensor::of({123.0}), off)[0] == 123.0);
  }

  SUBCASE("graph route matches bitwise") {
    Rng rng(7);
    Tensor v = randn(16, rng);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= 20.0;
    Tensor pure = soft_clip(v, b);
    Tape t;
    Value g = soft_clip_graph(t, t.constant(v), b);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(t.value(g)[i] == pure[i]);
  }
}

TEST_CASE("prior / encode / decode") {
  IntentDims dims;
  ClipBounds clip;

  SUBCASE("stable init keeps heads near N(0, I)") {
    auto p = init_params(dims, clip, 1e-3, 31);
    Rng rng(8);
    for (int i = 0; i < 10; ++i) {
      Tensor x = randn(dims.d_x, rng);
      DiagGaussian g = prior(p, x);
      for (double m : g.mean.values()) CHECK(std::abs(m) < 1e-2);
      for (double lv : g.log_var.values()) CHECK(std::abs(lv) < 0.05);
      DiagGaussian q = encode(p, x, randn(dims.d_y, rng));
      for (double m : q.mean.values()) CHECK(std::abs(m) < 1e-2);
      DiagGaussian d = decode(p, randn(dims.d_z, rng));
      for (double m : d.mean.values()) CHECK(std::abs(m) < 1e-2);
    }
  }

  SUBCASE("log-variances stay inside the clip interval under random weights") {
    auto p = init_params(dims, clip, 2.0, 77);  // deliberately large weights
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
      Tensor x = randn(dims.d_x, rng);
      Tensor y = randn(dims.d_y, rng);
      for (const DiagGaussian& g :
           {prior(p, x), encode(p, x, y), decode(p, randn(dims.d_z, rng))}) {
        for (double lv : g.log_var.values()) {
          CHECK(lv > clip.lo);
          CHECK(lv < clip.hi);
        }
      }
    }
  }

  SUBCASE("deterministic on repeated input") {
    auto p = init_params(dims, clip, 0.5, 3);
    Rng rng(10);
    Tensor x = randn(dims.d_x, rng);
    DiagGaussian a = prior(p, x);
    DiagGaussian b = prior(p, x);
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
      CHECK(a.mean[i] == b.mean[i]);
      CHECK(a.log_var[i] == b.log_var[i]);
    }
  }

  SUBCASE("decode takes z alone; x cannot be passed") {
    static_assert(std::is_invocable_r_v<DiagGaussian, decltype(decode), const IntentModuleParams&,
                                        const Tensor&>);
    static_assert(!std::is_invocable_v<decltype(decode), const IntentModuleParams&, const Tensor&,
                                       const Tensor&>);
  }

  SUBCASE("shape mismatches are rejected") {
    auto p = init_params(dims, clip, 0.5, 3);
    CHECK_THROWS(prior(p, Tensor({dims.d_x + 1})));
    CHECK_THROWS(encode(p, Tensor({dims.d_x}), Tensor({dims.d_y + 2})));
    CHECK_THROWS(decode(p, Tensor({dims.d_z + 1})));
  }
}

TEST_CASE("reparameterize") {
  SUBCASE("zero noise returns the mean") {
    DiagGaussian g{Tensor::of({1.5, -2.0}), Tensor::of({0.3, 0.7})};
    LatentSample s = reparameterize(g, Tensor({2}), LatentSample::Source::kPrior);
    CHECK(s.z[0] == 1.5);
    CHECK(s.z[1] == -2.0);
  }

  SUBCASE("unit log-variance example") {
    DiagGaussian g{Tensor::of({0.5}), Tensor::of({0.0})};
    LatentSample s = reparameterize(g, Tensor::of({2.0}), LatentSample::Source::kPosterior);
    CHECK(s.z[0] == 2.5);
  }

  SUBCASE("sample moments match the distribution within 3 standard errors") {
    const double mean = 0.8, log_var = -0.4;
    const double var = std::exp(log_var);
    DiagGaussian g{Tensor::of({mean}), Tensor::of({log_var})};
    Rng rng(11);
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = reparameterize(g, Tensor::scalar(rng.normal()), LatentSample::Source::kPrior).z[0];
      s1 += z;
      s2 += z * z;
    }
    const double emp_mean = s1 / n;
    const double emp_var = s2 / n - emp_mean * emp_mean;
    CHECK(std::abs(emp_mean - mean) < 3.0 * std::sqrt(var / n));
    CHECK(std::abs(emp_var - var) < 3.0 * var * std::sqrt(2.0 / (n - 1.0)));
  }

  SUBCASE("dimension mismatch is rejected") {
    DiagGaussian g{Tensor::of({0.0, 0.0}), Tensor::of({0.0, 0.0})};
    CHECK_THROWS(reparameterize(g, Tensor({3}), LatentSample::Source::kPrior));
  }
}

TEST_CASE("kl_diag_gaussian") {
  SUBCASE("identical distributions give exactly zero") {
    Rng rng(12);
    DiagGaussian g{randn(8, rng), randn(8, rng)};
    CHECK(kl_diag_gaussian(g, g) == 0.0);
  }

  SUBCASE("unit-variance mean shift: KL = mu^2 / 2") {
    DiagGaussian q{Tensor::of({1.0}), Tensor::of({0.0})};
    DiagGaussian p{Tensor::of({0.0}), Tensor::of({0.0})};
    CHECK(kl_diag_gaussian(q, p) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("variance-4 against standard normal") {
    DiagGaussian q{Tensor::of({0.0}), Tensor::of({std::log(4.0)})};
    DiagGaussian p{Tensor::of({0.0}), Tensor::of({0.0})};
    CHECK(kl_diag_gaussian(q, p) ==
          doctest::Approx(0.5 * (4.0 - 1.0 - std::log(4.0))).epsilon(1e-12));
    CHECK(kl_diag_gaussian(q, p) == doctest::Approx(0.806853).epsilon(1e-6));
  }

  SUBCASE("closed form agrees with a Monte Carlo estimate of E_q[log q - log p]") {
    Rng rng(13);
    for (int rep = 0; rep < 2; ++rep) {
      DiagGaussian q{randn(8, rng), randn(8, rng)};
      DiagGaussian p{randn(8, rng), randn(8, rng)};
      const double closed = kl_diag_gaussian(q, p);

      const int n = 1000000;
      double s1 = 0.0, s2 = 0.0;
      Tensor noise({8});
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 8; ++j) noise[j] = rng.normal();
        LatentSample s = reparameterize(q, noise, LatentSample::Source::kPosterior);
        const double diff =
            gaussian_log_likelihood(q, s.z) - gaussian_log_likelihood(p, s.z);
        s1 += diff;
        s2 += diff * diff;
      }
      const double mc = s1 / n;
      const double se = std::sqrt((s2 / n - mc * mc) / n);
      CHECK(std::abs(closed - mc) < 3.0 * se);
    }
  }

  SUBCASE("non-negative on random pairs; zero only for equal pairs") {
    Rng rng(14);
    for (int i = 0; i < 1000; ++i) {
      DiagGaussian q{randn(4, rng), randn(4, rng)};
      DiagGaussian p{randn(4, rng), randn(4, rng)};
      const double kl = kl_diag_gaussian(q, p);
      CHECK(kl >= 0.0);
      CHECK(kl > 1e-12);  // random pairs differ
    }
  }

  SUBCASE("dimension mismatch is rejected") {
    DiagGaussian q{Tensor({2}), Tensor({2})};
    DiagGaussian p{Tensor({3}), Tensor({3})};
    CHECK_THROWS(kl_diag_gaussian(q, p));
  }
}

TEST_CASE("gaussian_log_likelihood") {
  const double half_log_2pi = 0.9189385332046727;

  SUBCASE("standard normal at zero and one") {
    DiagGaussian g{Tensor::of({0.0}), Tensor::of({0.0})};
    CHECK(gaussian_log_likelihood(g, Tensor::of({0.0})) ==
          doctest::Approx(-half_log_2pi).epsilon(1e-12));
    CHECK(gaussian_log_likelihood(g, Tensor::of({1.0})) ==
          doctest::Approx(-half_log_2pi - 0.5).epsilon(1e-12));
  }

  SUBCASE("factorizes across dimensions") {
    Rng rng(15);
    DiagGaussian g{randn(5, rng), randn(5, rng)};
    Tensor y = randn(5, rng);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
      DiagGaussian gi{Tensor::scalar(g.mean[i]), Tensor::scalar(g.log_var[i])};
      sum += gaussian_log_likelihood(gi, Tensor::scalar(y[i]));
    }
    CHECK(gaussian_log_likelihood(g, y) == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("elbo") {
  SUBCASE("encoder tied to the prior: kl is exactly zero, elbo equals recon") {
    IntentDims dims;
    ClipBounds clip;
    auto p = init_params(dims, clip, 0.4, 55);
    // Tie the encoder to the prior: x columns copied, y columns zeroed, so the
    // encoder computes the prior's function for every y.
    auto sizes_p = dims.prior_sizes();
    for (std::size_t l = 0; l + 1 < sizes_p.size(); ++l) {
      const std::string wl = "W" + std::to_string(l);
      const std::string bl = "b" + std::to_string(l);
      const Tensor& pw = p.prior_net.value(wl);
      Tensor& ew = p.encoder_net.value(wl);
      ew.fill(0.0);
      for (std::size_t r = 0; r < pw.rows(); ++r) {
        for (std::size_t c = 0; c < pw.cols(); ++c) ew.at(r, c) = pw.at(r, c);
      }
      p.encoder_net.value(bl) = p.prior_net.value(bl);
    }
    Rng rng(16);
    Tensor x = randn(dims.d_x, rng);
    Tensor y = randn(dims.d_y, rng);
    Tensor noise = randn(dims.d_z, rng);
    ElboParts e = elbo(p, x, y, noise);
    CHECK(e.kl == 0.0);
    CHECK(e.elbo == e.recon);
  }

  SUBCASE("kl below 1e-3 at stable init") {
    auto p = init_params(IntentDims{}, ClipBounds{}, 1e-3, 64);
    Rng rng(17);
    for (int i = 0; i < 10; ++i) {
      ElboParts e = elbo(p, randn(p.dims.d_x, rng), randn(p.dims.d_y, rng),
                         randn(p.dims.d_z, rng));
      CHECK(e.kl < 1e-3);
      CHECK(e.kl >= 0.0);
    }
  }

  SUBCASE("graph route matches the pure route bitwise") {
    auto p = init_params(IntentDims{}, ClipBounds{}, 0.5, 65);
    Rng rng(18);
    Tensor x = randn(p.dims.d_x, rng);
    Tensor y = randn(p.dims.d_y, rng);
    Tensor noise = randn(p.dims.d_z, rng);
    ElboParts pure = elbo(p, x, y, noise);
    Tape t;
    ElboNodes g = elbo_graph(t, p, t.constant(x), t.constant(y), noise);
    CHECK(t.scalar_value(g.elbo) == pure.elbo);
    CHECK(t.scalar_value(g.recon) == pure.recon);
    CHECK(t.scalar_value(g.kl) == pure.kl);
  }

  SUBCASE("gradients of -elbo pass the finite-difference check") {
    auto p = init_params(tiny_dims(), ClipBounds{}, 0.5, 66);
    Rng rng(19);
    Tensor x = randn(p.dims.d_x, rng);
    Tensor y = randn(p.dims.d_y, rng);
    Tensor noise = randn(p.dims.d_z, rng);
    auto builder = [&](Tape& t) {
      ElboNodes e = elbo_graph(t, p, t.constant(x), t.constant(y), noise);
      return t.neg(e.elbo);
    };
    std::pair<std::string, ParameterSet*> sets[] = {
        {"prior", &p.prior_net}, {"encoder", &p.encoder_net}, {"decoder", &p.decoder_net}};
    auto report = grad_check(builder, sets);
    CHECK(report.worst < 1e-4);
  }

  SUBCASE("mean single-sample elbo stays below the quadrature marginal (d_z = 1)") {
    auto p = init_params(tiny_dims(), ClipBounds{}, 0.5, 67);
    Rng rng(20);
    std::vector<double> gh_t, gh_w;
    testsupport::gauss_hermite(200, gh_t, gh_w);

    int violations = 0;
    const int n_pairs = 20;
    for (int pair = 0; pair < n_pairs; ++pair) {
      Tensor x = randn(p.dims.d_x, rng);
      Tensor y = randn(p.dims.d_y, rng);

      // Quadrature estimate of log p(y | x) over the 1-D latent.
      DiagGaussian pr = prior(p, x);
      const double mu = pr.mean[0];
      const double sigma = std::exp(0.5 * pr.log_var[0]);
      std::vector<double> terms(gh_t.size());
      for (std::size_t i = 0; i < gh_t.size(); ++i) {
        const double z = mu + std::numbers::sqrt2 * sigma * gh_t[i];
        const double ll = gaussian_log_likelihood(decode(p, Tensor::scalar(z)), y);
        terms[i] = std::log(gh_w[i]) + ll;
      }
      const double log_py =
          testsupport::log_sum_exp(terms) - 0.5 * std::log(std::numbers::pi);

      const int draws = 64;
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < draws; ++k) {
        ElboParts e = elbo(p, x, y, Tensor::scalar(rng.normal()));
        s1 += e.elbo;
        s2 += e.elbo * e.elbo;
      }
      const double mean_elbo = s1 / draws;
      const double se = std::sqrt(std::max(s2 / draws - mean_elbo * mean_elbo, 0.0) / draws);
      if (mean_elbo > log_py + 3.0 * se) ++violations;
    }
    CHECK(violations <= 1);  // 5% of pairs
  }
}
