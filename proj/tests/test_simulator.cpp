#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "intentrec/dataset.hpp"
#include "intentrec/rng.hpp"
#include "intentrec/simulator.hpp"

using namespace intentrec;
using namespace intentrec::sim;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.k_intents = 4;
  cfg.n_topics = 8;
  cfg.catalog_size = 40;
  cfg.trajectory_len = 60;
  cfg.window = 5;
  cfg.regimes = make_regimes(4, 8, {4.0, 2.0, 0.5, 1.5}, {0.0, 3.0, 0.0, 1.5},
                             {0.05, 0.05, 0.05, 0.05}, 0.7, 0.15);
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("make_regimes builds normalized, distinct preferences") {
  auto regimes = make_regimes(4, 8, {4.0, 2.0, 0.5, 1.5}, {0.0, 3.0, 0.0, 1.5},
                              {0.05, 0.1, 0.05, 0.05}, 0.7, 0.15);
  REQUIRE(regimes.size() == 4);
  for (const auto& r : regimes) {
    double s = 0.0;
    for (double p : r.topic_pref) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(regimes[0].topic_pref[0] == doctest::Approx(0.7));
  CHECK(regimes[1].topic_pref[2] == doctest::Approx(0.7));
  CHECK(regimes[1].switch_prob == 0.1);
  CHECK_THROWS(make_regimes(4, 6, {1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, 0.7, 0.15));
}

TEST_CASE("simulate_user") {
  SUBCASE("zero switch probability keeps one regime for the whole trajectory") {
    SimConfig cfg = small_config();
    for (auto& r : cfg.regimes) r.switch_prob = 0.0;
    Trajectory traj = simulate_user(cfg, 0, 99);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      CHECK(traj.regime_ids[t] == traj.regime_ids[0]);
      CHECK_FALSE(traj.switched[t]);
    }
  }

  SUBCASE("same config and seed reproduce the trajectory exactly") {
    SimConfig cfg = small_config();
    Trajectory a = simulate_user(cfg, 3, derive_seed(7, 3));
    Trajectory b = simulate_user(cfg, 3, derive_seed(7, 3));
    CHECK(a.items == b.items);
    CHECK(a.clicks == b.clicks);
    CHECK(a.searches == b.searches);
    CHECK(a.regime_ids == b.regime_ids);
    CHECK(a.tod == b.tod);
    CHECK(a.device == b.device);
  }

  SUBCASE("switch flags are exactly the regime-id changes") {
    SimConfig cfg = small_config();
    for (auto& r : cfg.regimes) r.switch_prob = 0.3;
    Trajectory traj = simulate_user(cfg, 1, 1234);
    for (std::size_t t = 1; t < traj.size(); ++t) {
      CHECK(traj.switched[t] == (traj.regime_ids[t] != traj.regime_ids[t - 1]));
    }
  }

  SUBCASE("click counts converge to the configured Poisson mean") {
    SimConfig cfg = small_config();
    cfg.trajectory_len = 100000;
    for (auto& r : cfg.regimes) r.switch_prob = 0.0;
    Trajectory traj = simulate_user(cfg, 0, 424242);
    const double rate = cfg.regimes[traj.regime_ids[0]].click_rate;
    double sum = 0.0;
    for (int c : traj.clicks) sum += c;
    const double mean = sum / static_cast<double>(traj.size());
    CHECK(std::abs(mean - rate) < 0.01 * rate);  // 1 percent at n = 1e5
  }

  SUBCASE("item topics follow the regime preference") {
    SimConfig cfg = small_config();
    cfg.trajectory_len = 20000;
    for (auto& r : cfg.regimes) r.switch_prob = 0.0;
    Trajectory traj = simulate_user(cfg, 0, 5);
    const auto& pref = cfg.regimes[traj.regime_ids[0]].topic_pref;
    std::vector<int> counts(cfg.n_topics, 0);
    for (int item : traj.items) ++counts[cfg.topic_of(item)];
    for (std::size_t k = 0; k < cfg.n_topics; ++k) {
      const double p = pref[k];
      const double se = std::sqrt(p * (1 - p) / traj.size());
      CHECK(std::abs(counts[k] / double(traj.size()) - p) < 4 * se + 1e-3);
    }
  }
}

TEST_CASE("behavior_features") {
  SimConfig cfg = small_config();

  SUBCASE("zero counts produce zero features; count 3 maps to ln 4") {
    Trajectory traj = simulate_user(cfg, 0, 11);
    traj.clicks.assign(traj.size(), 0);
    traj.searches.assign(traj.size(), 0);
    BehaviorFeatures f = behavior_features(cfg, traj, 10);
    CHECK(f.x[0] == 0.0);
    CHECK(f.x[1] == 0.0);
    CHECK(f.y[0] == 0.0);
    CHECK(f.s_past == 0);

    traj.clicks[9] = 3;  // inside the past window of t = 10
    f = behavior_features(cfg, traj, 10);
    CHECK(f.x[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("x reads only the past, y only the future") {
    Trajectory traj = simulate_user(cfg, 0, 13);
    const std::size_t t = 20;
    BehaviorFeatures before = behavior_features(cfg, traj, t);

    Trajectory mutated = traj;  // corrupt the future; x must not move
    for (std::size_t s = t; s < traj.size(); ++s) {
      mutated.clicks[s] += 17;
      mutated.searches[s] += 5;
      mutated.items[s] = (mutated.items[s] + 1) % static_cast<int>(cfg.catalog_size);
    }
    BehaviorFeatures after = behavior_features(cfg, mutated, t);
    for (std::size_t i = 0; i < before.x.size(); ++i) CHECK(after.x[i] == before.x[i]);

    Trajectory past_mutated = traj;  // corrupt the past; y must not move
    for (std::size_t s = 0; s < t; ++s) past_mutated.clicks[s] += 9;
    after = behavior_features(cfg, past_mutated, t);
    for (std::size_t i = 0; i < before.y.size(); ++i) CHECK(after.y[i] == before.y[i]);
  }

  SUBCASE("one-hot context blocks sum to one and match x") {
    Trajectory traj = simulate_user(cfg, 0, 17);
    BehaviorFeatures f = behavior_features(cfg, traj, 30);
    double tod_sum = 0.0, dev_sum = 0.0;
    const std::size_t base = 2 + cfg.n_topics;
    for (std::size_t i = 0; i < cfg.tod_buckets; ++i) tod_sum += f.x[base + i];
    for (std::size_t i = 0; i < cfg.device_categories; ++i) {
      dev_sum += f.x[base + cfg.tod_buckets + i];
    }
    CHECK(tod_sum == 1.0);
    CHECK(dev_sum == 1.0);
    for (std::size_t i = 0; i < f.context.size(); ++i) CHECK(f.context[i] == f.x[base + i]);
  }

  SUBCASE("windows truncate at the edges and t is range-checked") {
    Trajectory traj = simulate_user(cfg, 0, 19);
    BehaviorFeatures f0 = behavior_features(cfg, traj, 0);
    CHECK(f0.x[0] == 0.0);  // empty past window
    CHECK(f0.s_past == 0);
    CHECK_NOTHROW(behavior_features(cfg, traj, traj.size() - 1));
    CHECK_THROWS(behavior_features(cfg, traj, traj.size()));
  }

  SUBCASE("past and future windows are uncorrelated given a fixed regime") {
    SimConfig cfg2 = small_config();
    cfg2.trajectory_len = 20000;
    for (auto& r : cfg2.regimes) r.switch_prob = 0.0;
    Trajectory traj = simulate_user(cfg2, 0, 23);
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int n = 0;
    for (std::size_t t = cfg2.window; t + cfg2.window < traj.size(); t += 2 * cfg2.window) {
      BehaviorFeatures f = behavior_features(cfg2, traj, t);
      const double a = f.x[0], b = f.y[0];
      sx += a; sy += b; sxx += a * a; syy += b * b; sxy += a * b;
      ++n;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - sx / n * sx / n) *
                                        (syy / n - sy / n * sy / n));
    CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("dataset files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "intentrec_test_dataset";
  fs::create_directories(dir);
  SimConfig cfg = small_config();

  SUBCASE("n_users = 1 matches simulate_user; round-trip preserves everything") {
    const fs::path file = dir / "one_user.csv";
    generate_dataset(cfg, 1, 31, file);
    auto loaded = load_dataset(file, cfg);
    REQUIRE(loaded.size() == 1);
    Trajectory direct = simulate_user(cfg, 0, derive_seed(31, 0));
    CHECK(loaded[0].items == direct.items);
    CHECK(loaded[0].clicks == direct.clicks);
    CHECK(loaded[0].searches == direct.searches);
    CHECK(loaded[0].regime_ids == direct.regime_ids);
    CHECK(loaded[0].switched == direct.switched);
    CHECK(loaded[0].tod == direct.tod);
    CHECK(loaded[0].device == direct.device);
  }

  SUBCASE("same seed regenerates byte-identical files; users are distinct") {
    const fs::path a = dir / "a.csv";
    const fs::path b = dir / "b.csv";
    generate_dataset(cfg, 5, 77, a);
    generate_dataset(cfg, 5, 77, b);
    CHECK(slurp(a) == slurp(b));

    auto users = load_dataset(a, cfg);
    REQUIRE(users.size() == 5);
    for (std::size_t i = 0; i < users.size(); ++i) {
      for (std::size_t j = i + 1; j < users.size(); ++j) {
        CHECK(users[i].items != users[j].items);
      }
    }
  }

  SUBCASE("corrupted files are rejected") {
    const fs::path file = dir / "bad.csv";
    generate_dataset(cfg, 1, 31, file);
    std::string text = slurp(file);

    std::ofstream(dir / "bad_header.csv") << "nope\n" << text;
    CHECK_THROWS(load_dataset(dir / "bad_header.csv", cfg));

    std::ofstream out(dir / "bad_field.csv");
    out << text << "0,999,1,1,0,0,1,1,0,0\n";  // step out of order
    out.close();
    CHECK_THROWS(load_dataset(dir / "bad_field.csv", cfg));
  }

  fs::remove_all(dir);
}
