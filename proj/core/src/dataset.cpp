#include "intentrec/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "intentrec/rng.hpp"

namespace intentrec::sim {

namespace {

long parse_long(std::string_view field, std::size_t line_no, const char* what) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad " + what +
                             " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

void write_dataset(const std::vector<Trajectory>& users, const SimConfig& cfg,
                   const std::filesystem::path& out_file) {
  std::ofstream out(out_file);
  if (!out) {
    throw std::runtime_error("write_dataset: cannot open '" + out_file.string() +
                             "' for writing");
  }
  out << kDatasetHeader << '\n';
  for (const Trajectory& traj : users) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      out << traj.user_id << ',' << t << ',' << traj.items[t] << ','
          << cfg.topic_of(traj.items[t]) << ',' << traj.regime_ids[t] << ','
          << (traj.switched[t] ? 1 : 0) << ',' << traj.clicks[t] << ',' << traj.searches[t]
          << ',' << traj.tod[t] << ',' << traj.device << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for '" + out_file.string() + "'");
}

void generate_dataset(const SimConfig& cfg, std::size_t n_users, std::uint64_t seed,
                      const std::filesystem::path& out_file) {
  if (n_users == 0) throw std::invalid_argument("generate_dataset: n_users must be >= 1");
  cfg.validate();
  std::vector<Trajectory> users;
  users.reserve(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    users.push_back(simulate_user(cfg, static_cast<int>(u), derive_seed(seed, u)));
  }
  write_dataset(users, cfg, out_file);
}

std::vector<Trajectory> load_dataset(const std::filesystem::path& file, const SimConfig& cfg) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_dataset: cannot open '" + file.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kDatasetHeader) {
    throw std::runtime_error("load_dataset: missing or unexpected header in '" + file.string() +
                             "'");
  }
  std::vector<Trajectory> users;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.emplace_back(line.data() + start, i - start);
        start = i + 1;
      }
    }
    if (fields.size() != 10) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": expected 10 fields, got " + std::to_string(fields.size()));
    }
    const long user_id = parse_long(fields[0], line_no, "user_id");
    const long step = parse_long(fields[1], line_no, "step");
    const long item = parse_long(fields[2], line_no, "item_id");
    const long topic = parse_long(fields[3], line_no, "topic_id");
    const long regime = parse_long(fields[4], line_no, "regime_id");
    const long switched = parse_long(fields[5], line_no, "switched");
    const long clicks = parse_long(fields[6], line_no, "clicks");
    const long searches = parse_long(fields[7], line_no, "searches");
    const long tod = parse_long(fields[8], line_no, "tod_bucket");
    const long device = parse_long(fields[9], line_no, "device");

    if (users.empty() || users.back().user_id != user_id) {
      if (user_id != static_cast<long>(users.size())) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) +
                                 ": user ids must be dense and ordered");
      }
      users.emplace_back();
      users.back().user_id = static_cast<int>(user_id);
      users.back().device = static_cast<int>(device);
    }
    Trajectory& traj = users.back();
    if (step != static_cast<long>(traj.size())) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": steps must be dense and ordered");
    }
    if (item < 0 || item >= static_cast<long>(cfg.catalog_size)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": item_id outside the catalog");
    }
    if (topic != static_cast<long>(cfg.topic_of(item))) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": topic_id inconsistent with item_id");
    }
    if (regime < 0 || regime >= static_cast<long>(cfg.k_intents)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad regime_id");
    }
    if (switched != 0 && switched != 1) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad switched flag");
    }
    if (clicks < 0 || searches < 0) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": negative count");
    }
    if (tod < 0 || tod >= static_cast<long>(cfg.tod_buckets) || device < 0 ||
        device >= static_cast<long>(cfg.device_categories)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad context field");
    }
    if (device != traj.device) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) +
                               ": device changed within a user");
    }
    traj.items.push_back(static_cast<int>(item));
    traj.clicks.push_back(static_cast<int>(clicks));
    traj.searches.push_back(static_cast<int>(searches));
    traj.regime_ids.push_back(static_cast<int>(regime));
    traj.switched.push_back(switched == 1);
    traj.tod.push_back(static_cast<int>(tod));
  }
  for (const Trajectory& traj : users) {
    if (traj.size() != cfg.trajectory_len) {
      throw std::runtime_error("load_dataset: user " + std::to_string(traj.user_id) +
                               " has length " + std::to_string(traj.size()) + ", expected " +
                               std::to_string(cfg.trajectory_len));
    }
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const bool expect = t > 0 && traj.regime_ids[t] != traj.regime_ids[t - 1];
      if (traj.switched[t] != expect) {
        throw std::runtime_error("load_dataset: switch flag inconsistent at user " +
                                 std::to_string(traj.user_id) + " step " + std::to_string(t));
      }
    }
  }
  return users;
}

}  // namespace intentrec::sim
