#include "intentrec/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace intentrec {

namespace {

double forward_value(const GraphBuilder& build) {
  Tape tape;
  Value loss = build(tape);
  return tape.scalar_value(loss);
}

}  // namespace

GradCheckReport grad_check(const GraphBuilder& build,
                           std::span<const std::pair<std::string, ParameterSet*>> sets,
                           const GradCheckOptions& opts) {
  if (opts.step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

  const double f1 = forward_value(build);
  const double f2 = forward_value(build);
  if (f1 != f2) {
    throw std::runtime_error("grad_check: loss is not deterministic; freeze all noise");
  }

  // Analytic pass.
  std::vector<ParameterSet*> raw;
  raw.reserve(sets.size());
  for (const auto& [name, ps] : sets) raw.push_back(ps);
  Tape tape;
  Value loss = build(tape);
  evaluate_with_gradients(tape, loss, raw);

  std::vector<std::vector<Tensor>> analytic(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& e : sets[s].second->entries()) analytic[s].push_back(e.grad);
  }

  GradCheckReport report;
  const double h = opts.step;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    ParameterSet& ps = *sets[s].second;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto& entry = ps.entries()[k];
      const std::string qualified = sets[s].first + "." + entry.name;
      double fault = (qualified == opts.fault_tensor) ? opts.fault_factor : 1.0;
      GradCheckEntry out{qualified, 0.0};
      for (std::size_t i = 0; i < entry.value.size(); ++i) {
        const double orig = entry.value[i];
        entry.value[i] = orig + h;
        const double fp = forward_value(build);
        entry.value[i] = orig - h;
        const double fm = forward_value(build);
        entry.value[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[s][k][i] * fault;
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        out.max_rel_err = std::max(out.max_rel_err, rel);
      }
      report.worst = std::max(report.worst, out.max_rel_err);
      report.tensors.push_back(std::move(out));
    }
  }
  return report;
}

}  // namespace intentrec
