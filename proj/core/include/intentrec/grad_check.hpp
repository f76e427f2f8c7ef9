#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intentrec/tape.hpp"

namespace intentrec {

/// Records a scalar loss on the given tape. Must be deterministic: any noise
/// has to be frozen inside the closure.
using GraphBuilder = std::function<Value(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Test hook: multiplies the analytic gradient of one tensor ("set.tensor")
  // before comparison, so the detector itself can be exercised.
  std::string fault_tensor;
  double fault_factor = 1.1;
};

struct GradCheckEntry {
  std::string tensor;  // qualified "set.tensor"
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> tensors;
  double worst = 0.0;
  bool passed(double tol) const { return worst < tol; }
};

/// Compares analytic gradients against central finite differences,
/// element-wise, over every tensor of every named set. Relative error is
/// |a - b| / max(|a|, |b|, 1e-8). Throws if the loss changes between two
/// unperturbed evaluations (unfrozen noise).
GradCheckReport grad_check(const GraphBuilder& build,
                           std::span<const std::pair<std::string, ParameterSet*>> sets,
                           const GradCheckOptions& opts = {});

}  // namespace intentrec
