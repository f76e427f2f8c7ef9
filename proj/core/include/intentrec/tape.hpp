#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "intentrec/param_set.hpp"
#include "intentrec/tensor.hpp"

namespace intentrec {

/// Handle to a node on a Tape. Valid only for the tape that produced it and
/// only until the next reset().
struct Value {
  std::uint32_t idx = UINT32_MAX;
  bool valid() const { return idx != UINT32_MAX; }
};

/// Define-by-run reverse-mode tape over Tensor-valued nodes. A fresh graph is
/// recorded for every evaluation; backward() runs once per recording and
/// accumulates into the gradient slots of every bound ParameterSet.
///
/// Not thread safe; one tape per training thread.
class Tape {
public:
  // Leaves.
  Value constant(Tensor v);
  Value parameter(ParameterSet& ps, const std::string& name);  // cached per (set, entry)

  // Elementwise, operands of identical shape.
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  Value add_n(std::span<const Value> xs);

  // Elementwise with a constant.
  Value add_scalar(Value a, double c);
  Value scale(Value a, double c);
  Value neg(Value a) { return scale(a, -1.0); }

  // Elementwise nonlinearities.
  Value relu(Value a);
  Value sigmoid(Value a);
  Value tanh_(Value a);
  Value exp_(Value a);
  Value softplus(Value a);  // log(1 + e^x), stable for large |x|

  /// x - softplus(x - hi) + softplus(lo - x), nudged to keep the result
  /// strictly inside (lo, hi) where rounding would land on a bound.
  Value soft_clip(Value a, double lo, double hi);

  // Linear algebra on 1-D/2-D nodes.
  Value matvec(Value w, Value x);          // (m x n) * (n) -> (m)
  Value row(Value matrix, std::size_t r);  // embedding lookup; grad scatters into the row

  // Structure.
  Value concat(std::span<const Value> xs);  // 1-D operands
  Value slice(Value a, std::size_t offset, std::size_t len);
  Value stop_gradient(Value a);

  // Reductions to scalars (shape {1}).
  Value sum(Value a);
  Value dot(Value a, Value b);
  Value pick(Value a, std::size_t i);

  Value log_softmax(Value a);  // 1-D, max-subtraction stabilized

  const Tensor& value(Value v) const;
  const Tensor& grad(Value v) const;
  double scalar_value(Value v) const;  // value of a shape-{1} node

  /// Backpropagates from a scalar loss. Accumulates into the grad slots of
  /// every ParameterSet bound through parameter(). Throws if the loss is not
  /// scalar, the loss is non-finite, or a non-finite gradient reaches any
  /// parameter.
  void backward(Value loss);

  void reset();
  std::size_t num_nodes() const { return nodes_.size(); }

private:
  enum class Op : std::uint8_t {
    kConstant, kParameter, kAdd, kSub, kMul, kAddN, kAddScalar, kScale,
    kRelu, kSigmoid, kTanh, kExp, kSoftplus, kSoftClip, kMatVec, kRow,
    kConcat, kSlice, kStopGrad, kSum, kDot, kPick, kLogSoftmax,
  };

  struct Node {
    Tensor val;
    Tensor grad;
    Tensor aux;  // saved intermediates (log_softmax probabilities)
    Op op;
    std::uint32_t a = UINT32_MAX;
    std::uint32_t b = UINT32_MAX;
    std::uint32_t inputs_begin = 0;  // into input_pool_, for kAddN/kConcat
    std::uint32_t inputs_count = 0;
    double scalar = 0.0;
    double scalar2 = 0.0;  // soft_clip upper bound
    std::size_t index = 0;  // row / pick index, slice offset
    ParameterSet* pset = nullptr;
    std::size_t pentry = 0;
  };

  Value push(Node n);
  Node& at(Value v);
  const Node& at(Value v) const;
  void check_same_shape(Value a, Value b, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> input_pool_;
  std::map<std::pair<const ParameterSet*, std::size_t>, std::uint32_t> param_cache_;
  bool backward_done_ = false;
};

/// Zeroes the gradients of `params`, runs backward from `loss`, and returns
/// the loss value. Parameters in `params` that the loss does not touch keep
/// exactly zero gradients.
double evaluate_with_gradients(Tape& tape, Value loss, std::span<ParameterSet* const> params);

}  // namespace intentrec
