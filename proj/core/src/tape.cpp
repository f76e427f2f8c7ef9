#include "intentrec/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "intentrec/scalar_ops.hpp"

namespace intentrec {

Value Tape::push(Node n) {
  n.grad = Tensor(n.val.shape());
  nodes_.push_back(std::move(n));
  return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::at(Value v) {
  if (!v.valid() || v.idx >= nodes_.size()) throw std::invalid_argument("Tape: invalid Value");
  return nodes_[v.idx];
}

const Tape::Node& Tape::at(Value v) const { return const_cast<Tape*>(this)->at(v); }

void Tape::check_same_shape(Value a, Value b, const char* op) const {
  if (!at(a).val.same_shape(at(b).val)) {
    throw std::invalid_argument(std::string("Tape::") + op + ": shape mismatch " +
                                at(a).val.shape_str() + " vs " + at(b).val.shape_str());
  }
}

Value Tape::constant(Tensor v) {
  Node n;
  n.op = Op::kConstant;
  n.val = std::move(v);
  return push(std::move(n));
}

Value Tape::parameter(ParameterSet& ps, const std::string& name) {
  const std::size_t entry = ps.index_of(name);
  auto key = std::make_pair(static_cast<const ParameterSet*>(&ps), entry);
  auto it = param_cache_.find(key);
  if (it != param_cache_.end()) return Value{it->second};
  Node n;
  n.op = Op::kParameter;
  n.val = ps.entries()[entry].value;
  n.pset = &ps;
  n.pentry = entry;
  Value v = push(std::move(n));
  param_cache_[key] = v.idx;
  return v;
}

Value Tape::add(Value a, Value b) {
  check_same_shape(a, b, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a.idx;
  n.b = b.idx;
  n.val = at(a).val;
  const Tensor& vb = at(b).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] += vb[i];
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  check_same_shape(a, b, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a.idx;
  n.b = b.idx;
  n.val = at(a).val;
  const Tensor& vb = at(b).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] -= vb[i];
  return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
  check_same_shape(a, b, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a.idx;
  n.b = b.idx;
  n.val = at(a).val;
  const Tensor& vb = at(b).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] *= vb[i];
  return push(std::move(n));
}

Value Tape::add_n(std::span<const Value> xs) {
  if (xs.empty()) throw std::invalid_argument("Tape::add_n: empty operand list");
  for (const Value& x : xs) check_same_shape(xs[0], x, "add_n");
  Node n;
  n.op = Op::kAddN;
  n.inputs_begin = static_cast<std::uint32_t>(input_pool_.size());
  n.inputs_count = static_cast<std::uint32_t>(xs.size());
  for (const Value& x : xs) input_pool_.push_back(x.idx);
  n.val = at(xs[0]).val;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Tensor& v = at(xs[k]).val;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] += v[i];
  }
  return push(std::move(n));
}

Value Tape::add_scalar(Value a, double c) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = a.idx;
  n.scalar = c;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] += c;
  return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.idx;
  n.scalar = c;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] *= c;
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.idx;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::max(n.val[i], 0.0);
  return push(std::move(n));
}

Value Tape::sigmoid(Value a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.idx;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = sigmoid_scalar(n.val[i]);
  return push(std::move(n));
}

Value Tape::tanh_(Value a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.idx;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::tanh(n.val[i]);
  return push(std::move(n));
}

Value Tape::exp_(Value a) {
  Node n;
  n.op = Op::kExp;
  n.a = a.idx;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::exp(n.val[i]);
  return push(std::move(n));
}

Value Tape::softplus(Value a) {
  Node n;
  n.op = Op::kSoftplus;
  n.a = a.idx;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = stable_softplus(n.val[i]);
  return push(std::move(n));
}

Value Tape::soft_clip(Value a, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("Tape::soft_clip: need lo < hi");
  Node n;
  n.op = Op::kSoftClip;
  n.a = a.idx;
  n.scalar = lo;
  n.scalar2 = hi;
  n.val = at(a).val;
  for (std::size_t i = 0; i < n.val.size(); ++i) n.val[i] = soft_clip_scalar(n.val[i], lo, hi);
  return push(std::move(n));
}

Value Tape::matvec(Value w, Value x) {
  const Tensor& W = at(w).val;
  const Tensor& X = at(x).val;
  if (W.ndim() != 2 || X.ndim() != 1 || W.cols() != X.size()) {
    throw std::invalid_argument("Tape::matvec: incompatible shapes " + W.shape_str() + " and " +
                                X.shape_str());
  }
  const std::size_t m = W.rows(), k = W.cols();
  Node n;
  n.op = Op::kMatVec;
  n.a = w.idx;
  n.b = x.idx;
  n.val = Tensor({m});
  const double* wd = W.data();
  const double* xd = X.data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    const double* wrow = wd + i * k;
    for (std::size_t j = 0; j < k; ++j) s += wrow[j] * xd[j];
    n.val[i] = s;
  }
  return push(std::move(n));
}

Value Tape::row(Value matrix, std::size_t r) {
  const Tensor& M = at(matrix).val;
  if (M.ndim() != 2) throw std::invalid_argument("Tape::row: operand is not a matrix");
  if (r >= M.rows()) {
    throw std::out_of_range("Tape::row: row " + std::to_string(r) + " of " + M.shape_str());
  }
  Node n;
  n.op = Op::kRow;
  n.a = matrix.idx;
  n.index = r;
  const std::size_t c = M.cols();
  n.val = Tensor({c});
  for (std::size_t j = 0; j < c; ++j) n.val[j] = M.data()[r * c + j];
  return push(std::move(n));
}

Value Tape::concat(std::span<const Value> xs) {
  if (xs.empty()) throw std::invalid_argument("Tape::concat: empty operand list");
  std::size_t total = 0;
  for (const Value& x : xs) {
    if (at(x).val.ndim() != 1) {
      throw std::invalid_argument("Tape::concat: operand is not 1-D: " + at(x).val.shape_str());
    }
    total += at(x).val.size();
  }
  Node n;
  n.op = Op::kConcat;
  n.inputs_begin = static_cast<std::uint32_t>(input_pool_.size());
  n.inputs_count = static_cast<std::uint32_t>(xs.size());
  for (const Value& x : xs) input_pool_.push_back(x.idx);
  n.val = Tensor({total});
  std::size_t off = 0;
  for (const Value& x : xs) {
    const Tensor& v = at(x).val;
    for (std::size_t i = 0; i < v.size(); ++i) n.val[off + i] = v[i];
    off += v.size();
  }
  return push(std::move(n));
}

Value Tape::slice(Value a, std::size_t offset, std::size_t len) {
  const Tensor& v = at(a).val;
  if (v.ndim() != 1 || offset + len > v.size() || len == 0) {
    throw std::invalid_argument("Tape::slice: range [" + std::to_string(offset) + ", " +
                                std::to_string(offset + len) + ") of " + v.shape_str());
  }
  Node n;
  n.op = Op::kSlice;
  n.a = a.idx;
  n.index = offset;
  n.val = Tensor({len});
  for (std::size_t i = 0; i < len; ++i) n.val[i] = v[offset + i];
  return push(std::move(n));
}

Value Tape::stop_gradient(Value a) {
  Node n;
  n.op = Op::kStopGrad;
  n.a = a.idx;
  n.val = at(a).val;
  return push(std::move(n));
}

Value Tape::sum(Value a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.idx;
  double s = 0.0;
  for (double v : at(a).val.values()) s += v;
  n.val = Tensor::scalar(s);
  return push(std::move(n));
}

Value Tape::dot(Value a, Value b) {
  check_same_shape(a, b, "dot");
  Node n;
  n.op = Op::kDot;
  n.a = a.idx;
  n.b = b.idx;
  const Tensor& va = at(a).val;
  const Tensor& vb = at(b).val;
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  n.val = Tensor::scalar(s);
  return push(std::move(n));
}

Value Tape::pick(Value a, std::size_t i) {
  const Tensor& v = at(a).val;
  if (v.ndim() != 1 || i >= v.size()) {
    throw std::out_of_range("Tape::pick: index " + std::to_string(i) + " of " + v.shape_str());
  }
  Node n;
  n.op = Op::kPick;
  n.a = a.idx;
  n.index = i;
  n.val = Tensor::scalar(v[i]);
  return push(std::move(n));
}

Value Tape::log_softmax(Value a) {
  const Tensor& x = at(a).val;
  if (x.ndim() != 1) throw std::invalid_argument("Tape::log_softmax: operand is not 1-D");
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = a.idx;
  double mx = x[0];
  for (double v : x.values()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : x.values()) z += std::exp(v - mx);
  const double log_z = std::log(z);
  n.val = Tensor(x.shape());
  n.aux = Tensor(x.shape());  // softmax probabilities for the backward pass
  for (std::size_t i = 0; i < x.size(); ++i) {
    n.val[i] = x[i] - mx - log_z;
    n.aux[i] = std::exp(n.val[i]);
  }
  return push(std::move(n));
}

const Tensor& Tape::value(Value v) const { return at(v).val; }
const Tensor& Tape::grad(Value v) const { return at(v).grad; }

double Tape::scalar_value(Value v) const {
  const Tensor& t = at(v).val;
  if (t.size() != 1) throw std::invalid_argument("Tape::scalar_value: node is not scalar");
  return t[0];
}

void Tape::backward(Value loss) {
  if (backward_done_) throw std::logic_error("Tape::backward: already run; reset() first");
  const Tensor& l = at(loss).val;
  if (l.size() != 1) {
    throw std::invalid_argument("Tape::backward: loss must be scalar, got " + l.shape_str());
  }
  if (!std::isfinite(l[0])) throw std::runtime_error("Tape::backward: non-finite loss value");
  backward_done_ = true;
  nodes_[loss.idx].grad[0] = 1.0;

  for (std::size_t ni = nodes_.size(); ni-- > 0;) {
    Node& n = nodes_[ni];
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParameter:
      case Op::kStopGrad:
        break;
      case Op::kAdd: {
        Tensor& ga = nodes_[n.a].grad;
        Tensor& gb = nodes_[n.b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        Tensor& ga = nodes_[n.a].grad;
        Tensor& gb = nodes_[n.b].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        Tensor& ga = nodes_[n.a].grad;
        Tensor& gb = nodes_[n.b].grad;
        const Tensor& va = nodes_[n.a].val;
        const Tensor& vb = nodes_[n.b].val;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * vb[i];
          gb[i] += g[i] * va[i];
        }
        break;
      }
      case Op::kAddN: {
        for (std::uint32_t k = 0; k < n.inputs_count; ++k) {
          Tensor& gi = nodes_[input_pool_[n.inputs_begin + k]].grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case Op::kAddScalar: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        break;
      }
      case Op::kScale: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.scalar;
        break;
      }
      case Op::kRelu: {
        Tensor& ga = nodes_[n.a].grad;
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (va[i] > 0.0) ga[i] += g[i];
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
        break;
      }
      case Op::kTanh: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
        break;
      }
      case Op::kExp: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.val[i];
        break;
      }
      case Op::kSoftplus: {
        Tensor& ga = nodes_[n.a].grad;
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid_scalar(va[i]);
        break;
      }
      case Op::kSoftClip: {
        Tensor& ga = nodes_[n.a].grad;
        const Tensor& va = nodes_[n.a].val;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * soft_clip_derivative(va[i], n.scalar, n.scalar2);
        }
        break;
      }
      case Op::kMatVec: {
        Tensor& gw = nodes_[n.a].grad;
        Tensor& gx = nodes_[n.b].grad;
        const Tensor& W = nodes_[n.a].val;
        const Tensor& x = nodes_[n.b].val;
        const std::size_t m = W.rows(), k = W.cols();
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          double* gwrow = gw.data() + i * k;
          const double* wrow = W.data() + i * k;
          for (std::size_t j = 0; j < k; ++j) {
            gwrow[j] += gi * x[j];
            gx[j] += gi * wrow[j];
          }
        }
        break;
      }
      case Op::kRow: {
        Tensor& gm = nodes_[n.a].grad;
        const std::size_t c = nodes_[n.a].val.cols();
        double* target = gm.data() + n.index * c;
        for (std::size_t j = 0; j < c; ++j) target[j] += g[j];
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (std::uint32_t k = 0; k < n.inputs_count; ++k) {
          Tensor& gi = nodes_[input_pool_[n.inputs_begin + k]].grad;
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[off + i];
          off += gi.size();
        }
        break;
      }
      case Op::kSlice: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < g.size(); ++i) ga[n.index + i] += g[i];
        break;
      }
      case Op::kSum: {
        Tensor& ga = nodes_[n.a].grad;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        break;
      }
      case Op::kDot: {
        Tensor& ga = nodes_[n.a].grad;
        Tensor& gb = nodes_[n.b].grad;
        const Tensor& va = nodes_[n.a].val;
        const Tensor& vb = nodes_[n.b].val;
        for (std::size_t i = 0; i < va.size(); ++i) {
          ga[i] += g[0] * vb[i];
          gb[i] += g[0] * va[i];
        }
        break;
      }
      case Op::kPick: {
        nodes_[n.a].grad[n.index] += g[0];
        break;
      }
      case Op::kLogSoftmax: {
        Tensor& ga = nodes_[n.a].grad;
        double gsum = 0.0;
        for (double gi : g.values()) gsum += gi;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] - n.aux[i] * gsum;
        break;
      }
    }
  }

  for (const Node& n : nodes_) {
    if (n.op != Op::kParameter) continue;
    Tensor& dst = n.pset->entries()[n.pentry].grad;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    if (!dst.all_finite()) {
      throw std::runtime_error("Tape::backward: non-finite gradient for parameter '" +
                               n.pset->entries()[n.pentry].name + "'");
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  input_pool_.clear();
  param_cache_.clear();
  backward_done_ = false;
}

double evaluate_with_gradients(Tape& tape, Value loss, std::span<ParameterSet* const> params) {
  for (ParameterSet* ps : params) ps->zero_grads();
  const double value = tape.scalar_value(loss);
  tape.backward(loss);
  return value;
}

}  // namespace intentrec
