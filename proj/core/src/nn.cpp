#include "intentrec/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "intentrec/scalar_ops.hpp"

namespace intentrec {

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, double eps, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-eps, eps);
  return t;
}

void check_layer_shapes(const ParameterSet& ps, std::span<const std::size_t> layer_sizes,
                        std::size_t input_len) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least two layer sizes");
  if (input_len != layer_sizes[0]) {
    throw std::invalid_argument("mlp layer 0: input length " + std::to_string(input_len) +
                                " does not match declared width " + std::to_string(layer_sizes[0]));
  }
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::string wname = "W" + std::to_string(l);
    const std::string bname = "b" + std::to_string(l);
    if (!ps.has(wname) || !ps.has(bname)) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + ": missing parameters " +
                                  wname + "/" + bname);
    }
    const Tensor& w = ps.value(wname);
    if (w.ndim() != 2 || w.rows() != layer_sizes[l + 1] || w.cols() != layer_sizes[l]) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + ": weight shape " +
                                  w.shape_str() + " does not match sizes " +
                                  std::to_string(layer_sizes[l + 1]) + "x" +
                                  std::to_string(layer_sizes[l]));
    }
    const Tensor& b = ps.value(bname);
    if (b.ndim() != 1 || b.size() != layer_sizes[l + 1]) {
      throw std::invalid_argument("mlp layer " + std::to_string(l) + ": bias shape " +
                                  b.shape_str() + " does not match width " +
                                  std::to_string(layer_sizes[l + 1]));
    }
  }
}

}  // namespace

void init_mlp(ParameterSet& ps, std::span<const std::size_t> layer_sizes, double eps, Rng& rng) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init_mlp: need at least two sizes");
  if (eps <= 0.0) throw std::invalid_argument("init_mlp: non-positive init epsilon");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    ps.add("W" + std::to_string(l), uniform_tensor({layer_sizes[l + 1], layer_sizes[l]}, eps, rng));
    ps.add("b" + std::to_string(l), Tensor({layer_sizes[l + 1]}));
  }
}

Tensor mlp_forward(const ParameterSet& ps, const Tensor& input,
                   std::span<const std::size_t> layer_sizes, Activation act) {
  check_layer_shapes(ps, layer_sizes, input.size());
  // Same evaluation order as mlp_graph, so both routes agree bitwise.
  Tensor h = input;
  const std::size_t n_layers = layer_sizes.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Tensor& w = ps.value("W" + std::to_string(l));
    const Tensor& b = ps.value("b" + std::to_string(l));
    Tensor out({w.rows()});
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double s = 0.0;
      const double* wrow = w.data() + i * w.cols();
      for (std::size_t j = 0; j < w.cols(); ++j) s += wrow[j] * h[j];
      out[i] = s + b[i];
    }
    if (l + 1 < n_layers && act == Activation::kRelu) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
    }
    h = std::move(out);
  }
  return h;
}

Value mlp_graph(Tape& t, ParameterSet& ps, Value input, std::span<const std::size_t> layer_sizes,
                Activation act) {
  check_layer_shapes(ps, layer_sizes, t.value(input).size());
  Value h = input;
  const std::size_t n_layers = layer_sizes.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Value w = t.parameter(ps, "W" + std::to_string(l));
    Value b = t.parameter(ps, "b" + std::to_string(l));
    h = t.add(t.matvec(w, h), b);
    if (l + 1 < n_layers && act == Activation::kRelu) h = t.relu(h);
  }
  return h;
}

void init_gru(ParameterSet& ps, std::size_t input_dim, std::size_t hidden_dim, double eps,
              Rng& rng) {
  if (eps <= 0.0) throw std::invalid_argument("init_gru: non-positive init epsilon");
  for (const char* gate : {"u", "r", "c"}) {
    const std::string g(gate);
    ps.add("W_" + g, uniform_tensor({hidden_dim, input_dim}, eps, rng));
    ps.add("U_" + g, uniform_tensor({hidden_dim, hidden_dim}, eps, rng));
    ps.add("b_" + g, Tensor({hidden_dim}));
  }
}

namespace {

void check_gru_shapes(const ParameterSet& ps, std::size_t h_len, std::size_t x_len) {
  const Tensor& wu = ps.value("W_u");
  const Tensor& uu = ps.value("U_u");
  if (wu.cols() != x_len) {
    throw std::invalid_argument("gru_step: input length " + std::to_string(x_len) +
                                " does not match W_* shape " + wu.shape_str());
  }
  if (uu.cols() != h_len || uu.rows() != h_len) {
    throw std::invalid_argument("gru_step: hidden length " + std::to_string(h_len) +
                                " does not match U_* shape " + uu.shape_str());
  }
}

// Same summation order as the graph route: (W x) + (U h), then + b.
Tensor gate_preact(const ParameterSet& ps, const std::string& g, const Tensor& x, const Tensor& h) {
  const Tensor& w = ps.value("W_" + g);
  const Tensor& u = ps.value("U_" + g);
  const Tensor& b = ps.value("b_" + g);
  Tensor out({w.rows()});
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double sw = 0.0;
    const double* wrow = w.data() + i * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) sw += wrow[j] * x[j];
    double su = 0.0;
    const double* urow = u.data() + i * u.cols();
    for (std::size_t j = 0; j < u.cols(); ++j) su += urow[j] * h[j];
    out[i] = (sw + su) + b[i];
  }
  return out;
}

}  // namespace

Tensor gru_step(const ParameterSet& ps, const Tensor& h_prev, const Tensor& x_t) {
  check_gru_shapes(ps, h_prev.size(), x_t.size());
  const std::size_t H = h_prev.size();
  Tensor u = gate_preact(ps, "u", x_t, h_prev);
  Tensor r = gate_preact(ps, "r", x_t, h_prev);
  for (std::size_t i = 0; i < H; ++i) {
    u[i] = sigmoid_scalar(u[i]);
    r[i] = sigmoid_scalar(r[i]);
  }
  Tensor rh({H});
  for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * h_prev[i];
  Tensor c = gate_preact(ps, "c", x_t, rh);
  Tensor h({H});
  for (std::size_t i = 0; i < H; ++i) {
    c[i] = std::tanh(c[i]);
    // h' = (1-u)h + uc, evaluated as h + u(c-h) to match gru_step_graph bitwise
    h[i] = h_prev[i] + u[i] * (c[i] - h_prev[i]);
  }
  return h;
}

Value gru_step_graph(Tape& t, ParameterSet& ps, Value h_prev, Value x_t) {
  check_gru_shapes(ps, t.value(h_prev).size(), t.value(x_t).size());
  auto gate = [&](const std::string& g, Value h_in) {
    Value w = t.parameter(ps, "W_" + g);
    Value u = t.parameter(ps, "U_" + g);
    Value b = t.parameter(ps, "b_" + g);
    return t.add(t.add(t.matvec(w, x_t), t.matvec(u, h_in)), b);
  };
  Value u = t.sigmoid(gate("u", h_prev));
  Value r = t.sigmoid(gate("r", h_prev));
  Value c = t.tanh_(gate("c", t.mul(r, h_prev)));
  // h' = h + u * (c - h)
  return t.add(h_prev, t.mul(u, t.sub(c, h_prev)));
}

}  // namespace intentrec
