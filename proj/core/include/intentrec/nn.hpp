#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "intentrec/param_set.hpp"
#include "intentrec/rng.hpp"
#include "intentrec/tape.hpp"
#include "intentrec/tensor.hpp"

namespace intentrec {

enum class Activation { kRelu, kIdentity };

/// Adds W0/b0, W1/b1, ... for an MLP with the given layer widths
/// (layer_sizes = {in, hidden..., out}). Weights ~ U(-eps, eps), biases zero.
void init_mlp(ParameterSet& ps, std::span<const std::size_t> layer_sizes, double eps, Rng& rng);

/// Affine/activation stack; hidden layers use `act`, the final layer is
/// linear. Throws a shape error naming the offending layer.
Tensor mlp_forward(const ParameterSet& ps, const Tensor& input,
                   std::span<const std::size_t> layer_sizes, Activation act);

/// Tape-recorded version of mlp_forward; identical arithmetic.
Value mlp_graph(Tape& t, ParameterSet& ps, Value input, std::span<const std::size_t> layer_sizes,
                Activation act);

/// Adds GRU parameters W_u/U_u/b_u, W_r/U_r/b_r, W_c/U_c/b_c.
/// W_* are (hidden x input), U_* are (hidden x hidden).
void init_gru(ParameterSet& ps, std::size_t input_dim, std::size_t hidden_dim, double eps,
              Rng& rng);

/// One GRU step:
///   u = sigmoid(W_u x + U_u h + b_u)
///   r = sigmoid(W_r x + U_r h + b_r)
///   c = tanh(W_c x + U_c (r * h) + b_c)
///   h' = (1 - u) * h + u * c
Tensor gru_step(const ParameterSet& ps, const Tensor& h_prev, const Tensor& x_t);

Value gru_step_graph(Tape& t, ParameterSet& ps, Value h_prev, Value x_t);

}  // namespace intentrec
