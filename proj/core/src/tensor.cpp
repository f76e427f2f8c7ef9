#include "intentrec/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace intentrec {

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape " + shape_str());
  }
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw std::invalid_argument("Tensor: zero dimension in shape " + shape_str());
  }
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_str());
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::of(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::zeros(std::initializer_list<std::size_t> shape) {
  return Tensor(std::vector<std::size_t>(shape));
}

Tensor Tensor::full(std::initializer_list<std::size_t> shape, double v) {
  Tensor t{std::vector<std::size_t>(shape)};
  t.fill(v);
  return t;
}

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= shape_.size()) {
    throw std::out_of_range("Tensor::dim: axis " + std::to_string(i) + " of shape " + shape_str());
  }
  return shape_[i];
}

std::size_t Tensor::rows() const {
  if (ndim() != 2) throw std::invalid_argument("Tensor::rows: not a matrix, shape " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) throw std::invalid_argument("Tensor::cols: not a matrix, shape " + shape_str());
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  if (ndim() != 2 || r >= shape_[0] || c >= shape_[1]) {
    throw std::out_of_range("Tensor::at(" + std::to_string(r) + ", " + std::to_string(c) +
                            ") on shape " + shape_str());
  }
  return data_[r * shape_[1] + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return const_cast<Tensor*>(this)->at(r, c);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ", ";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

}  // namespace intentrec
