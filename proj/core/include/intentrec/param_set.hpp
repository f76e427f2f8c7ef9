#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "intentrec/tensor.hpp"

namespace intentrec {

/// Named, ordered collection of trainable tensors, each with a same-shaped
/// gradient slot. Names are unique; iteration order is insertion order, which
/// fixes the order of every serialized and reduced quantity downstream.
class ParameterSet {
public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, Tensor init);

  bool has(const std::string& name) const { return by_name_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grads();
  double grad_sq_norm() const;

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace intentrec
