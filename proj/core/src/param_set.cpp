#include "intentrec/param_set.hpp"

#include <stdexcept>

namespace intentrec {

Tensor& ParameterSet::add(const std::string& name, Tensor init) {
  if (has(name)) throw std::invalid_argument("ParameterSet: duplicate name '" + name + "'");
  Entry e;
  e.name = name;
  e.grad = Tensor(init.shape());
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  by_name_[name] = entries_.size() - 1;
  return entries_.back().value;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw std::out_of_range("ParameterSet: no entry named '" + name + "'");
  }
  return it->second;
}

Tensor& ParameterSet::value(const std::string& name) { return entries_[index_of(name)].value; }
const Tensor& ParameterSet::value(const std::string& name) const {
  return entries_[index_of(name)].value;
}
Tensor& ParameterSet::grad(const std::string& name) { return entries_[index_of(name)].grad; }
const Tensor& ParameterSet::grad(const std::string& name) const {
  return entries_[index_of(name)].grad;
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.size();
  return n;
}

void ParameterSet::zero_grads() {
  for (Entry& e : entries_) e.grad.fill(0.0);
}

double ParameterSet::grad_sq_norm() const {
  double s = 0.0;
  for (const Entry& e : entries_) {
    for (double g : e.grad.values()) s += g * g;
  }
  return s;
}

}  // namespace intentrec
