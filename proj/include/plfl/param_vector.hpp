#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plfl/numerics.hpp"

namespace plfl {

/// Name and 2-D shape of one learnable tensor. Vectors are stored as (n, 1).
struct GroupSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const GroupSpec&) const = default;
};

/// Flat, named container of model parameters (or optimizer moments / updates).
///
/// Groups are laid out contiguously in the order given at construction. Two
/// vectors may only be combined arithmetically when their schemas (names and
/// shapes, in order) are identical.
class ParamVector {
 public:
  ParamVector() = default;

  explicit ParamVector(std::vector<GroupSpec> groups, double fill = 0.0) : groups_(std::move(groups)) {
    offsets_.reserve(groups_.size());
    std::size_t total = 0;
    for (const auto& g : groups_) {
      for (std::size_t i = 0; i < offsets_.size(); ++i) {
        if (groups_[i].name == g.name) throw std::invalid_argument("duplicate parameter group: " + g.name);
      }
      offsets_.push_back(total);
      total += g.size();
    }
    values_.assign(total, fill);
  }

  static ParamVector unflatten(std::vector<GroupSpec> groups, std::span<const double> flat) {
    ParamVector out(std::move(groups));
    require_shape(flat.size() == out.size(), "unflatten: flat length does not match schema");
    std::copy(flat.begin(), flat.end(), out.values_.begin());
    return out;
  }

  static ParamVector zeros_like(const ParamVector& other) { return ParamVector(other.groups_); }

  const std::vector<GroupSpec>& schema() const { return groups_; }
  std::size_t group_count() const { return groups_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (groups_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(const std::string& name) const {
    auto idx = find(name);
    if (!idx) throw std::invalid_argument("unknown parameter group: " + name);
    return *idx;
  }

  const GroupSpec& spec(std::size_t i) const { return groups_.at(i); }

  std::span<double> group(std::size_t i) {
    return std::span<double>(values_).subspan(offsets_.at(i), groups_[i].size());
  }
  std::span<const double> group(std::size_t i) const {
    return std::span<const double>(values_).subspan(offsets_.at(i), groups_[i].size());
  }
  std::span<double> group(const std::string& name) { return group(index_of(name)); }
  std::span<const double> group(const std::string& name) const { return group(index_of(name)); }

  ConstMatrixView view(std::size_t i) const { return {group(i), groups_[i].rows, groups_[i].cols}; }
  MatrixView view(std::size_t i) { return {group(i), groups_[i].rows, groups_[i].cols}; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  bool same_schema(const ParamVector& other) const { return groups_ == other.groups_; }

  void require_same_schema(const ParamVector& other, const char* op) const {
    if (!same_schema(other)) throw ShapeError(std::string("parameter schema mismatch in ") + op);
  }

  /// New vector containing only the named groups, in this vector's order.
  ParamVector select(std::span<const std::string> names) const {
    std::vector<GroupSpec> picked;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (std::find(names.begin(), names.end(), groups_[i].name) != names.end()) {
        picked.push_back(groups_[i]);
        idx.push_back(i);
      }
    }
    for (const auto& n : names) index_of(n);
    ParamVector out(std::move(picked));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto src = group(idx[k]);
      std::copy(src.begin(), src.end(), out.group(k).begin());
    }
    return out;
  }

  ParamVector& operator+=(const ParamVector& o) {
    require_same_schema(o, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  ParamVector& operator-=(const ParamVector& o) {
    require_same_schema(o, "-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  ParamVector& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  /// this += scale * o
  ParamVector& axpy(double scale, const ParamVector& o) {
    require_same_schema(o, "axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * o.values_[i];
    return *this;
  }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  friend ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
  friend ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
  friend ParamVector operator*(double s, ParamVector a) { return a *= s; }

  bool operator==(const ParamVector& o) const { return groups_ == o.groups_ && values_ == o.values_; }

 private:
  std::vector<GroupSpec> groups_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

inline double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  a.require_same_schema(b, "max_abs_diff");
  double worst = 0.0;
  auto x = a.flat();
  auto y = b.flat();
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

}  // namespace plfl
