#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plfl/param_vector.hpp"

namespace plfl {

enum class GroupTag { shared, personalized };

/// Assignment of every parameter group to either the shared (federated) or
/// the personalized (client-local) side. Entries keep the model's group order,
/// which is also the order `merge` reassembles into.
class PartitionScheme {
 public:
  PartitionScheme() = default;
  explicit PartitionScheme(std::vector<std::pair<std::string, GroupTag>> entries)
      : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& [name, tag] : entries_) {
      if (!seen.insert(name).second) throw std::invalid_argument("group tagged twice: " + name);
    }
  }

  /// Tags every group whose name satisfies `is_shared` as shared.
  template <typename Pred>
  static PartitionScheme from_predicate(const std::vector<GroupSpec>& groups, Pred is_shared) {
    std::vector<std::pair<std::string, GroupTag>> entries;
    for (const auto& g : groups) {
      entries.emplace_back(g.name, is_shared(g.name) ? GroupTag::shared : GroupTag::personalized);
    }
    return PartitionScheme(std::move(entries));
  }

  const std::vector<std::pair<std::string, GroupTag>>& entries() const { return entries_; }

  GroupTag tag(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
      if (n == name) return t;
    }
    throw std::invalid_argument("group not covered by partition scheme: " + name);
  }

  std::vector<std::string> names(GroupTag which) const {
    std::vector<std::string> out;
    for (const auto& [n, t] : entries_) {
      if (t == which) out.push_back(n);
    }
    return out;
  }
  std::vector<std::string> shared_names() const { return names(GroupTag::shared); }
  std::vector<std::string> personalized_names() const { return names(GroupTag::personalized); }

  /// Throws unless the scheme tags exactly the groups of `params`.
  void validate(const ParamVector& params) const {
    if (entries_.size() != params.group_count()) {
      for (const auto& g : params.schema()) tag(g.name);
      throw std::invalid_argument("partition scheme names groups the model does not have");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].first != params.spec(i).name) {
        params.index_of(entries_[i].first);
        throw std::invalid_argument("partition scheme group order differs from model at " +
                                    entries_[i].first);
      }
    }
  }

  bool operator==(const PartitionScheme&) const = default;

 private:
  std::vector<std::pair<std::string, GroupTag>> entries_;
};

struct SplitParams {
  ParamVector shared;
  ParamVector personalized;
};

inline SplitParams split(const ParamVector& params, const PartitionScheme& scheme) {
  scheme.validate(params);
  const auto sh = scheme.shared_names();
  const auto pe = scheme.personalized_names();
  return {params.select(sh), params.select(pe)};
}

/// Inverse of `split`: reassembles the full vector in the scheme's group order.
inline ParamVector merge(const ParamVector& shared, const ParamVector& personalized,
                         const PartitionScheme& scheme) {
  std::vector<GroupSpec> groups;
  groups.reserve(scheme.entries().size());
  for (const auto& [name, tag] : scheme.entries()) {
    const ParamVector& src = tag == GroupTag::shared ? shared : personalized;
    groups.push_back(src.spec(src.index_of(name)));
  }
  if (groups.size() != shared.group_count() + personalized.group_count()) {
    throw std::invalid_argument("merge: inputs carry groups the scheme does not list");
  }
  ParamVector out(std::move(groups));
  for (std::size_t i = 0; i < out.group_count(); ++i) {
    const auto& name = out.spec(i).name;
    const ParamVector& src = scheme.entries()[i].second == GroupTag::shared ? shared : personalized;
    auto from = src.group(name);
    std::copy(from.begin(), from.end(), out.group(i).begin());
  }
  return out;
}

/// Groups covered by the proximal penalty term: the shared ones.
inline std::set<std::string> proximal_penalty_mask(const PartitionScheme& scheme) {
  const auto sh = scheme.shared_names();
  return {sh.begin(), sh.end()};
}

}  // namespace plfl
