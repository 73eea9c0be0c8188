#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathrec/ids.hpp"

namespace pathrec {

// Maps (kind, external key) to dense entity indices. Indices are assigned in
// first-appearance order, so ingestion order fixes the id space.
class EntityRegistry {
 public:
  EntityId get_or_create(EntityKind kind, const std::string& key) {
    auto it = index_.find({kind, key});
    if (it != index_.end()) return EntityId(it->second, kind);
    int32_t idx = static_cast<int32_t>(rows_.size());
    index_.emplace(std::make_pair(kind, key), idx);
    rows_.push_back({kind, key});
    return EntityId(idx, kind);
  }

  // Returns an invalid EntityId if absent.
  EntityId find(EntityKind kind, const std::string& key) const {
    auto it = index_.find({kind, key});
    if (it == index_.end()) return EntityId();
    return EntityId(it->second, kind);
  }

  bool contains(EntityKind kind, const std::string& key) const {
    return index_.count({kind, key}) > 0;
  }

  EntityKind kind_of(int32_t index) const { return row(index).kind; }
  const std::string& key_of(int32_t index) const { return row(index).key; }

  EntityId id(int32_t index) const {
    return EntityId(index, kind_of(index));
  }

  int32_t size() const { return static_cast<int32_t>(rows_.size()); }

  std::vector<EntityId> all_of_kind(EntityKind kind) const {
    std::vector<EntityId> out;
    for (int32_t i = 0; i < size(); ++i) {
      if (rows_[i].kind == kind) out.emplace_back(i, kind);
    }
    return out;
  }

 private:
  struct Row {
    EntityKind kind;
    std::string key;
  };

  const Row& row(int32_t index) const {
    if (index < 0 || index >= size()) {
      throw std::out_of_range("entity index out of range: " +
                              std::to_string(index));
    }
    return rows_[static_cast<size_t>(index)];
  }

  std::map<std::pair<EntityKind, std::string>, int32_t> index_;
  std::vector<Row> rows_;
};

}  // namespace pathrec
