#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace dgrag {

struct ScoredId {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredId&) const = default;
};

// dot(a,b) / (|a| |b|), accumulated in double. Throws on dimension mismatch
// or a zero vector.
double Cosine(std::span<const float> a, std::span<const float> b);

// Exact cosine index over unit vectors. Entries are kept ordered by id so
// iteration, serialization and tie-breaking are deterministic.
class VectorIndex {
 public:
  explicit VectorIndex(int dim = 0) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool Contains(const std::string& id) const { return entries_.count(id) > 0; }
  const Embedding& Get(const std::string& id) const;
  const std::map<std::string, Embedding>& entries() const { return entries_; }

  // Rejects vectors of the wrong dimension or with |v| outside 1 +/- 1e-6.
  void Upsert(const std::string& id, Embedding v);
  bool Erase(const std::string& id) { return entries_.erase(id) > 0; }

  // The k highest-scoring entries with score >= min_score, sorted by score
  // descending, ties by id ascending.
  std::vector<ScoredId> TopK(std::span<const float> query, std::size_t k,
                             double min_score = -std::numeric_limits<double>::infinity()) const;

  bool operator==(const VectorIndex&) const = default;

 private:
  int dim_;
  std::map<std::string, Embedding> entries_;
};

}  // namespace dgrag
