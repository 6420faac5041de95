#include "stores/vector_index.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace dgrag {

double Cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                                                 std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kInvalidArgument, "cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

const Embedding& VectorIndex::Get(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorCode::kIntegrity, "vector index has no entry " + id);
  return it->second;
}

void VectorIndex::Upsert(const std::string& id, Embedding v) {
  if (static_cast<int>(v.size()) != dim_) {
    throw Error(ErrorCode::kInvalidArgument, "vector for " + id + " has dimension " + std::to_string(v.size()) +
                                                 ", index expects " + std::to_string(dim_));
  }
  double n = 0.0;
  for (float f : v) n += static_cast<double>(f) * f;
  if (std::abs(std::sqrt(n) - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "vector for " + id + " is not unit norm");
  }
  entries_[id] = std::move(v);
}

std::vector<ScoredId> VectorIndex::TopK(std::span<const float> query, std::size_t k, double min_score) const {
  if (static_cast<int>(query.size()) != dim_) {
    throw Error(ErrorCode::kInvalidArgument, "query dimension " + std::to_string(query.size()) +
                                                 " != index dimension " + std::to_string(dim_));
  }
  std::vector<ScoredId> scored;
  scored.reserve(entries_.size());
  for (const auto& [id, v] : entries_) {
    const double s = Cosine(query, v);
    if (s >= min_score) scored.push_back({id, s});
  }
  const auto better = [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(n), scored.end(), better);
  scored.resize(n);
  return scored;
}

}  // namespace dgrag
