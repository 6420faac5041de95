#include "edge/edge_node.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "core/error.hpp"
#include "core/text.hpp"
#include "stores/vector_index.hpp"

namespace dgrag {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint32_t EntityTokens(const Entity& e) {
  return CountTokens(e.name + " (" + e.type_label + "): " + e.description);
}

// "src — dst:" prefix counted as three tokens; endpoint names are already
// paid for by the entity lines
std::uint32_t RelationTokens(const Relation& r) { return CountTokens(r.description) + 3; }

std::uint32_t ChunkTokensOf(const Chunk& c) { return c.token_count + 1; }

KeywordSet KeywordsOrEmpty(std::string_view query, const Provider& provider) {
  try {
    return provider.ExtractKeywords(query);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) return {};  // nothing to look up
    throw;
  }
}

}  // namespace

KnowledgeBundle TruncateBundle(KnowledgeBundle b, int token_budget) {
  const std::uint64_t budget = static_cast<std::uint64_t>(std::max(token_budget, 0));
  std::uint64_t used = 0;
  bool full = false;
  auto keep_prefix = [&](auto& items, auto cost) {
    std::size_t keep = 0;
    while (!full && keep < items.size()) {
      const std::uint64_t c = cost(items[keep]);
      if (used + c > budget) {
        full = true;
        break;
      }
      used += c;
      ++keep;
    }
    if (keep < items.size()) {
      items.resize(keep);
      b.truncated = true;
    }
  };
  keep_prefix(b.entities, EntityTokens);
  keep_prefix(b.relations, RelationTokens);
  keep_prefix(b.chunks, ChunkTokensOf);
  return b;
}

KnowledgeBundle DualLevelRetrieve(std::string_view query, const EdgeKB& kb, const Provider& provider,
                                  const SystemConfig& cfg, KeywordSet* keywords_out) {
  KnowledgeBundle bundle;
  bundle.edge_id = kb.edge_id;
  const KeywordSet ks = KeywordsOrEmpty(query, provider);
  if (keywords_out) *keywords_out = ks;

  std::vector<EntityId> entity_ids;
  std::vector<RelationId> relation_ids;
  std::set<std::string> seen;
  auto add_entity = [&](const EntityId& id) {
    if (seen.insert(id).second) entity_ids.push_back(id);
  };
  auto add_relation = [&](const RelationId& id) {
    if (seen.insert(id).second) relation_ids.push_back(id);
  };

  std::vector<EntityId> matched_entities;
  if (!ks.low_level.empty() && kb.entity_index.size() > 0) {
    const Embedding q = provider.Embed(Join(ks.low_level, ", "));
    for (const auto& hit : kb.entity_index.TopK(q, static_cast<std::size_t>(cfg.entity_top), cfg.min_retrieval_score)) {
      matched_entities.push_back(hit.id);
      add_entity(hit.id);
    }
  }
  if (!ks.high_level.empty() && kb.relation_index.size() > 0) {
    const Embedding q = provider.Embed(Join(ks.high_level, ", "));
    for (const auto& hit :
         kb.relation_index.TopK(q, static_cast<std::size_t>(cfg.relation_top), cfg.min_retrieval_score)) {
      add_relation(hit.id);
    }
  }
  for (std::size_t i = 0; i < relation_ids.size(); ++i) {
    const Relation& r = kb.kg.relations.at(relation_ids[i]);
    add_entity(r.src);
    add_entity(r.dst);
  }
  if (!cfg.ablations.vector_only && !matched_entities.empty()) {
    const std::set<EntityId> seeds(matched_entities.begin(), matched_entities.end());
    const std::set<Triple> triples = Neighbors(kb, seeds);
    // set order keeps the expansion deterministic
    for (const auto& t : triples) add_relation(t.relation);
    for (const auto& t : triples) {
      add_entity(t.src);
      add_entity(t.dst);
    }
  }

  for (const auto& id : entity_ids) bundle.entities.push_back(kb.kg.entities.at(id));
  for (const auto& id : relation_ids) bundle.relations.push_back(kb.kg.relations.at(id));
  std::vector<std::string> elements = entity_ids;
  elements.insert(elements.end(), relation_ids.begin(), relation_ids.end());
  if (!elements.empty()) bundle.chunks = ChunksFor(kb, elements);
  return TruncateBundle(std::move(bundle), cfg.token_budget);
}

KnowledgeBundle ServeRetrieval(std::string_view query, const EdgeKB& kb, const Provider& provider,
                               const SystemConfig& cfg) {
  KnowledgeBundle b = DualLevelRetrieve(query, kb, provider, cfg);
  b.edge_id = kb.edge_id;
  return b;
}

std::vector<CandidateResponse> GenerateCandidates(std::string_view query, const KnowledgeBundle& bundle,
                                                  const Provider& provider, const SystemConfig& cfg) {
  const int n = cfg.ablations.single_inference ? 1 : cfg.n_batch;
  const std::vector<std::string> texts = provider.GenerateBatch(FormatContext(bundle), query, n);
  if (texts.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::kProvider, "provider returned " + std::to_string(texts.size()) + " candidates, wanted " +
                                          std::to_string(n));
  }
  std::vector<CandidateResponse> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back({t, provider.Embed(t)});
  return out;
}

double Jaccard(std::string_view a, std::string_view b) { return JaccardOfSets(WordTokens(a), WordTokens(b)); }

PairwiseSimilarity ComparePairs(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                                const SimilarityWeights& weights) {
  const std::size_t n = candidates.size();
  PairwiseSimilarity p;
  for (auto* m : {&p.cosine, &p.jaccard, &p.claim, &p.fused}) m->assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = std::clamp(Cosine(candidates[i].embedding, candidates[j].embedding), 0.0, 1.0);
      const double jac = Jaccard(candidates[i].text, candidates[j].text);
      const double cl =
          std::clamp(provider.JudgeClaimConsistency({candidates[i].text, candidates[j].text}), 0.0, 1.0);
      const double f = std::clamp(weights.cosine * c + weights.jaccard * jac + weights.claim * cl, 0.0, 1.0);
      p.cosine[i][j] = p.cosine[j][i] = c;
      p.jaccard[i][j] = p.jaccard[j][i] = jac;
      p.claim[i][j] = p.claim[j][i] = cl;
      p.fused[i][j] = p.fused[j][i] = f;
    }
  }
  return p;
}

namespace {

SimilarityReport ReportFrom(const PairwiseSimilarity& p, const SimilarityWeights& w) {
  const std::size_t n = p.cosine.size();
  SimilarityReport r;
  double pairs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      r.cosine_mean += p.cosine[i][j];
      r.jaccard_mean += p.jaccard[i][j];
      r.claim_consistency += p.claim[i][j];
      pairs += 1.0;
    }
  }
  r.cosine_mean /= pairs;
  r.jaccard_mean /= pairs;
  r.claim_consistency /= pairs;
  r.final_score =
      std::clamp(w.cosine * r.cosine_mean + w.jaccard * r.jaccard_mean + w.claim * r.claim_consistency, 0.0, 1.0);
  return r;
}

std::size_t Medoid(const PairwiseSimilarity& p) {
  const std::size_t n = p.fused.size();
  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum += p.fused[i][j];
    }
    const double mean = sum / static_cast<double>(n - 1);
    if (mean > best_mean) {
      best_mean = mean;
      best = i;
    }
  }
  return best;
}

}  // namespace

SimilarityReport MakeSimilarityReport(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                                      const SystemConfig& cfg) {
  if (candidates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "similarity report is undefined for fewer than two candidates");
  }
  return ReportFrom(ComparePairs(candidates, provider, cfg.weights), cfg.weights);
}

GateDecision GateDecide(const std::vector<CandidateResponse>& candidates, const Provider& provider,
                        const SystemConfig& cfg, std::optional<SimilarityReport>* report_out) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "gate needs at least one candidate");
  GateDecision d;
  if (!cfg.ablations.disable_cd) {
    std::vector<std::string> texts;
    for (const auto& c : candidates) texts.push_back(c.text);
    if (provider.JudgeConfidence(texts)) {
      d.route = Route::kGlobal;
      d.low_confidence = true;
      return d;
    }
  }
  if (!cfg.ablations.disable_se && candidates.size() >= 2) {
    const PairwiseSimilarity p = ComparePairs(candidates, provider, cfg.weights);
    const SimilarityReport r = ReportFrom(p, cfg.weights);
    if (report_out) *report_out = r;
    d.similarity_score = r.final_score;
    if (r.final_score >= cfg.sim_threshold) {
      d.route = Route::kLocal;
      d.selected_index = Medoid(p);
    } else {
      d.route = Route::kGlobal;
    }
    return d;
  }
  d.route = Route::kLocal;
  d.selected_index = 0;
  return d;
}

LocalQueryTrace RunLocalQuery(std::string_view query, const EdgeKB& kb, const Provider& provider,
                              const SystemConfig& cfg) {
  LocalQueryTrace t;
  t.query = std::string(query);
  auto t0 = Clock::now();
  t.bundle = DualLevelRetrieve(query, kb, provider, cfg, &t.keywords);
  t.candidates = GenerateCandidates(query, t.bundle, provider, cfg);
  t.phase_timings["local_query"] = SecondsSince(t0);
  t0 = Clock::now();
  t.decision = GateDecide(t.candidates, provider, cfg, &t.report);
  t.phase_timings["gate"] = SecondsSince(t0);
  return t;
}

}  // namespace dgrag
