#include <algorithm>
#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"
#include "doctest.h"
#include "edge/edge_node.hpp"
#include "fakes.hpp"
#include "gate_scenarios.hpp"
#include "kg/construct.hpp"
#include "providers/mock_provider.hpp"

using namespace dgrag;

namespace {

const char* kDoc =
    "@E[oak tree|plant|an old oak on the ridge] @E[north ridge|place|windy ridge] "
    "@E[acorn crop|produce|acorns collected each autumn] @E[red squirrel|animal|eats acorns] "
    "@E[stone bridge|structure|crosses the brook] @E[brook|water|a small stream] "
    "@R[oak tree|north ridge|grows on|terrain;growth] @R[oak tree|acorn crop|produces|yield;harvest] "
    "@R[red squirrel|acorn crop|feeds on|diet;forage] @R[stone bridge|brook|spans|crossing;water] "
    "@R[brook|north ridge|drains|runoff;terrain]";

EdgeKB Kb(const SystemConfig& cfg) {
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  return BuildEdgeKbFromDocuments({{"forest.txt", kDoc}, {"notes.txt", "The brook floods in spring."}}, "forest",
                                  p, cfg)
      .kb;
}

std::set<std::string> Ids(const KnowledgeBundle& b) {
  std::set<std::string> s;
  for (const auto& e : b.entities) s.insert(e.id);
  for (const auto& r : b.relations) s.insert(r.id);
  return s;
}

// Independent closure: vector hits, relation endpoints, one-hop neighbors.
std::set<std::string> ClosureOracle(std::string_view query, const EdgeKB& kb, const Provider& p,
                                    const SystemConfig& cfg) {
  std::set<std::string> out;
  KeywordSet ks;
  try {
    ks = p.ExtractKeywords(query);
  } catch (const Error&) {
    return out;
  }
  std::set<EntityId> seeds;
  auto scan = [&](const VectorIndex& idx, const std::vector<std::string>& kws, int top) {
    std::vector<std::pair<double, std::string>> all;
    const auto q = p.Embed(Join(kws, ", "));
    for (const auto& [id, v] : idx.entries()) {
      const double s = Cosine(q, v);
      if (s >= cfg.min_retrieval_score) all.push_back({-s, id});
    }
    std::sort(all.begin(), all.end());
    if (all.size() > static_cast<std::size_t>(top)) all.resize(static_cast<std::size_t>(top));
    std::vector<std::string> ids;
    for (const auto& [_, id] : all) ids.push_back(id);
    return ids;
  };
  if (!ks.low_level.empty()) {
    for (const auto& id : scan(kb.entity_index, ks.low_level, cfg.entity_top)) {
      out.insert(id);
      seeds.insert(id);
    }
  }
  if (!ks.high_level.empty()) {
    for (const auto& id : scan(kb.relation_index, ks.high_level, cfg.relation_top)) {
      const auto& r = kb.kg.relations.at(id);
      out.insert({id, r.src, r.dst});
    }
  }
  if (!cfg.ablations.vector_only) {
    for (const auto& [id, r] : kb.kg.relations) {
      if (seeds.count(r.src) || seeds.count(r.dst)) out.insert({id, r.src, r.dst});
    }
  }
  return out;
}

bool IsPrefix(const auto& small, const auto& big) {
  return small.size() <= big.size() && std::equal(small.begin(), small.end(), big.begin());
}

}  // namespace

TEST_CASE("jaccard over word sets") {
  CHECK(Jaccard("", "") == 1.0);
  CHECK(Jaccard("a b", "") == 0.0);
  CHECK(Jaccard("The cat sat", "the CAT, sat!") == 1.0);
  CHECK(Jaccard("a b c", "b c d") == doctest::Approx(0.5));
}

TEST_CASE("retrieval matches the closure oracle") {
  SystemConfig cfg;
  cfg.token_budget = 1 << 20;
  cfg.entity_top = 2;
  cfg.relation_top = 2;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  const EdgeKB kb = Kb(cfg);
  for (const char* q : {"Where does the oak tree grow?", "What do red squirrels eat?", "stone bridge brook",
                        "acorn harvest yield", "completely unrelated astronomy words", "how is it"}) {
    for (bool vo : {false, true}) {
      cfg.ablations.vector_only = vo;
      const auto b = DualLevelRetrieve(q, kb, p, cfg);
      CAPTURE(q);
      CAPTURE(vo);
      CHECK(Ids(b) == ClosureOracle(q, kb, p, cfg));
      CHECK_FALSE(b.truncated);
      CHECK(b.edge_id == "forest");
      CHECK(CheckBundle(b).empty());
      // chunks are exactly the sources of the kept elements
      std::set<ChunkId> want;
      for (const auto& e : b.entities) want.insert(e.source_chunk_ids.begin(), e.source_chunk_ids.end());
      for (const auto& r : b.relations) want.insert(r.source_chunk_ids.begin(), r.source_chunk_ids.end());
      std::set<ChunkId> got;
      for (const auto& c : b.chunks) got.insert(c.id);
      CHECK(got == want);
    }
    cfg.ablations.vector_only = false;
    // graph expansion never loses vector hits
    auto full = Ids(DualLevelRetrieve(q, kb, p, cfg));
    cfg.ablations.vector_only = true;
    auto vec = Ids(DualLevelRetrieve(q, kb, p, cfg));
    cfg.ablations.vector_only = false;
    CHECK(std::includes(full.begin(), full.end(), vec.begin(), vec.end()));
  }
  CHECK(DualLevelRetrieve("how is it", kb, p, cfg).empty());
  CHECK(ServeRetrieval("oak tree", kb, p, cfg) == DualLevelRetrieve("oak tree", kb, p, cfg));
}

TEST_CASE("token budget truncation is monotone") {
  SystemConfig cfg;
  cfg.token_budget = 1 << 20;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  const EdgeKB kb = Kb(cfg);
  const KnowledgeBundle whole = DualLevelRetrieve("oak tree acorn crop north ridge", kb, p, cfg);
  REQUIRE(whole.entities.size() >= 3);
  KnowledgeBundle prev = TruncateBundle(whole, 0);
  CHECK(prev.empty());
  CHECK(prev.truncated);
  for (int budget = 1; budget <= 400; ++budget) {
    const KnowledgeBundle cur = TruncateBundle(whole, budget);
    CHECK(IsPrefix(cur.entities, whole.entities));
    CHECK(IsPrefix(cur.relations, whole.relations));
    CHECK(IsPrefix(cur.chunks, whole.chunks));
    CHECK(cur.entities.size() >= prev.entities.size());
    CHECK(cur.relations.size() >= prev.relations.size());
    CHECK(cur.chunks.size() >= prev.chunks.size());
    const bool dropped = cur.entities.size() < whole.entities.size() || cur.relations.size() < whole.relations.size() ||
                         cur.chunks.size() < whole.chunks.size();
    CHECK(cur.truncated == dropped);
    // later sections only start once earlier ones are complete
    if (!cur.relations.empty()) CHECK(cur.entities.size() == whole.entities.size());
    if (!cur.chunks.empty()) CHECK(cur.relations.size() == whole.relations.size());
    prev = cur;
  }
}

TEST_CASE("candidates follow the batch setting") {
  SystemConfig cfg;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  const EdgeKB kb = Kb(cfg);
  const auto b = DualLevelRetrieve("oak tree", kb, p, cfg);
  const auto c = GenerateCandidates("oak tree", b, p, cfg);
  REQUIRE(c.size() == 3);
  for (const auto& x : c) CHECK(x.embedding == p.Embed(x.text));
  cfg.ablations.single_inference = true;
  CHECK(GenerateCandidates("oak tree", b, p, cfg).size() == 1);
  cfg.n_batch = 5;
  cfg.ablations.single_inference = false;
  CHECK(GenerateCandidates("oak tree", b, p, cfg).size() == 5);

  struct Short : testing_fakes::ForwardingProvider {
    std::vector<std::string> GenerateBatch(std::string_view, std::string_view, int) const override {
      return {"only one"};
    }
  } short_provider;
  CHECK_THROWS_AS(GenerateCandidates("q", b, short_provider, cfg), Error);
}

TEST_CASE("similarity report equals a direct computation") {
  SystemConfig cfg;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  const std::vector<std::string> texts{"Answer: a. b is c.", "Answer: a. d is e.", "b is c. Answer: a. f."};
  std::vector<CandidateResponse> cands;
  for (const auto& t : texts) cands.push_back({t, p.Embed(t)});
  double cos = 0, jac = 0, claim = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = i + 1; j < texts.size(); ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (std::size_t k = 0; k < cands[i].embedding.size(); ++k) {
        const double a = cands[i].embedding[k], b = cands[j].embedding[k];
        dot += a * b;
        ni += a * a;
        nj += b * b;
      }
      cos += std::clamp(dot / std::sqrt(ni * nj), 0.0, 1.0);
      const auto wi = WordTokens(texts[i]), wj = WordTokens(texts[j]);
      const std::set<std::string> si(wi.begin(), wi.end()), sj(wj.begin(), wj.end());
      std::set<std::string> inter;
      std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(), std::inserter(inter, inter.end()));
      jac += double(inter.size()) / double(si.size() + sj.size() - inter.size());
      const auto ci = SplitSentences(texts[i]), cj = SplitSentences(texts[j]);
      const std::set<std::string> ai(ci.begin(), ci.end()), aj(cj.begin(), cj.end());
      std::set<std::string> ci_cj;
      std::set_intersection(ai.begin(), ai.end(), aj.begin(), aj.end(), std::inserter(ci_cj, ci_cj.end()));
      claim += double(ci_cj.size()) / double(ai.size() + aj.size() - ci_cj.size());
      ++pairs;
    }
  }
  const auto r = MakeSimilarityReport(cands, p, cfg);
  CHECK(r.cosine_mean == doctest::Approx(cos / pairs).epsilon(1e-9));
  CHECK(r.jaccard_mean == doctest::Approx(jac / pairs).epsilon(1e-12));
  CHECK(r.claim_consistency == doctest::Approx(claim / pairs).epsilon(1e-12));
  CHECK(r.final_score == doctest::Approx(0.4 * cos / pairs + 0.2 * jac / pairs + 0.4 * claim / pairs).epsilon(1e-9));
  CHECK_THROWS_AS(MakeSimilarityReport({cands[0]}, p, cfg), Error);

  const auto pw = ComparePairs(cands, p, cfg.weights);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pw.fused[i][i] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(pw.fused[i][j] == pw.fused[j][i]);
      CHECK(pw.fused[i][j] >= 0.0);
      CHECK(pw.fused[i][j] <= 1.0);
    }
  }
}

TEST_CASE("gate scenario suite") {
  using namespace gate_scenarios;
  MockProvider p(64, 42);
  const auto scenarios = All();
  CHECK(scenarios.size() >= 12);
  for (const auto& s : scenarios) {
    for (int v = 0; v < kVariantCount; ++v) {
      const SystemConfig cfg = ConfigFor(v);
      const auto d = GateDecide(Candidates(s, p, cfg), p, cfg);
      CAPTURE(s.name);
      const std::string variant = VariantName(v);
      CAPTURE(variant);
      CHECK(d.route == s.expect[v]);
      if (d.low_confidence) CHECK(d.route == Route::kGlobal);
      if (cfg.ablations.disable_cd) CHECK_FALSE(d.low_confidence);
      if (cfg.ablations.disable_se || cfg.ablations.single_inference) CHECK_FALSE(d.similarity_score.has_value());
    }
  }
}

TEST_CASE("each ablation changes only its scoped scenarios") {
  using namespace gate_scenarios;
  MockProvider p(64, 42);
  for (const auto& s : All()) {
    const bool has_phrase = std::any_of(s.texts.begin(), s.texts.end(), ContainsInsufficiencyPhrase);
    const bool first_phrase = ContainsInsufficiencyPhrase(s.texts.front());
    const SystemConfig base = ConfigFor(kBase);
    const auto full = GateDecide(Candidates(s, p, base), p, base);
    // CD only matters where a phrase appears; SE only where CD did not fire
    if (!has_phrase) CHECK(s.expect[kNoCd] == s.expect[kBase]);
    if (has_phrase) CHECK(s.expect[kNoSe] == Route::kGlobal);
    if (!has_phrase) CHECK(s.expect[kNoSe] == Route::kLocal);
    if (full.similarity_score && *full.similarity_score >= base.sim_threshold) CHECK(s.expect[kNoSe] == s.expect[kBase]);
    CHECK(s.expect[kSingle] == (first_phrase ? Route::kGlobal : Route::kLocal));
    CHECK(s.expect[kNoCdNoSe] == Route::kLocal);
  }
}

TEST_CASE("gate is invariant to candidate order") {
  using namespace gate_scenarios;
  MockProvider p(64, 42);
  Rng rng(8);
  for (const auto& s : All()) {
    for (int v : {kBase, kNoCd, kNoSe, kNoCdNoSe}) {
      const SystemConfig cfg = ConfigFor(v);
      auto cands = Candidates(s, p, cfg);
      const auto d0 = GateDecide(cands, p, cfg);
      for (int k = 0; k < 6; ++k) {
        rng.Shuffle(cands);
        const auto d = GateDecide(cands, p, cfg);
        CHECK(d.route == d0.route);
        CHECK(d.low_confidence == d0.low_confidence);
        REQUIRE(d.similarity_score.has_value() == d0.similarity_score.has_value());
        if (d.similarity_score) CHECK(*d.similarity_score == doctest::Approx(*d0.similarity_score).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("threshold and medoid") {
  MockProvider p(64, 42);
  const std::vector<std::string> texts{"x y z. p.", "x y z. q.", "x y z. p."};
  std::vector<CandidateResponse> cands;
  for (const auto& t : texts) cands.push_back({t, p.Embed(t)});
  SystemConfig cfg;
  std::optional<SimilarityReport> report;
  const auto d = GateDecide(cands, p, cfg, &report);
  REQUIRE(report.has_value());
  REQUIRE(d.similarity_score.has_value());
  CHECK(*d.similarity_score == report->final_score);
  // a threshold at the score keeps it local, just above routes global
  cfg.sim_threshold = report->final_score;
  const auto at = GateDecide(cands, p, cfg);
  CHECK(at.route == Route::kLocal);
  CHECK(at.selected_index == 0);  // candidates 0 and 2 tie as medoid; the lower index wins
  cfg.sim_threshold = std::nextafter(report->final_score, 2.0);
  CHECK(GateDecide(cands, p, cfg).route == Route::kGlobal);
  cfg.sim_threshold = 0.0;
  std::swap(cands[0], cands[1]);
  CHECK(GateDecide(cands, p, cfg).selected_index == 1);
  CHECK_THROWS_AS(GateDecide({}, p, cfg), Error);
}

TEST_CASE("local query trace") {
  SystemConfig cfg;
  MockProvider p(cfg.embedding_dim, cfg.rng_seed);
  const EdgeKB kb = Kb(cfg);
  const auto t = RunLocalQuery("What does the red squirrel eat?", kb, p, cfg);
  CHECK(t.candidates.size() == 3);
  CHECK(t.decision.route == Route::kLocal);
  CHECK(t.candidates[t.decision.selected_index].text.find("red squirrel: eats acorns.") != std::string::npos);
  CHECK(t.phase_timings.count("local_query"));
  CHECK(t.phase_timings.count("gate"));
  CHECK(t.keywords.low_level.front() == "red");

  const auto miss = RunLocalQuery("Which comet passed in winter?", kb, p, cfg);
  CHECK(miss.decision.route == Route::kGlobal);
}
