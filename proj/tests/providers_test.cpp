#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "core/error.hpp"
#include "core/text.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "providers/http_provider.hpp"
#include "providers/mock_provider.hpp"

using namespace dgrag;
using nlohmann::json;

namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIo;
}

double Dot(const Embedding& a, const Embedding& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
  return s;
}

// Two word lists whose buckets do not intersect, found by scanning.
std::pair<std::vector<std::string>, std::vector<std::string>> DisjointVocab(const MockProvider& p, int n) {
  std::vector<std::string> a, b;
  std::set<std::size_t> used_a, used_b;
  for (int i = 0; (int(a.size()) < n || int(b.size()) < n) && i < 10000; ++i) {
    const std::string w = "w" + std::to_string(i);
    const auto k = p.Bucket(w);
    if (int(a.size()) < n && !used_b.count(k)) {
      a.push_back(w);
      used_a.insert(k);
    } else if (int(b.size()) < n && !used_a.count(k)) {
      b.push_back(w);
      used_b.insert(k);
    }
  }
  return {a, b};
}

KnowledgeBundle SampleBundle() {
  KnowledgeBundle b;
  b.edge_id = "e";
  b.entities = {{"e1", "loamy harvest", "crop", "Yields the registry code AGR-1.", {"c1"}},
                {"e2", "dry orchard", "place", "A slope of pears", {"c1"}}};
  b.relations = {{"r1", "e1", "e2", "grown in", {"growing"}, {"c1"}}};
  b.chunks = {{"c1", "doc", 0, "Line one.\nLine two.", 4}};
  return b;
}

}  // namespace

TEST_CASE("annotation extraction") {
  MockProvider p(64, 1);
  const auto r = p.ExtractElements(
      "Intro @E[ Alan  Turing |person| computer scientist ] and @E[Bletchley Park|place|estate] "
      "@R[alan turing|bletchley park|worked at|codebreaking; war ;] tail @R[a|b|c]");
  REQUIRE(r.entities.size() == 2);
  CHECK(r.entities[0] == ExtractedEntity{"alan turing", "person", "computer scientist"});
  CHECK(r.entities[1].name == "bletchley park");
  REQUIRE(r.relations.size() == 2);
  CHECK(r.relations[0] ==
        ExtractedRelation{"alan turing", "bletchley park", "worked at", {"codebreaking", "war"}});
  CHECK(r.relations[1].keywords.empty());
  // an @ that does not open an annotation is plain text
  CHECK(p.ExtractElements("mail me @ home @X[y] @E[q|t|d]").entities.size() == 1);
}

TEST_CASE("malformed annotations name the offset") {
  MockProvider p(64, 1);
  for (const char* bad : {"abc @E[x|y", "abc @E[x|y]", "abc @E[x [y]|t|d]", "abc @E[ |t|d]", "abc @R[a|b]",
                          "abc @R[a| |d]", "abc @R[a|b|c|d|e]"}) {
    try {
      p.ExtractElements(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kExtraction);
      CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
    }
  }
  CHECK(CodeOf([&] { p.ExtractElements(""); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("heuristic extraction without annotations") {
  MockProvider p(64, 1);
  const auto r = p.ExtractElements("Researchers at Bletchley Park met Alan Turing. The Park was large.");
  std::vector<std::string> names;
  for (const auto& e : r.entities) names.push_back(e.name);
  CHECK(names == std::vector<std::string>{"bletchley park", "alan turing", "park"});  // leading stopword stripped
  for (const auto& e : r.entities) CHECK(e.type_label == "other");
  CHECK(r.relations.empty());
  CHECK(p.ExtractElements("nothing capitalized here").entities.empty());
}

TEST_CASE("mock embeddings") {
  MockProvider p(64, 42);
  const auto v = p.Embed("the quick brown fox");
  CHECK(v.size() == 64);
  CHECK(Dot(v, v) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.Embed("fox brown quick the") == v);
  CHECK(p.Embed("The Quick, brown FOX!") == v);
  CHECK(MockProvider(64, 42).Embed("the quick brown fox") == v);
  CHECK(MockProvider(64, 43).Embed("the quick brown fox") != v);
  CHECK(CodeOf([&] { p.Embed(" ... "); }) == ErrorCode::kInvalidArgument);

  // oracle: bucket counts normalized
  std::vector<double> acc(64, 0.0);
  for (const auto& w : WordTokens("alpha beta alpha gamma")) acc[p.Bucket(w)] += 1;
  double n = 0;
  for (double x : acc) n += x * x;
  const auto e = p.Embed("alpha beta alpha gamma");
  for (std::size_t i = 0; i < 64; ++i) CHECK(e[i] == doctest::Approx(acc[i] / std::sqrt(n)).epsilon(1e-6));

  const auto [a, b] = DisjointVocab(p, 6);
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 6);
  CHECK(Dot(p.Embed(Join(a, " ")), p.Embed(Join(b, " "))) == 0.0);
  CHECK(Dot(p.Embed(Join(a, " ")), p.Embed(a[0] + " " + a[1])) > 0.0);
}

TEST_CASE("context format round trip") {
  const auto b = SampleBundle();
  const std::string ctx = FormatContext(b);
  CHECK(ctx ==
        "-----Entities-----\n"
        "loamy harvest (crop): Yields the registry code AGR-1.\n"
        "dry orchard (place): A slope of pears\n"
        "-----Relations-----\n"
        "loamy harvest — dry orchard: grown in\n"
        "-----Sources-----\n"
        "[c1] Line one. Line two.\n");
  const auto pc = ParseContext(ctx);
  REQUIRE(pc.entities.size() == 2);
  CHECK(pc.entities[0].name == "loamy harvest");
  CHECK(pc.entities[0].description == "Yields the registry code AGR-1.");
  REQUIRE(pc.sources.size() == 1);
  CHECK(pc.sources[0].first == "c1");
  CHECK(FormatContext(KnowledgeBundle{}).empty());
}

TEST_CASE("mock generation") {
  MockProvider p(64, 42);
  SUBCASE("empty context is insufficient") {
    const auto out = p.GenerateBatch("", "What is the harvest?", 3);
    CHECK(out == std::vector<std::string>(3, kInsufficientAnswer));
    CHECK(p.JudgeConfidence(out));
  }
  SUBCASE("grounded answers share their claims") {
    const auto ctx = FormatContext(SampleBundle());
    const auto out = p.GenerateBatch(ctx, "Registry code of loamy harvest?", 3);
    REQUIRE(out.size() == 3);
    for (const auto& a : out) {
      CHECK(a.find("AGR-1") != std::string::npos);
      CHECK(a.rfind("Answer based on: dry orchard, loamy harvest.", 0) == 0);
    }
    CHECK_FALSE(p.JudgeConfidence(out));
    CHECK(p.JudgeClaimConsistency(out) == 1.0);
    CHECK(p.GenerateBatch(ctx, "Registry code of loamy harvest?", 3) == out);
  }
  SUBCASE("ungrounded answers disagree") {
    const auto ctx = FormatContext(SampleBundle());
    const auto out = p.GenerateBatch(ctx, "Who won the regatta?", 3);
    REQUIRE(out.size() == 3);
    CHECK_FALSE(p.JudgeConfidence(out));
    CHECK(std::set<std::string>(out.begin(), out.end()).size() == 3);
    CHECK(p.JudgeClaimConsistency(out) < 0.7);
  }
  SUBCASE("sources only") {
    KnowledgeBundle b;
    b.chunks = {{"c9", "d", 0, "Pears ripen late. Other text.", 5}};
    const auto out = p.GenerateBatch(FormatContext(b), "When do pears ripen?", 1);
    CHECK(out[0].find("[c9]: pears ripen late.") != std::string::npos);
  }
  CHECK(CodeOf([&] { p.GenerateBatch("", "q", 0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("confidence phrase rule") {
  MockProvider p(64, 1);
  CHECK(ContainsInsufficiencyPhrase("Sorry, I DON'T   know."));
  CHECK(ContainsInsufficiencyPhrase("I don\xe2\x80\x99t know"));
  CHECK(ContainsInsufficiencyPhrase("We need more\ndetails"));
  CHECK_FALSE(ContainsInsufficiencyPhrase("I know."));
  // adding a phrase-bearing candidate never lowers the flag
  std::vector<std::string> c{"fine answer", "another"};
  CHECK_FALSE(p.JudgeConfidence(c));
  c.push_back("insufficient information");
  CHECK(p.JudgeConfidence(c));
  c.push_back("yet another");
  CHECK(p.JudgeConfidence(c));
  CHECK(CodeOf([&] { p.JudgeConfidence({}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("claim consistency is mean pairwise jaccard") {
  MockProvider p(64, 1);
  const std::vector<std::string> c{"A. B.", "A. C.", "A. B."};
  // pairs: {a,b}/{a,c} = 1/3, {a,b}/{a,b} = 1, {a,c}/{a,b} = 1/3
  CHECK(p.JudgeClaimConsistency(c) == doctest::Approx((1.0 / 3 + 1 + 1.0 / 3) / 3));
  CHECK(p.JudgeClaimConsistency({"x", "x"}) == 1.0);
  CHECK(CodeOf([&] { p.JudgeClaimConsistency({"x"}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("keywords") {
  MockProvider p(64, 1);
  const auto k = p.ExtractKeywords("How does the wheat rust affect wheat yields?");
  CHECK(k.low_level == std::vector<std::string>{"wheat", "rust", "affect", "yields"});
  CHECK(k.high_level ==
        std::vector<std::string>{"wheat rust", "rust affect", "affect wheat", "wheat yields"});
  CHECK(CodeOf([&] { p.ExtractKeywords("how is the"); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { p.ExtractKeywords(""); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("mock summary") {
  MockProvider p(64, 1, 2);
  const std::string text =
      "b (crop): x\n"
      "a (crop): y\n"
      "c (place): z\n"
      "a — c: near\n"
      "a — b: next\n";
  CHECK(p.Summarize(text) ==
        "Subgraph summary. Subject areas: crop, place. Main entities: a, b. Key relationships: relations: 2.");
  CHECK(CodeOf([&] { p.Summarize(""); }) == ErrorCode::kInvalidArgument);
  CHECK(CodeOf([&] { p.JudgePairwise("q", "a", "b"); }) == ErrorCode::kUnsupported);
}

TEST_CASE("pairwise verdict parsing") {
  const std::string good = R"(Here: {"Comprehensiveness": {"Winner": "Answer 1", "Explanation": "x"},
    "Diversity": {"Winner": "B", "Explanation": "y"},
    "Empowerment": {"Winner": "2"},
    "Overall": {"Winner": "A", "Explanation": "z"}} done)";
  const auto v = ParsePairwiseVerdict(good);
  CHECK(v.at("Comprehensiveness").winner == "A");
  CHECK(v.at("Diversity").winner == "B");
  CHECK(v.at("Empowerment").winner == "B");
  CHECK(v.at("Overall").explanation == "z");
  CHECK(CodeOf([] { ParsePairwiseVerdict("no json"); }) == ErrorCode::kJudging);
  CHECK(CodeOf([] { ParsePairwiseVerdict("{bad json}"); }) == ErrorCode::kJudging);
  CHECK(CodeOf([] { ParsePairwiseVerdict(R"({"Overall": {"Winner": "A"}})"); }) == ErrorCode::kJudging);
  CHECK(CodeOf([] {
          ParsePairwiseVerdict(R"({"Comprehensiveness": {"Winner": "C"}, "Diversity": {"Winner": "A"},
            "Empowerment": {"Winner": "A"}, "Overall": {"Winner": "A"}})");
        }) == ErrorCode::kJudging);
}

TEST_CASE("provider factory") {
  SystemConfig cfg;
  CHECK(MakeProvider(cfg.edge_provider, cfg)->Profile().name == "mock");
  ProviderConfig bad;
  bad.kind = "other";
  CHECK(CodeOf([&] { MakeProvider(bad, cfg); }) == ErrorCode::kConfig);
  ProviderConfig noscheme;
  noscheme.kind = "http";
  noscheme.endpoint = "localhost:1";
  CHECK(CodeOf([&] { MakeProvider(noscheme, cfg); }) == ErrorCode::kConfig);
}

namespace {

// Local OpenAI-style server; scripted failures by request count.
struct FakeServer {
  httplib::Server svr;
  std::thread th;
  int port = 0;
  std::atomic<int> chat_calls{0};
  std::atomic<int> embed_calls{0};
  std::atomic<int> fail_first{0};
  std::atomic<int> fail_status{503};
  std::atomic<int> dim{4};
  std::atomic<bool> schema_ok{true};
  std::string reply = "ok";

  FakeServer() {
    auto fail = [this](httplib::Response& res, std::atomic<int>& calls) {
      if (calls.fetch_add(1) < fail_first.load()) {
        res.status = fail_status.load();
        res.set_content("nope", "text/plain");
        return true;
      }
      return false;
    };
    svr.Post("/v1/chat/completions", [this, fail](const httplib::Request& req, httplib::Response& res) {
      if (req.get_header_value("X-Dgrag-Schema") != "1") schema_ok = false;
      if (fail(res, chat_calls)) return;
      const auto body = json::parse(req.body);
      json out{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", reply}}}}})}};
      out["echo_model"] = body.at("model");
      res.set_content(out.dump(), "application/json");
    });
    svr.Post("/v1/embeddings", [this, fail](const httplib::Request& req, httplib::Response& res) {
      if (req.get_header_value("X-Dgrag-Schema") != "1") schema_ok = false;
      if (fail(res, embed_calls)) return;
      std::vector<double> v(static_cast<std::size_t>(dim.load()), 0.0);
      v[0] = 3.0;
      if (v.size() > 1) v[1] = 4.0;
      res.set_content(json{{"data", json::array({{{"embedding", v}}})}}.dump(), "application/json");
    });
    port = svr.bind_to_any_port("127.0.0.1");
    th = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~FakeServer() {
    svr.stop();
    th.join();
  }

  ProviderConfig Config() const {
    ProviderConfig pc;
    pc.kind = "http";
    pc.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
    pc.model = "m";
    pc.timeout_s = 5.0;
    pc.max_attempts = 3;
    return pc;
  }
};

}  // namespace

TEST_CASE("http provider against a local server") {
  FakeServer fake;
  HttpProvider p(fake.Config(), 4);

  SUBCASE("embedding normalized and schema header sent") {
    const auto v = p.Embed("hello world");
    CHECK(v == Embedding{0.6f, 0.8f, 0.0f, 0.0f});
    CHECK(fake.schema_ok.load());
  }
  SUBCASE("dimension mismatch") {
    fake.dim = 5;
    CHECK(CodeOf([&] { p.Embed("hello"); }) == ErrorCode::kProvider);
  }
  SUBCASE("transient failures are retried") {
    fake.fail_first = 2;
    fake.fail_status = 503;
    CHECK(p.Chat("", "hi", 0.0) == "ok");
    CHECK(fake.chat_calls.load() == 3);
  }
  SUBCASE("rate limiting exhausts attempts") {
    fake.fail_first = 10;
    fake.fail_status = 429;
    CHECK(CodeOf([&] { p.Chat("", "hi", 0.0); }) == ErrorCode::kRetryable);
    CHECK(fake.chat_calls.load() == 3);
  }
  SUBCASE("client errors are not retried") {
    fake.fail_first = 10;
    fake.fail_status = 400;
    CHECK(CodeOf([&] { p.Chat("", "hi", 0.0); }) == ErrorCode::kProvider);
    CHECK(fake.chat_calls.load() == 1);
  }
  SUBCASE("structured outputs") {
    fake.reply = R"(sure: {"entities": [{"name": " Big  Oak ", "type": "tree", "description": "old"}],
                          "relations": [{"src": "big oak", "dst": "hill", "description": "on"}]})";
    const auto r = p.ExtractElements("some chunk");
    REQUIRE(r.entities.size() == 1);
    CHECK(r.entities[0].name == "big oak");
    CHECK(r.relations.size() == 1);

    fake.reply = "no json here";
    CHECK(CodeOf([&] { p.ExtractElements("chunk"); }) == ErrorCode::kExtraction);

    fake.reply = "Yes, they diverge.";
    CHECK(p.JudgeConfidence({"a", "b"}));
    CHECK(p.JudgeConfidence({"I don't know", "b"}));
    fake.reply = "perhaps";
    CHECK(CodeOf([&] { p.JudgeConfidence({"a"}); }) == ErrorCode::kJudging);

    fake.reply = "Score: 0.25";
    CHECK(p.JudgeClaimConsistency({"a", "b"}) == 0.25);
    fake.reply = "Score: 7";
    CHECK(CodeOf([&] { p.JudgeClaimConsistency({"a", "b"}); }) == ErrorCode::kJudging);

    fake.reply = R"({"low_level_keywords": ["oak", "oak", ""], "high_level_keywords": ["trees"]})";
    const auto k = p.ExtractKeywords("oak?");
    CHECK(k.low_level == std::vector<std::string>{"oak"});
    CHECK(k.high_level == std::vector<std::string>{"trees"});

    fake.reply = "answer";
    CHECK(p.GenerateBatch("", "q", 3) == std::vector<std::string>(3, "answer"));
  }
}

TEST_CASE("http provider with no server") {
  ProviderConfig pc;
  pc.kind = "http";
  pc.endpoint = "http://127.0.0.1:1";
  pc.max_attempts = 2;
  pc.timeout_s = 1.0;
  HttpProvider p(pc, 4);
  CHECK(CodeOf([&] { p.Chat("", "x", 0.0); }) == ErrorCode::kRetryable);
}
