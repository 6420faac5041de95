#include "providers/http_provider.hpp"

#include <cmath>
#include <cstdlib>
#include <future>
#include <set>

#include "core/error.hpp"
#include "core/text.hpp"
#include "httplib.h"
#include "providers/prompts.hpp"

namespace dgrag {

using nlohmann::json;

namespace {

std::string ReplaceAll(std::string s, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
  return s;
}

json ExtractJsonObject(const std::string& content, ErrorCode code, const char* what) {
  const std::size_t open = content.find('{');
  const std::size_t close = content.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw Error(code, std::string(what) + ": model output contains no JSON object");
  }
  try {
    return json::parse(content.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    throw Error(code, std::string(what) + ": " + e.what());
  }
}

std::string NumberedCandidates(const std::vector<std::string>& candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out += "Candidate " + std::to_string(i + 1) + ":\n" + candidates[i] + "\n\n";
  }
  return out;
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig pc, int embedding_dim) : pc_(std::move(pc)), dim_(embedding_dim) {
  const std::string& ep = pc_.endpoint;
  const std::size_t scheme = ep.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::kConfig, "provider endpoint needs a scheme: " + ep);
  const std::size_t path = ep.find('/', scheme + 3);
  host_ = ep.substr(0, path);
  prefix_ = path == std::string::npos ? "" : ep.substr(path);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (!pc_.api_key_env.empty()) {
    if (const char* key = std::getenv(pc_.api_key_env.c_str())) api_key_ = key;
  }
}

ProviderProfile HttpProvider::Profile() const { return {"http:" + pc_.model, false, dim_}; }

void HttpProvider::Acquire() const {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < pc_.max_in_flight; });
  ++in_flight_;
}

void HttpProvider::Release() const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

json HttpProvider::Post(const std::string& path, const json& body) const {
  Acquire();
  struct Releaser {
    const HttpProvider* p;
    ~Releaser() { p->Release(); }
  } releaser{this};

  httplib::Client cli(host_);
  const auto secs = static_cast<time_t>(pc_.timeout_s);
  const auto usecs = static_cast<time_t>((pc_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers{{"X-Dgrag-Schema", "1"}};
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 1; attempt <= pc_.max_attempts; ++attempt) {
    auto res = cli.Post(prefix_ + path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kProvider, "provider returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kProvider, std::string("provider response is not JSON: ") + e.what());
    }
  }
  throw Error(ErrorCode::kRetryable, "provider request " + path + " failed after " +
                                         std::to_string(pc_.max_attempts) + " attempts: " + last_error);
}

std::string HttpProvider::Chat(const std::string& system, const std::string& user, double temperature) const {
  json body = {{"model", pc_.model}, {"temperature", temperature}};
  json messages = json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  body["messages"] = std::move(messages);
  const json res = Post("/chat/completions", body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProvider, std::string("malformed chat completion: ") + e.what());
  }
}

ExtractionResult HttpProvider::ExtractElements(std::string_view chunk_text) const {
  if (chunk_text.empty()) throw Error(ErrorCode::kInvalidArgument, "chunk text is empty");
  const std::string out = Chat("", ReplaceAll(prompts::kExtract, "{text}", chunk_text), 0.0);
  const json j = ExtractJsonObject(out, ErrorCode::kExtraction, "extraction");
  ExtractionResult res;
  try {
    for (const auto& e : j.value("entities", json::array())) {
      std::string name = NormalizeEntityName(e.at("name").get<std::string>());
      if (name.empty()) continue;
      res.entities.push_back({name, e.value("type", "other"), e.value("description", "")});
    }
    for (const auto& r : j.value("relations", json::array())) {
      ExtractedRelation rel{NormalizeEntityName(r.at("src").get<std::string>()),
                            NormalizeEntityName(r.at("dst").get<std::string>()),
                            r.value("description", ""),
                            r.value("keywords", std::vector<std::string>{})};
      if (rel.src_name.empty() || rel.dst_name.empty()) continue;
      res.relations.push_back(std::move(rel));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kExtraction, std::string("extraction schema: ") + e.what());
  }
  return res;
}

Embedding HttpProvider::Embed(std::string_view text) const {
  if (WordTokens(text).empty()) throw Error(ErrorCode::kInvalidArgument, "cannot embed text with no content");
  const json res = Post("/embeddings", {{"model", pc_.embedding_model}, {"input", std::string(text)}});
  std::vector<double> raw;
  try {
    raw = res.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProvider, std::string("malformed embedding response: ") + e.what());
  }
  if (static_cast<int>(raw.size()) != dim_) {
    throw Error(ErrorCode::kProvider, "embedding dimension " + std::to_string(raw.size()) + " != configured " +
                                          std::to_string(dim_));
  }
  double norm = 0.0;
  for (double x : raw) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorCode::kProvider, "provider returned a zero embedding");
  Embedding v(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) v[i] = static_cast<float>(raw[i] / norm);
  return v;
}

std::vector<std::string> HttpProvider::GenerateBatch(std::string_view context, std::string_view query,
                                                     int n) const {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  const std::string system =
      ReplaceAll(prompts::kAnswerSystem, "{context}", context.empty() ? "(no data)" : context);
  const std::string user(query);
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < n; ++i) {
    futures.push_back(std::async(std::launch::async, [&] { return Chat(system, user, pc_.temperature); }));
  }
  std::vector<std::string> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string HttpProvider::Summarize(std::string_view subgraph_text) const {
  if (subgraph_text.empty()) throw Error(ErrorCode::kInvalidArgument, "subgraph text is empty");
  std::string s = Chat("", ReplaceAll(prompts::kSummarize, "{text}", subgraph_text), 0.0);
  if (s.size() > 2048) s.resize(2048);
  return s;
}

KeywordSet HttpProvider::ExtractKeywords(std::string_view query) const {
  if (query.empty()) throw Error(ErrorCode::kInvalidArgument, "query is empty");
  const json j = ExtractJsonObject(Chat("", ReplaceAll(prompts::kKeywords, "{query}", query), 0.0),
                                   ErrorCode::kProvider, "keywords");
  KeywordSet ks;
  auto dedup = [](std::vector<std::string> v) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (auto& s : v) {
      if (!s.empty() && seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
  };
  try {
    ks.low_level = dedup(j.value("low_level_keywords", std::vector<std::string>{}));
    ks.high_level = dedup(j.value("high_level_keywords", std::vector<std::string>{}));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProvider, std::string("keyword schema: ") + e.what());
  }
  if (ks.low_level.empty() && ks.high_level.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query has no keywords");
  }
  return ks;
}

bool HttpProvider::JudgeConfidence(const std::vector<std::string>& candidates) const {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidates to judge");
  // A phrase hit is decisive on its own; the model is asked only otherwise.
  for (const auto& c : candidates) {
    if (ContainsInsufficiencyPhrase(c)) return true;
  }
  const std::string out =
      Chat("", ReplaceAll(prompts::kConfidence, "{candidates}", NumberedCandidates(candidates)), 0.0);
  const auto words = WordTokens(out);
  if (words.empty() || (words.front() != "yes" && words.front() != "no")) {
    throw Error(ErrorCode::kJudging, "confidence judge answered neither yes nor no: " + out);
  }
  return words.front() == "yes";
}

double HttpProvider::JudgeClaimConsistency(const std::vector<std::string>& candidates) const {
  if (candidates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "claim consistency needs at least two candidates");
  }
  const std::string out =
      Chat("", ReplaceAll(prompts::kClaimConsistency, "{candidates}", NumberedCandidates(candidates)), 0.0);
  const std::size_t pos = out.find_first_of("0123456789.");
  if (pos == std::string::npos) throw Error(ErrorCode::kJudging, "claim judge returned no number: " + out);
  char* end = nullptr;
  const double v = std::strtod(out.c_str() + pos, &end);
  if (end == out.c_str() + pos || !(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kJudging, "claim judge returned an invalid score: " + out);
  }
  return v;
}

PairwiseVerdict HttpProvider::JudgePairwise(std::string_view query, std::string_view answer_a,
                                            std::string_view answer_b) const {
  std::string prompt = ReplaceAll(prompts::kPairwiseJudge, "{query}", query);
  prompt = ReplaceAll(prompt, "{answer_a}", answer_a);
  prompt = ReplaceAll(prompt, "{answer_b}", answer_b);
  return ParsePairwiseVerdict(Chat("", prompt, 0.0));
}

}  // namespace dgrag
