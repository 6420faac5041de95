#include "providers/mock_provider.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "core/error.hpp"
#include "core/text.hpp"

namespace dgrag {

namespace {

constexpr std::size_t kMaxSummaryChars = 2048;

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> SplitFields(std::string_view body, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == sep) {
      out.push_back(Trim(body.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] void Malformed(std::size_t offset, const std::string& why) {
  throw Error(ErrorCode::kExtraction,
              "malformed annotation at byte offset " + std::to_string(offset) + ": " + why);
}

bool StartsUpper(std::string_view w) { return !w.empty() && w[0] >= 'A' && w[0] <= 'Z'; }

// Maximal runs of capitalized words, ignoring a lone capitalized word that
// only opens a sentence.
ExtractionResult HeuristicExtract(std::string_view text) {
  ExtractionResult res;
  std::set<std::string> seen;
  for (const auto& sentence_raw : [&] {
         std::vector<std::string> s;
         std::string cur;
         for (char c : text) {
           cur.push_back(c);
           if (c == '.' || c == '!' || c == '?' || c == '\n') {
             s.push_back(cur);
             cur.clear();
           }
         }
         if (!cur.empty()) s.push_back(cur);
         return s;
       }()) {
    const std::string sentence = Trim(sentence_raw);
    std::vector<std::string> words;
    for (const auto& w : SplitFields(sentence, ' ')) {
      std::string stripped;
      for (char c : w) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || static_cast<unsigned char>(c) >= 0x80) {
          stripped.push_back(c);
        }
      }
      if (!stripped.empty()) words.push_back(stripped);
    }
    std::size_t i = 0;
    while (i < words.size()) {
      if (!StartsUpper(words[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < words.size() && StartsUpper(words[j])) ++j;
      std::vector<std::string> run(words.begin() + static_cast<long>(i), words.begin() + static_cast<long>(j));
      while (!run.empty() && IsStopword(NormalizeEntityName(run.front()))) run.erase(run.begin());
      const bool lone_opener = (i == 0 && j - i == 1);
      if (!run.empty() && !lone_opener) {
        std::string name = NormalizeEntityName(Join(run, " "));
        if (seen.insert(name).second) {
          res.entities.push_back({name, "other", sentence});
        }
      }
      i = j;
    }
  }
  return res;
}

}  // namespace

MockProvider::MockProvider(int embedding_dim, std::uint64_t seed, int summary_top_entities)
    : dim_(embedding_dim), seed_(seed), summary_top_(summary_top_entities) {
  if (dim_ <= 0) throw Error(ErrorCode::kInvalidArgument, "embedding_dim must be positive");
}

ProviderProfile MockProvider::Profile() const { return {"mock", true, dim_}; }

ExtractionResult MockProvider::ExtractElements(std::string_view text) const {
  if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "chunk text is empty");
  ExtractionResult res;
  bool any_annotation = false;
  std::size_t pos = 0;
  while ((pos = text.find('@', pos)) != std::string_view::npos) {
    if (pos + 2 >= text.size() || (text[pos + 1] != 'E' && text[pos + 1] != 'R') || text[pos + 2] != '[') {
      ++pos;
      continue;
    }
    any_annotation = true;
    const bool is_entity = text[pos + 1] == 'E';
    const std::size_t open = pos + 3;
    const std::size_t close = text.find(']', open);
    if (close == std::string_view::npos) Malformed(pos, "missing ']'");
    const std::string_view body = text.substr(open, close - open);
    if (body.find('[') != std::string_view::npos) Malformed(pos, "nested '['");
    auto fields = SplitFields(body, '|');
    if (is_entity) {
      if (fields.size() != 3) Malformed(pos, "@E needs name|type|description");
      std::string name = NormalizeEntityName(fields[0]);
      if (name.empty()) Malformed(pos, "empty entity name");
      res.entities.push_back({name, fields[1], fields[2]});
    } else {
      if (fields.size() != 3 && fields.size() != 4) Malformed(pos, "@R needs src|dst|description[|keywords]");
      std::string src = NormalizeEntityName(fields[0]);
      std::string dst = NormalizeEntityName(fields[1]);
      if (src.empty() || dst.empty()) Malformed(pos, "empty relation endpoint");
      ExtractedRelation rel{src, dst, fields[2], {}};
      if (fields.size() == 4) {
        for (auto& kw : SplitFields(fields[3], ';')) {
          if (!kw.empty()) rel.keywords.push_back(std::move(kw));
        }
      }
      res.relations.push_back(std::move(rel));
    }
    pos = close + 1;
  }
  if (!any_annotation) return HeuristicExtract(text);
  return res;
}

std::size_t MockProvider::Bucket(std::string_view word) const {
  return static_cast<std::size_t>(Fnv1a64(word, seed_) % static_cast<std::uint64_t>(dim_));
}

Embedding MockProvider::Embed(std::string_view text) const {
  const auto words = WordTokens(text);
  if (words.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot embed text with no content");
  std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& w : words) acc[Bucket(w)] += 1.0;
  double norm = 0.0;
  for (double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  Embedding v(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) v[i] = static_cast<float>(acc[i] / norm);
  return v;
}

std::vector<std::string> MockProvider::GenerateBatch(std::string_view context, std::string_view query,
                                                     int n) const {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  const ParsedContext pc = ParseContext(context);

  std::vector<ContextEntity> items = pc.entities;
  if (items.empty()) {
    for (const auto& [id, text] : pc.sources) {
      auto sentences = SplitSentences(text);
      std::string first = sentences.empty() ? std::string() : sentences.front();
      if (first.size() > 200) first.resize(200);
      items.push_back({"[" + id + "]", first});
    }
  }
  if (items.empty()) return std::vector<std::string>(static_cast<std::size_t>(n), kInsufficientAnswer);

  const auto qwords = ContentWords(query);
  const std::set<std::string> qset(qwords.begin(), qwords.end());
  std::vector<std::string> names;
  std::vector<const ContextEntity*> grounded;
  for (const auto& it : items) {
    names.push_back(it.name);
    const bool sources_only = pc.entities.empty();
    const auto words = sources_only ? ContentWords(it.description) : WordTokens(it.name);
    if (std::any_of(words.begin(), words.end(), [&](const std::string& w) { return qset.count(w) > 0; })) {
      grounded.push_back(&it);
    }
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::sort(grounded.begin(), grounded.end(),
            [](const ContextEntity* a, const ContextEntity* b) { return a->name < b->name; });

  const std::uint64_t qhash = Fnv1a64(query, seed_);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string text;
    if (!grounded.empty()) {
      text = "Answer based on: " + Join(names, ", ") + ".";
      std::vector<std::string> facts;
      for (const auto* g : grounded) {
        std::string d = g->description;
        while (!d.empty() && (d.back() == '.' || d.back() == ' ')) d.pop_back();
        facts.push_back(g->name + ": " + d + ".");
      }
      // surface-order perturbation only; the set of claims is unchanged
      std::rotate(facts.begin(), facts.begin() + static_cast<long>(static_cast<std::size_t>(i) % facts.size()),
                  facts.end());
      for (const auto& f : facts) text += " " + f;
    } else {
      const std::uint64_t h = Fnv1a64(std::to_string(i), qhash);
      std::vector<std::string> subset;
      for (const auto& name : names) {
        if (Fnv1a64(name, h) & 1U) subset.push_back(name);
      }
      if (subset.empty()) subset.push_back(names[static_cast<std::size_t>(h % names.size())]);
      text = "Answer based on: " + Join(subset, ", ") + ". It is probably connected to topic " +
             HexDigest(h).substr(0, 6) + ".";
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::string MockProvider::Summarize(std::string_view subgraph_text) const {
  if (subgraph_text.empty()) throw Error(ErrorCode::kInvalidArgument, "subgraph text is empty");
  std::map<std::string, int> freq;
  std::map<std::string, int> types;
  std::vector<std::string> order;
  int relations = 0;
  std::size_t start = 0;
  while (start < subgraph_text.size()) {
    std::size_t end = subgraph_text.find('\n', start);
    if (end == std::string_view::npos) end = subgraph_text.size();
    const std::string_view line = subgraph_text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const std::size_t dash = line.find(" — ");
    if (dash != std::string_view::npos) {
      ++relations;
      const std::size_t colon = line.find(": ", dash);
      std::string src(line.substr(0, dash));
      std::string dst(line.substr(dash + 5, (colon == std::string_view::npos ? line.size() : colon) - dash - 5));
      ++freq[src];
      ++freq[dst];
      continue;
    }
    const std::size_t paren = line.find(" (");
    if (paren == std::string_view::npos) continue;
    std::string name(line.substr(0, paren));
    const std::size_t close = line.find("):", paren);
    if (close != std::string_view::npos) ++types[std::string(line.substr(paren + 2, close - paren - 2))];
    if (!freq.count(name)) order.push_back(name);
    ++freq[name];
  }

  std::vector<std::string> ents = order;
  std::stable_sort(ents.begin(), ents.end(), [&](const std::string& a, const std::string& b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return a < b;
  });
  if (ents.size() > static_cast<std::size_t>(summary_top_)) ents.resize(static_cast<std::size_t>(summary_top_));

  std::vector<std::pair<std::string, int>> type_list(types.begin(), types.end());
  std::stable_sort(type_list.begin(), type_list.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> areas;
  for (std::size_t i = 0; i < type_list.size() && i < 3; ++i) areas.push_back(type_list[i].first);

  std::string out = "Subgraph summary. Subject areas: " + Join(areas, ", ") +
                    ". Main entities: " + Join(ents, ", ") +
                    ". Key relationships: relations: " + std::to_string(relations) + ".";
  if (out.size() > kMaxSummaryChars) out.resize(kMaxSummaryChars);
  return out;
}

KeywordSet MockProvider::ExtractKeywords(std::string_view query) const {
  if (query.empty()) throw Error(ErrorCode::kInvalidArgument, "query is empty");
  const auto words = ContentWords(query);
  if (words.empty()) throw Error(ErrorCode::kInvalidArgument, "query has no content words");
  KeywordSet ks;
  std::set<std::string> seen_low, seen_high;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (seen_low.insert(words[i]).second) ks.low_level.push_back(words[i]);
    if (i + 1 < words.size()) {
      std::string bigram = words[i] + " " + words[i + 1];
      if (seen_high.insert(bigram).second) ks.high_level.push_back(std::move(bigram));
    }
  }
  return ks;
}

bool MockProvider::JudgeConfidence(const std::vector<std::string>& candidates) const {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidates to judge");
  return std::any_of(candidates.begin(), candidates.end(),
                     [](const std::string& c) { return ContainsInsufficiencyPhrase(c); });
}

double MockProvider::JudgeClaimConsistency(const std::vector<std::string>& candidates) const {
  if (candidates.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "claim consistency needs at least two candidates");
  }
  std::vector<std::vector<std::string>> claims;
  for (const auto& c : candidates) claims.push_back(SplitSentences(c));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    for (std::size_t j = i + 1; j < claims.size(); ++j) {
      sum += JaccardOfSets(claims[i], claims[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

PairwiseVerdict MockProvider::JudgePairwise(std::string_view, std::string_view, std::string_view) const {
  throw Error(ErrorCode::kUnsupported, "pairwise answer judging requires an LLM provider");
}

}  // namespace dgrag
