#include "providers/provider.hpp"

#include <algorithm>
#include <map>

#include "core/error.hpp"
#include "json.hpp"
#include "providers/http_provider.hpp"
#include "providers/mock_provider.hpp"

namespace dgrag {

namespace {

constexpr std::string_view kEntitiesHeader = "-----Entities-----";
constexpr std::string_view kRelationsHeader = "-----Relations-----";
constexpr std::string_view kSourcesHeader = "-----Sources-----";

std::string OneLine(std::string_view s) {
  std::string out(s);
  std::replace(out.begin(), out.end(), '\n', ' ');
  std::replace(out.begin(), out.end(), '\r', ' ');
  return out;
}

}  // namespace

std::unique_ptr<Provider> MakeProvider(const ProviderConfig& pc, const SystemConfig& cfg) {
  if (pc.kind == "mock") {
    return std::make_unique<MockProvider>(cfg.embedding_dim, cfg.rng_seed, cfg.summary_top_entities);
  }
  if (pc.kind == "http") return std::make_unique<HttpProvider>(pc, cfg.embedding_dim);
  throw Error(ErrorCode::kConfig, "unknown provider kind: " + pc.kind);
}

std::string FormatContext(const KnowledgeBundle& bundle) {
  std::map<EntityId, std::string> names;
  for (const auto& e : bundle.entities) names[e.id] = e.name;
  auto name_of = [&](const EntityId& id) {
    auto it = names.find(id);
    return it == names.end() ? id : it->second;
  };
  std::string out;
  if (!bundle.entities.empty()) {
    out.append(kEntitiesHeader).append("\n");
    for (const auto& e : bundle.entities) {
      out += OneLine(e.name) + " (" + OneLine(e.type_label) + "): " + OneLine(e.description) + "\n";
    }
  }
  if (!bundle.relations.empty()) {
    out.append(kRelationsHeader).append("\n");
    for (const auto& r : bundle.relations) {
      out += OneLine(name_of(r.src)) + " — " + OneLine(name_of(r.dst)) + ": " + OneLine(r.description) + "\n";
    }
  }
  if (!bundle.chunks.empty()) {
    out.append(kSourcesHeader).append("\n");
    for (const auto& c : bundle.chunks) out += "[" + c.id + "] " + OneLine(c.text) + "\n";
  }
  return out;
}

ParsedContext ParseContext(std::string_view context) {
  ParsedContext pc;
  enum class Section { kNone, kEntities, kRelations, kSources } section = Section::kNone;
  std::size_t start = 0;
  while (start < context.size()) {
    std::size_t end = context.find('\n', start);
    if (end == std::string_view::npos) end = context.size();
    const std::string_view line = context.substr(start, end - start);
    start = end + 1;
    if (line == kEntitiesHeader) {
      section = Section::kEntities;
    } else if (line == kRelationsHeader) {
      section = Section::kRelations;
    } else if (line == kSourcesHeader) {
      section = Section::kSources;
    } else if (section == Section::kEntities) {
      const std::size_t paren = line.find(" (");
      const std::size_t colon = line.find("): ");
      if (paren == std::string_view::npos) continue;
      ContextEntity e;
      e.name = std::string(line.substr(0, paren));
      if (colon != std::string_view::npos) e.description = std::string(line.substr(colon + 3));
      pc.entities.push_back(std::move(e));
    } else if (section == Section::kSources) {
      const std::size_t close = line.find("] ");
      if (line.empty() || line[0] != '[' || close == std::string_view::npos) continue;
      pc.sources.emplace_back(std::string(line.substr(1, close - 1)), std::string(line.substr(close + 2)));
    }
  }
  return pc;
}

bool ContainsInsufficiencyPhrase(std::string_view text) {
  static const char* kPhrases[] = {"insufficient information", "need more details", "i don't know",
                                   "cannot provide an answer", "don't have information"};
  std::string lower;
  lower.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    // U+2019 right single quotation mark counts as an apostrophe
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x99) {
      lower.push_back('\'');
      i += 2;
      continue;
    }
    char c = text[i];
    lower.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  // collapse whitespace so line breaks inside a phrase still match
  std::string compact;
  bool space = false;
  for (char c : lower) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !compact.empty()) compact.push_back(' ');
    space = false;
    compact.push_back(c);
  }
  return std::any_of(std::begin(kPhrases), std::end(kPhrases),
                     [&](const char* p) { return compact.find(p) != std::string::npos; });
}

PairwiseVerdict ParsePairwiseVerdict(std::string_view model_output) {
  const std::size_t open = model_output.find('{');
  const std::size_t close = model_output.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw Error(ErrorCode::kJudging, "judge output contains no JSON object");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(model_output.substr(open, close - open + 1));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kJudging, std::string("judge output is not valid JSON: ") + e.what());
  }
  PairwiseVerdict v;
  for (const char* metric : kJudgeMetrics) {
    auto it = j.find(metric);
    if (it == j.end() || !it->is_object()) {
      throw Error(ErrorCode::kJudging, std::string("judge verdict missing metric ") + metric);
    }
    MetricVerdict mv;
    const auto w = it->find("Winner");
    if (w == it->end() || !w->is_string()) {
      throw Error(ErrorCode::kJudging, std::string("judge verdict missing winner for ") + metric);
    }
    std::string winner = w->get<std::string>();
    if (winner == "Answer 1" || winner == "1") winner = "A";
    if (winner == "Answer 2" || winner == "2") winner = "B";
    if (winner != "A" && winner != "B") {
      throw Error(ErrorCode::kJudging, std::string("judge winner must be A or B for ") + metric);
    }
    mv.winner = winner;
    const auto ex = it->find("Explanation");
    if (ex != it->end() && ex->is_string()) mv.explanation = ex->get<std::string>();
    v[metric] = std::move(mv);
  }
  return v;
}

}  // namespace dgrag
