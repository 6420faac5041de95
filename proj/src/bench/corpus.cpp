#include "bench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"
#include "json.hpp"

namespace dgrag {

namespace fs = std::filesystem;

std::vector<BenchQuery> LoadQueries(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open query file " + path.string());
  std::vector<BenchQuery> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      BenchQuery q;
      q.id = j.at("id").get<std::string>();
      q.text = j.at("text").get<std::string>();
      q.domain_label = j.value("domain", "");
      q.origin_edge = j.at("origin_edge").get<std::string>();
      out.push_back(std::move(q));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void SaveQueries(const fs::path& path, const std::vector<BenchQuery>& queries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& q : queries) {
    nlohmann::json j{{"id", q.id}, {"text", q.text}, {"domain", q.domain_label}, {"origin_edge", q.origin_edge}};
    out << j.dump() << "\n";
  }
}

namespace {

struct Vocabulary {
  const char* domain;
  const char* code_prefix;
  std::vector<std::string> modifiers;
  std::vector<std::string> heads;
  std::vector<std::string> context;
  std::vector<std::string> held_out;
  std::vector<std::string> types;
};

const std::vector<Vocabulary>& Vocabularies() {
  static const std::vector<Vocabulary> v = {
      {"agriculture",
       "AGR",
       {"alluvial", "arable", "organic", "perennial", "terraced", "irrigated", "fallow", "loamy", "drought", "hybrid",
        "heirloom", "rotational", "composted", "grazing", "seasonal", "dryland", "mulched", "tilled", "greenhouse",
        "orchard"},
       {"soil", "wheat", "barley", "maize", "sorghum", "tractor", "silo", "furrow", "paddock", "harvest", "seedbed",
        "fertilizer", "pasture", "vineyard", "irrigation", "cultivar", "livestock", "granary", "tillage", "manure"},
       {"farmers", "planting", "yield", "acreage", "crops", "growers", "agronomy", "fields", "rainfall", "topsoil",
        "nutrients", "ploughing", "sowing", "rural", "cattle", "hectares", "forage", "weeds", "seeds", "agrarian"},
       {"apiary", "hedgerow", "thresher", "windbreak", "sharecrop", "cowshed"},
       {"crop", "practice", "equipment"}},
      {"computing",
       "CMP",
       {"distributed", "concurrent", "recursive", "compiled", "virtual", "encrypted", "cached", "indexed",
        "asynchronous", "parallel", "embedded", "sharded", "immutable", "relational", "binary", "scalable",
        "vectorized", "containerized", "interpreted", "quantum"},
       {"kernel", "compiler", "scheduler", "database", "protocol", "processor", "router", "algorithm", "cluster",
        "bytecode", "hashmap", "mutex", "socket", "bitmap", "firmware", "hypervisor", "pipeline", "debugger",
        "allocator", "tensor"},
       {"software", "programs", "servers", "latency", "throughput", "memory", "threads", "hardware", "developers",
        "computation", "storage", "network", "caching", "queries", "bandwidth", "runtime", "compilation", "datasets",
        "instructions", "benchmarks"},
       {"bootloader", "checksum", "keylogger", "spooler", "linter", "daemon"},
       {"system", "technique", "component"}},
      {"law",
       "LAW",
       {"statutory", "appellate", "contractual", "fiduciary", "criminal", "civil", "constitutional", "notarized",
        "binding", "equitable", "tortious", "custodial", "federal", "municipal", "testamentary", "punitive",
        "injunctive", "adjudicated", "sworn", "probate"},
       {"tribunal", "plaintiff", "defendant", "affidavit", "statute", "verdict", "subpoena", "covenant", "indictment",
        "ordinance", "precedent", "arbitration", "testimony", "liability", "warrant", "easement", "tenancy", "lawsuit",
        "jurisdiction", "clause"},
       {"courts", "judges", "attorneys", "litigation", "legislation", "rulings", "counsel", "lawyers", "justice",
        "hearings", "juries", "prosecution", "tenants", "landlords", "petitions", "legality", "enforcement",
        "citizens", "magistrates", "dispute"},
       {"bailiff", "escrow", "misdemeanor", "paralegal", "parole", "notary"},
       {"doctrine", "instrument", "party"}},
      {"medicine",
       "MED",
       {"cardiac", "renal", "pediatric", "chronic", "acute", "surgical", "neural", "pulmonary", "hepatic", "dermal",
        "oncologic", "viral", "bacterial", "genetic", "clinical", "arterial", "intravenous", "immune", "metabolic",
        "orthopedic"},
       {"vaccine", "antibody", "insulin", "tumor", "biopsy", "stent", "catheter", "enzyme", "syndrome", "therapy",
        "diagnosis", "ventricle", "platelet", "antibiotic", "neuron", "hormone", "lesion", "fracture", "transplant",
        "pathogen"},
       {"patients", "physicians", "hospitals", "treatment", "symptoms", "nurses", "dosage", "clinics", "recovery",
        "infection", "diseases", "surgery", "prescriptions", "blood", "organs", "healthcare", "wards", "tissue",
        "medication", "prognosis"},
       {"stethoscope", "tourniquet", "triage", "suture", "placebo", "bandage"},
       {"condition", "treatment", "anatomy"}},
  };
  return v;
}

void CheckDisjoint() {
  std::map<std::string, std::string> owner;
  for (const auto& v : Vocabularies()) {
    for (const auto* list : {&v.modifiers, &v.heads, &v.context, &v.held_out}) {
      for (const auto& w : *list) {
        if (IsStopword(w)) throw Error(ErrorCode::kIntegrity, "corpus word is a stopword: " + w);
        auto [it, fresh] = owner.emplace(w, v.domain);
        if (!fresh && it->second != v.domain) throw Error(ErrorCode::kIntegrity, "corpus word shared by domains: " + w);
      }
    }
  }
}

template <typename T>
const T& Pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rng.Below(v.size()))];
}

struct Entity {
  std::string name;
  std::string type;
  std::string description;
};

struct Relation {
  std::string src, dst, description;
  std::vector<std::string> keywords;
};

struct Topic {
  std::vector<Entity> entities;
  std::vector<Relation> relations;
};

struct Domain {
  const Vocabulary* vocab;
  std::vector<Topic> topics;
  std::vector<Relation> links;  // between consecutive topics
  Entity marker;
};

Domain MakeDomain(const Vocabulary& v, const CorpusOptions& opts, Rng& rng) {
  Domain d;
  d.vocab = &v;
  if (opts.topics_per_domain > static_cast<int>(v.heads.size()) ||
      opts.entities_per_topic + 1 > static_cast<int>(v.modifiers.size())) {
    throw Error(ErrorCode::kInvalidArgument, "too many topics or entities requested for the corpus vocabulary");
  }
  // each topic is themed by one head noun shared by its entity names
  std::vector<std::string> heads = v.heads;
  rng.Shuffle(heads);
  for (int t = 0; t < opts.topics_per_domain; ++t) {
    Topic topic;
    std::vector<std::string> mods = v.modifiers;
    rng.Shuffle(mods);
    for (int e = 0; e < opts.entities_per_topic; ++e) {
      Entity ent;
      ent.name = mods[static_cast<std::size_t>(e)] + " " + heads[static_cast<std::size_t>(t)];
      ent.type = Pick(rng, v.types);
      ent.description = "A " + ent.type + " known to " + Pick(rng, v.context) + " for its role in " +
                        Pick(rng, v.context) + " and " + Pick(rng, v.context);
      topic.entities.push_back(std::move(ent));
    }
    if (t == 0) d.marker.name = mods[static_cast<std::size_t>(opts.entities_per_topic)] + " " + heads[0];
    const int n = opts.entities_per_topic;
    auto relate = [&](int a, int b) {
      Relation r;
      r.src = topic.entities[static_cast<std::size_t>(a)].name;
      r.dst = topic.entities[static_cast<std::size_t>(b)].name;
      r.keywords = {Pick(rng, v.context), Pick(rng, v.context)};
      r.description = r.src + " supports " + r.dst + " in " + r.keywords[0];
      topic.relations.push_back(std::move(r));
    };
    // ring plus chords from the first entity: dense inside the topic
    for (int i = 0; i < n && n > 1; ++i) {
      if (n == 2 && i == 1) break;
      relate(i, (i + 1) % n);
    }
    for (int i = 2; i < n - 1; ++i) relate(0, i);
    d.topics.push_back(std::move(topic));
  }
  for (int t = 0; t + 1 < opts.topics_per_domain; ++t) {
    Relation r;
    r.src = d.topics[static_cast<std::size_t>(t)].entities.back().name;
    r.dst = d.topics[static_cast<std::size_t>(t) + 1].entities.front().name;
    r.keywords = {Pick(rng, v.context)};
    r.description = r.src + " is linked with " + r.dst + " through " + r.keywords[0];
    d.links.push_back(std::move(r));
  }
  d.marker.type = v.types.front();
  return d;
}

std::string Annotate(const Entity& e) { return "@E[" + e.name + "|" + e.type + "|" + e.description + "]"; }

std::string Annotate(const Relation& r) {
  return "@R[" + r.src + "|" + r.dst + "|" + r.description + "|" + Join(r.keywords, ";") + "]";
}

std::string TopicDocument(const Domain& d, std::size_t t) {
  const Topic& topic = d.topics[t];
  std::ostringstream out;
  out << "Field notes on " << topic.entities.front().name << " and related " << d.vocab->domain << " work.\n\n";
  for (const auto& e : topic.entities) {
    out << "The " << e.name << " is a " << e.type << ". " << Annotate(e) << "\n";
  }
  if (t == 0) out << "The registry lists the " << d.marker.name << ". " << Annotate(d.marker) << "\n";
  out << "\n";
  for (const auto& r : topic.relations) out << Annotate(r) << "\n";
  if (t == 0) {
    Relation r;
    r.src = d.marker.name;
    r.dst = topic.entities.front().name;
    r.keywords = {"registry"};
    r.description = r.src + " records " + r.dst;
    out << Annotate(r) << "\n";
  }
  if (t < d.links.size()) out << Annotate(d.links[t]) << "\n";
  return out.str();
}

std::string Capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// Any relation of the domain, as a question naming both endpoints.
std::string RelationQuestion(const Domain& d, Rng& rng) {
  const Topic& topic = Pick(rng, d.topics);
  const Relation& r = Pick(rng, topic.relations);
  switch (rng.Below(3)) {
    case 0: return "How does " + r.src + " relate to " + r.dst + "?";
    case 1: return Capitalized("link between " + r.src + " and " + r.dst + "?");
    default: return Capitalized("role of " + r.src + " for " + r.dst + "?");
  }
}

std::string UnanswerableQuestion(const Vocabulary& v, Rng& rng) {
  std::string a = Pick(rng, v.held_out);
  std::string b = Pick(rng, v.held_out);
  while (b == a) b = Pick(rng, v.held_out);
  return Capitalized(a + " rules for " + b + "?");
}

}  // namespace

GeneratedCorpus GenerateCorpus(const fs::path& root, const CorpusOptions& opts) {
  if (opts.topics_per_domain < 1 || opts.entities_per_topic < 2 || opts.own_queries < 0 ||
      opts.unanswerable_queries < 0 || opts.foreign_queries < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid corpus options");
  }
  CheckDisjoint();
  Rng rng(opts.seed);
  std::vector<Domain> domains;
  GeneratedCorpus out;
  for (const auto& v : Vocabularies()) {
    domains.push_back(MakeDomain(v, opts, rng));
    Domain& d = domains.back();
    DomainMarker m;
    m.entity = d.marker.name;
    m.code = std::string(v.code_prefix) + "-" + std::to_string(1000 + rng.Below(9000));
    d.marker.description = "The registry code for " + d.marker.name + " is " + m.code;
    out.domains.push_back(v.domain);
    out.markers[v.domain] = m;
  }

  fs::create_directories(root);
  for (const auto& d : domains) {
    const fs::path dir = root / d.vocab->domain;
    fs::create_directories(dir);
    for (std::size_t t = 0; t < d.topics.size(); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "topic_%02zu.txt", t);
      std::ofstream(dir / name, std::ios::binary) << TopicDocument(d, t);
    }
  }

  for (const auto& origin : domains) {
    const std::string edge = origin.vocab->domain;
    int serial = 0;
    auto add = [&](const std::string& text, const std::string& label) {
      char id[64];
      std::snprintf(id, sizeof id, "%s-%03d", edge.c_str(), serial++);
      out.queries.push_back({id, text, label, edge});
    };
    for (int i = 0; i < opts.own_queries; ++i) add(RelationQuestion(origin, rng), edge);
    for (int i = 0; i < opts.unanswerable_queries; ++i) add(UnanswerableQuestion(*origin.vocab, rng), edge);
    for (const auto& other : domains) {
      if (&other == &origin) continue;
      for (int i = 0; i < opts.foreign_queries; ++i) {
        if (i == 0) {
          add(Capitalized("registry code of " + other.marker.name + "?"), other.vocab->domain);
        } else {
          add(RelationQuestion(other, rng), other.vocab->domain);
        }
      }
    }
  }
  SaveQueries(root / "queries.jsonl", out.queries);

  nlohmann::json mj = nlohmann::json::object();
  for (const auto& [dom, m] : out.markers) mj[dom] = {{"entity", m.entity}, {"code", m.code}};
  std::ofstream(root / "markers.json", std::ios::binary) << mj.dump(2) << "\n";
  return out;
}

}  // namespace dgrag
