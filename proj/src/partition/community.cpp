#include "partition/community.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "core/error.hpp"

namespace dgrag {

int CommunityGraph::IndexOf(const EntityId& id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  if (it == nodes.end() || *it != id) return -1;
  return static_cast<int>(it - nodes.begin());
}

CommunityGraph CommunityGraph::FromKnowledgeGraph(const KnowledgeGraph& kg) {
  CommunityGraph g;
  for (const auto& [id, _] : kg.entities) g.nodes.push_back(id);  // map order is sorted
  std::vector<std::map<int, double>> acc(g.nodes.size());
  for (const auto& [_, r] : kg.relations) {
    const int a = g.IndexOf(r.src);
    const int b = g.IndexOf(r.dst);
    if (a < 0 || b < 0) throw Error(ErrorCode::kIntegrity, "relation " + r.id + " has a dangling endpoint");
    if (a == b) continue;
    acc[static_cast<std::size_t>(a)][b] += 1.0;
    acc[static_cast<std::size_t>(b)][a] += 1.0;
    g.total_weight += 1.0;
  }
  g.adj.resize(g.nodes.size());
  for (std::size_t v = 0; v < acc.size(); ++v) {
    for (const auto& [u, w] : acc[v]) g.adj[v].emplace_back(u, w);
  }
  return g;
}

CommunityGraph CommunityGraph::FromEdges(int n, const std::vector<std::pair<int, int>>& edges) {
  CommunityGraph g;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    g.nodes.emplace_back(buf);
  }
  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a == b || a < 0 || b < 0 || a >= n || b >= n) {
      throw Error(ErrorCode::kInvalidArgument, "invalid edge in community graph");
    }
    acc[static_cast<std::size_t>(a)][b] += 1.0;
    acc[static_cast<std::size_t>(b)][a] += 1.0;
    g.total_weight += 1.0;
  }
  g.adj.resize(static_cast<std::size_t>(n));
  for (std::size_t v = 0; v < acc.size(); ++v) {
    for (const auto& [u, w] : acc[v]) g.adj[v].emplace_back(u, w);
  }
  return g;
}

double Modularity(const CommunityGraph& g, const std::vector<int>& membership, double gamma) {
  if (membership.size() != g.nodes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "membership does not cover every node");
  }
  if (g.total_weight <= 0.0) return 0.0;
  const double two_m = 2.0 * g.total_weight;
  std::map<int, double> in, tot;
  for (std::size_t v = 0; v < g.adj.size(); ++v) {
    for (const auto& [u, w] : g.adj[v]) {
      tot[membership[v]] += w;
      if (membership[static_cast<std::size_t>(u)] == membership[v]) in[membership[v]] += w;
    }
  }
  double q = 0.0;
  for (const auto& [c, t] : tot) {
    const double frac = t / two_m;
    q += in[c] / two_m - gamma * frac * frac;
  }
  return q;
}

double Modularity(const CommunityGraph& g, const Partition& p, double gamma) {
  return Modularity(g, ToMembership(g, p), gamma);
}

Partition ToPartition(const CommunityGraph& g, const std::vector<int>& membership) {
  Partition p;
  std::map<int, int> remap;
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    auto [it, _] = remap.try_emplace(membership[v], static_cast<int>(remap.size()));
    p.assignment[g.nodes[v]] = it->second;
  }
  p.community_count = static_cast<int>(remap.size());
  return p;
}

std::vector<int> ToMembership(const CommunityGraph& g, const Partition& p) {
  std::vector<int> mem(g.nodes.size());
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    auto it = p.assignment.find(g.nodes[v]);
    if (it == p.assignment.end()) {
      throw Error(ErrorCode::kInvalidArgument, "partition does not assign node " + g.nodes[v]);
    }
    mem[v] = it->second;
  }
  return mem;
}

bool CommunitiesConnected(const CommunityGraph& g, const std::vector<int>& membership) {
  const std::size_t n = g.nodes.size();
  std::vector<char> seen(n, 0);
  std::set<int> started;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    if (!started.insert(membership[s]).second) return false;  // second component of one community
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (const auto& [u, _] : g.adj[v]) {
        const std::size_t ui = static_cast<std::size_t>(u);
        if (!seen[ui] && membership[ui] == membership[v]) {
          seen[ui] = 1;
          stack.push_back(ui);
        }
      }
    }
  }
  return true;
}

Partition MergeSmall(const Partition& p, const CommunityGraph& g, int size_threshold, MergeStats* stats) {
  std::vector<int> mem = ToMembership(g, p);
  int count = p.community_count;
  int merges = 0;
  while (true) {
    std::vector<int> sizes(static_cast<std::size_t>(count), 0);
    for (int c : mem) ++sizes[static_cast<std::size_t>(c)];
    std::vector<std::map<int, double>> between(static_cast<std::size_t>(count));
    for (std::size_t v = 0; v < g.adj.size(); ++v) {
      for (const auto& [u, w] : g.adj[v]) {
        const int a = mem[v], b = mem[static_cast<std::size_t>(u)];
        if (a != b) between[static_cast<std::size_t>(a)][b] += w;
      }
    }
    int victim = -1;
    for (int c = 0; c < count; ++c) {
      if (sizes[static_cast<std::size_t>(c)] < size_threshold && !between[static_cast<std::size_t>(c)].empty()) {
        victim = c;
        break;
      }
    }
    if (victim < 0) {
      if (stats) {
        stats->merges = merges;
        stats->isolated_undersized = static_cast<int>(
            std::count_if(sizes.begin(), sizes.end(), [&](int s) { return s < size_threshold; }));
      }
      break;
    }
    int target = -1;
    double best = -1.0;
    for (const auto& [d, w] : between[static_cast<std::size_t>(victim)]) {  // ascending d
      if (w > best) {
        best = w;
        target = d;
      }
    }
    for (int& c : mem) {
      if (c == victim) c = target;
      if (c > victim) --c;
    }
    --count;
    ++merges;
  }
  Partition out;
  for (std::size_t v = 0; v < g.nodes.size(); ++v) out.assignment[g.nodes[v]] = mem[v];
  out.community_count = count;
  return out;
}

std::string SubgraphToText(const KnowledgeGraph& kg, const std::vector<EntityId>& community) {
  const std::set<EntityId> members(community.begin(), community.end());
  std::vector<std::string> entity_lines, relation_lines;
  for (const auto& id : members) {
    const Entity& e = kg.entities.at(id);
    entity_lines.push_back(e.name + " (" + e.type_label + "): " + e.description);
  }
  for (const auto& [_, r] : kg.relations) {
    if (members.count(r.src) && members.count(r.dst)) {
      relation_lines.push_back(kg.entities.at(r.src).name + " — " + kg.entities.at(r.dst).name + ": " +
                               r.description);
    }
  }
  std::sort(entity_lines.begin(), entity_lines.end());
  std::sort(relation_lines.begin(), relation_lines.end());
  std::string out;
  for (const auto& l : entity_lines) out += l + "\n";
  for (const auto& l : relation_lines) out += l + "\n";
  return out;
}

std::vector<SubgraphSummary> SummarizeAll(const KnowledgeGraph& kg, const Partition& p, const Provider& provider,
                                          const EdgeId& edge_id) {
  std::vector<SubgraphSummary> out;
  const auto members = p.Members();
  for (int c = 0; c < p.community_count; ++c) {
    const auto& m = members[static_cast<std::size_t>(c)];
    const std::set<EntityId> ms(m.begin(), m.end());
    SubgraphSummary s;
    s.id = SummaryId(edge_id, c);
    s.edge_id = edge_id;
    s.community_id = c;
    s.entity_count = static_cast<std::uint32_t>(m.size());
    for (const auto& [_, r] : kg.relations) {
      if (ms.count(r.src) && ms.count(r.dst)) ++s.relation_count;
    }
    try {
      s.text = provider.Summarize(SubgraphToText(kg, m));
      s.embedding = provider.Embed(s.text);
    } catch (const Error& e) {
      throw Error(e.code(), "summarizing community " + std::to_string(c) + " of " + edge_id + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dgrag
