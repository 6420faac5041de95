#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "partition/community.hpp"

namespace dgrag {

namespace {

constexpr double kGainEpsilon = 1e-12;

// Working graph for one aggregation level. self_weight holds edge weight that
// became internal to a node through aggregation (each edge counted once).
struct LevelGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> self_weight;
  std::vector<double> strength;
  double two_m = 0.0;
};

LevelGraph FromCommunityGraph(const CommunityGraph& g) {
  LevelGraph lg;
  lg.n = g.size();
  lg.adj = g.adj;
  lg.self_weight.assign(static_cast<std::size_t>(lg.n), 0.0);
  lg.strength.assign(static_cast<std::size_t>(lg.n), 0.0);
  for (int v = 0; v < lg.n; ++v) {
    for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) lg.strength[static_cast<std::size_t>(v)] += w;
  }
  lg.two_m = 2.0 * g.total_weight;
  return lg;
}

int Renumber(std::vector<int>& membership) {
  std::map<int, int> remap;
  for (int& c : membership) {
    auto [it, _] = remap.try_emplace(c, static_cast<int>(remap.size()));
    c = it->second;
  }
  return static_cast<int>(remap.size());
}

LevelGraph Aggregate(const LevelGraph& g, const std::vector<int>& refined, int count) {
  LevelGraph out;
  out.n = count;
  out.adj.resize(static_cast<std::size_t>(count));
  out.self_weight.assign(static_cast<std::size_t>(count), 0.0);
  out.strength.assign(static_cast<std::size_t>(count), 0.0);
  out.two_m = g.two_m;
  std::vector<std::map<int, double>> acc(static_cast<std::size_t>(count));
  for (int v = 0; v < g.n; ++v) {
    const int cv = refined[static_cast<std::size_t>(v)];
    out.self_weight[static_cast<std::size_t>(cv)] += g.self_weight[static_cast<std::size_t>(v)];
    out.strength[static_cast<std::size_t>(cv)] += g.strength[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
      const int cu = refined[static_cast<std::size_t>(u)];
      if (cu == cv) {
        if (u > v) out.self_weight[static_cast<std::size_t>(cv)] += w;
      } else {
        acc[static_cast<std::size_t>(cv)][cu] += w;
      }
    }
  }
  for (int c = 0; c < count; ++c) {
    for (const auto& [d, w] : acc[static_cast<std::size_t>(c)]) out.adj[static_cast<std::size_t>(c)].emplace_back(d, w);
  }
  return out;
}

// Queue-based local moving. Returns true if any node changed community.
bool MoveNodesFast(const LevelGraph& g, std::vector<int>& mem, double gamma, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<double> tot(n, 0.0);
  std::vector<int> count(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    tot[static_cast<std::size_t>(mem[v])] += g.strength[v];
    ++count[static_cast<std::size_t>(mem[v])];
  }
  std::vector<int> empty;
  for (int c = static_cast<int>(n) - 1; c >= 0; --c) {
    if (count[static_cast<std::size_t>(c)] == 0) empty.push_back(c);
  }

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  rng.Shuffle(order);
  std::deque<int> queue(order.begin(), order.end());
  std::vector<char> queued(n, 1);
  std::vector<double> link(n, 0.0);
  std::vector<int> touched;
  bool changed = false;

  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    const std::size_t vi = static_cast<std::size_t>(v);
    queued[vi] = 0;
    const int cur = mem[vi];
    const double kv = g.strength[vi];

    touched.clear();
    for (const auto& [u, w] : g.adj[vi]) {
      const int cu = mem[static_cast<std::size_t>(u)];
      if (link[static_cast<std::size_t>(cu)] == 0.0) touched.push_back(cu);
      link[static_cast<std::size_t>(cu)] += w;
    }

    tot[static_cast<std::size_t>(cur)] -= kv;
    --count[static_cast<std::size_t>(cur)];
    auto gain = [&](int c) {
      return link[static_cast<std::size_t>(c)] - gamma * kv * tot[static_cast<std::size_t>(c)] / g.two_m;
    };
    int best = cur;
    double best_gain = gain(cur);
    for (int c : touched) {
      const double gc = gain(c);
      if (gc > best_gain + kGainEpsilon) {
        best = c;
        best_gain = gc;
      }
    }
    if (0.0 > best_gain + kGainEpsilon && count[static_cast<std::size_t>(cur)] > 0) {
      best = empty.back();
      best_gain = 0.0;
    }
    for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;

    tot[static_cast<std::size_t>(best)] += kv;
    ++count[static_cast<std::size_t>(best)];
    if (best != cur) {
      if (!empty.empty() && empty.back() == best) empty.pop_back();
      if (count[static_cast<std::size_t>(cur)] == 0) empty.push_back(cur);
      mem[vi] = best;
      changed = true;
      for (const auto& [u, _] : g.adj[vi]) {
        const std::size_t ui = static_cast<std::size_t>(u);
        if (!queued[ui] && mem[ui] != best) {
          queued[ui] = 1;
          queue.push_back(u);
        }
      }
    }
  }
  return changed;
}

// Refinement: inside each community, merge singleton nodes into
// well-connected sub-communities, choosing randomly among non-negative gains.
std::vector<int> Refine(const LevelGraph& g, const std::vector<int>& mem, double gamma, double theta, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<int> ref(n);
  std::vector<double> ref_tot(n), ext(n, 0.0);
  std::vector<int> ref_count(n, 1);
  std::vector<double> comm_tot(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    ref[v] = static_cast<int>(v);
    ref_tot[v] = g.strength[v];
    comm_tot[static_cast<std::size_t>(mem[v])] += g.strength[v];
  }
  // weight from each node to the rest of its own community
  std::vector<double> inside(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& [u, w] : g.adj[v]) {
      if (mem[static_cast<std::size_t>(u)] == mem[v]) inside[v] += w;
    }
    ext[v] = inside[v];
  }

  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  rng.Shuffle(order);
  std::vector<double> link(n, 0.0);
  std::vector<int> touched;
  std::vector<std::pair<int, double>> choices;

  for (int v : order) {
    const std::size_t vi = static_cast<std::size_t>(v);
    if (ref_count[static_cast<std::size_t>(ref[vi])] != 1) continue;
    const double kv = g.strength[vi];
    const double s_tot = comm_tot[static_cast<std::size_t>(mem[vi])];
    if (inside[vi] < gamma * kv * (s_tot - kv) / g.two_m) continue;

    touched.clear();
    for (const auto& [u, w] : g.adj[vi]) {
      const std::size_t ui = static_cast<std::size_t>(u);
      if (mem[ui] != mem[vi]) continue;
      const int cu = ref[ui];
      if (link[static_cast<std::size_t>(cu)] == 0.0) touched.push_back(cu);
      link[static_cast<std::size_t>(cu)] += w;
    }

    const int own = ref[vi];
    choices.clear();
    choices.emplace_back(own, 0.0);
    double max_gain = 0.0;
    for (int c : touched) {
      const std::size_t ci = static_cast<std::size_t>(c);
      if (c == own) continue;
      if (ext[ci] < gamma * ref_tot[ci] * (s_tot - ref_tot[ci]) / g.two_m) continue;
      // gain in modularity units
      const double gain = 2.0 * (link[ci] - gamma * kv * ref_tot[ci] / g.two_m) / g.two_m;
      if (gain < 0.0) continue;
      choices.emplace_back(c, gain);
      max_gain = std::max(max_gain, gain);
    }
    int chosen = own;
    if (choices.size() > 1) {
      double total = 0.0;
      for (auto& [c, gain] : choices) {
        gain = std::exp((gain - max_gain) / theta);
        total += gain;
      }
      double r = rng.Real() * total;
      chosen = choices.back().first;
      for (const auto& [c, p] : choices) {
        if (r < p) {
          chosen = c;
          break;
        }
        r -= p;
      }
    }
    if (chosen != own) {
      const std::size_t ci = static_cast<std::size_t>(chosen);
      ref_tot[ci] += kv;
      ref_tot[static_cast<std::size_t>(own)] -= kv;
      ref_count[ci] += 1;
      ref_count[static_cast<std::size_t>(own)] -= 1;
      ext[ci] = ext[ci] + inside[vi] - 2.0 * link[ci];
      ref[vi] = chosen;
    }
    for (int c : touched) link[static_cast<std::size_t>(c)] = 0.0;
  }
  return ref;
}

std::vector<int> OneIteration(const LevelGraph& base, std::vector<int> mem, double gamma, double theta, Rng& rng) {
  LevelGraph g = base;
  std::vector<int> node_map(static_cast<std::size_t>(base.n));
  for (int v = 0; v < base.n; ++v) node_map[static_cast<std::size_t>(v)] = v;
  Renumber(mem);
  while (true) {
    MoveNodesFast(g, mem, gamma, rng);
    const int communities = Renumber(mem);
    if (communities == g.n) break;
    std::vector<int> ref = Refine(g, mem, gamma, theta, rng);
    int ref_count = Renumber(ref);
    if (ref_count == g.n) {
      // refinement merged nothing; aggregate on the moved partition instead
      ref = mem;
      ref_count = communities;
    }
    std::vector<int> agg_mem(static_cast<std::size_t>(ref_count));
    for (int v = 0; v < g.n; ++v) agg_mem[static_cast<std::size_t>(ref[static_cast<std::size_t>(v)])] = mem[static_cast<std::size_t>(v)];
    for (auto& m : node_map) m = ref[static_cast<std::size_t>(m)];
    g = Aggregate(g, ref, ref_count);
    mem = std::move(agg_mem);
  }
  std::vector<int> out(static_cast<std::size_t>(base.n));
  for (int v = 0; v < base.n; ++v) out[static_cast<std::size_t>(v)] = mem[static_cast<std::size_t>(node_map[static_cast<std::size_t>(v)])];
  Renumber(out);
  return out;
}

}  // namespace

std::vector<int> LeidenMembership(const CommunityGraph& g, const LeidenOptions& opts, LeidenTrace* trace) {
  const int n = g.size();
  std::vector<int> mem(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) mem[static_cast<std::size_t>(v)] = v;
  if (n == 0 || g.total_weight <= 0.0) {
    if (trace) trace->modularity_per_iteration.push_back(Modularity(g, mem, opts.gamma));
    return mem;
  }
  const LevelGraph base = FromCommunityGraph(g);
  Rng rng(opts.seed);
  if (trace) trace->modularity_per_iteration.push_back(Modularity(g, mem, opts.gamma));
  for (int it = 0; it < opts.max_iterations; ++it) {
    std::vector<int> next = OneIteration(base, mem, opts.gamma, opts.randomness, rng);
    if (trace) {
      trace->modularity_per_iteration.push_back(Modularity(g, next, opts.gamma));
      trace->iterations = it + 1;
    }
    if (next == mem) break;
    mem = std::move(next);
  }
  return mem;
}

Partition LeidenPartition(const CommunityGraph& g, double gamma, std::uint64_t seed) {
  if (g.size() == 0) throw Error(ErrorCode::kInvalidArgument, "cannot partition an empty graph");
  LeidenOptions opts;
  opts.gamma = gamma;
  opts.seed = seed;
  return ToPartition(g, LeidenMembership(g, opts));
}

}  // namespace dgrag
