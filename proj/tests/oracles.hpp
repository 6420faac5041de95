// Test-only oracles. Nothing here calls into the code under test except to
// build inputs; every expected value is computed independently.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct SmallGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

// ---------------------------------------------------------------------------
// Non-isomorphic graph enumeration by vertex extension plus a canonical form
// (colour refinement, then exhaustive search inside colour cells).

inline int PairBit(int a, int b) {
  if (a > b) std::swap(a, b);
  return b * (b - 1) / 2 + a;
}

inline std::uint64_t CanonicalCode(int n, const std::vector<std::uint32_t>& rows) {
  std::vector<int> colour(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) colour[static_cast<std::size_t>(v)] = __builtin_popcount(rows[static_cast<std::size_t>(v)]);
  while (true) {
    std::vector<std::pair<int, std::vector<int>>> sig(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      sig[static_cast<std::size_t>(v)].first = colour[static_cast<std::size_t>(v)];
      for (int u = 0; u < n; ++u) {
        if (rows[static_cast<std::size_t>(v)] >> u & 1U) sig[static_cast<std::size_t>(v)].second.push_back(colour[static_cast<std::size_t>(u)]);
      }
      std::sort(sig[static_cast<std::size_t>(v)].second.begin(), sig[static_cast<std::size_t>(v)].second.end());
    }
    std::vector<std::pair<int, std::vector<int>>> uniq = sig;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<int> next(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      next[static_cast<std::size_t>(v)] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), sig[static_cast<std::size_t>(v)]) - uniq.begin());
    }
    const int before = static_cast<int>(std::set<int>(colour.begin(), colour.end()).size());
    colour = next;
    if (static_cast<int>(uniq.size()) == before) break;
  }
  // vertices sorted by colour; permute within equal-colour runs
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return colour[static_cast<std::size_t>(a)] < colour[static_cast<std::size_t>(b)];
  });
  std::vector<std::pair<int, int>> cells;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && colour[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] == colour[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) ++j;
    cells.emplace_back(i, j);
    i = j;
  }
  std::uint64_t best = 0;
  bool have = false;
  std::function<void(std::size_t)> rec = [&](std::size_t cell) {
    if (cell == cells.size()) {
      std::uint64_t code = 0;
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (rows[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])] >> order[static_cast<std::size_t>(b)] & 1U) code |= 1ULL << PairBit(a, b);
        }
      }
      if (!have || code > best) {
        best = code;
        have = true;
      }
      return;
    }
    auto [lo, hi] = cells[cell];
    std::sort(order.begin() + lo, order.begin() + hi);
    do {
      rec(cell + 1);
    } while (std::next_permutation(order.begin() + lo, order.begin() + hi));
  };
  rec(0);
  return best;
}

inline std::vector<std::uint32_t> RowsFromCode(int n, std::uint64_t code) {
  std::vector<std::uint32_t> rows(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (code >> PairBit(a, b) & 1ULL) {
        rows[static_cast<std::size_t>(a)] |= 1U << b;
        rows[static_cast<std::size_t>(b)] |= 1U << a;
      }
    }
  }
  return rows;
}

inline bool Connected(int n, const std::vector<std::uint32_t>& rows) {
  std::uint32_t seen = 1, frontier = 1;
  while (frontier) {
    std::uint32_t next = 0;
    for (int v = 0; v < n; ++v) {
      if (frontier >> v & 1U) next |= rows[static_cast<std::size_t>(v)];
    }
    frontier = next & ~seen;
    seen |= next;
  }
  return seen == (n == 32 ? 0xffffffffU : ((1U << n) - 1));
}

// All graphs with exactly n vertices up to isomorphism, as canonical codes.
inline std::vector<std::vector<std::uint64_t>> AllGraphsUpTo(int max_n) {
  std::vector<std::vector<std::uint64_t>> by_n(static_cast<std::size_t>(max_n + 1));
  by_n[1] = {0};
  for (int n = 2; n <= max_n; ++n) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t code : by_n[static_cast<std::size_t>(n - 1)]) {
      auto base = RowsFromCode(n - 1, code);
      for (std::uint32_t mask = 0; mask < (1U << (n - 1)); ++mask) {
        auto rows = base;
        rows.push_back(mask);
        for (int v = 0; v < n - 1; ++v) {
          if (mask >> v & 1U) rows[static_cast<std::size_t>(v)] |= 1U << (n - 1);
        }
        seen.insert(CanonicalCode(n, rows));
      }
    }
    by_n[static_cast<std::size_t>(n)].assign(seen.begin(), seen.end());
  }
  return by_n;
}

inline std::vector<SmallGraph> ConnectedGraphsUpTo(int max_n) {
  std::vector<SmallGraph> out;
  auto all = AllGraphsUpTo(max_n);
  for (int n = 1; n <= max_n; ++n) {
    for (std::uint64_t code : all[static_cast<std::size_t>(n)]) {
      auto rows = RowsFromCode(n, code);
      if (!Connected(n, rows)) continue;
      SmallGraph g;
      g.n = n;
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (rows[static_cast<std::size_t>(a)] >> b & 1U) g.edges.emplace_back(a, b);
        }
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modularity by the node-pair form Q = 1/2M sum_ij [A_ij - g k_i k_j / 2M] d(c_i,c_j).

inline double PairModularity(const SmallGraph& g, const std::vector<int>& membership, double gamma) {
  const double m = static_cast<double>(g.edges.size());
  if (m == 0) return 0.0;
  std::vector<std::vector<double>> a(static_cast<std::size_t>(g.n), std::vector<double>(static_cast<std::size_t>(g.n), 0.0));
  std::vector<double> k(static_cast<std::size_t>(g.n), 0.0);
  for (auto [x, y] : g.edges) {
    a[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] += 1;
    a[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] += 1;
    k[static_cast<std::size_t>(x)] += 1;
    k[static_cast<std::size_t>(y)] += 1;
  }
  double q = 0.0;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      if (membership[static_cast<std::size_t>(i)] == membership[static_cast<std::size_t>(j)]) {
        q += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - gamma * k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)] / (2 * m);
      }
    }
  }
  return q / (2 * m);
}

// Maximum modularity over every set partition (restricted growth strings).
inline double BestModularity(const SmallGraph& g, double gamma, std::vector<int>* argmax = nullptr) {
  const double m = static_cast<double>(g.edges.size());
  if (m == 0) {
    if (argmax) {
      argmax->resize(static_cast<std::size_t>(g.n));
      for (int i = 0; i < g.n; ++i) (*argmax)[static_cast<std::size_t>(i)] = i;
    }
    return 0.0;
  }
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
  std::vector<double> k(n, 0.0);
  for (auto [x, y] : g.edges) {
    k[static_cast<std::size_t>(x)] += 1;
    k[static_cast<std::size_t>(y)] += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b[i][j] = -gamma * k[i] * k[j] / (2 * m);
  }
  for (auto [x, y] : g.edges) {
    b[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] += 1;
    b[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] += 1;
  }
  std::vector<int> c(n, 0);
  double best = -1e300;
  std::vector<int> best_c;
  std::function<void(std::size_t, int, double)> rec = [&](std::size_t i, int used, double acc) {
    if (i == n) {
      if (acc > best) {
        best = acc;
        best_c = c;
      }
      return;
    }
    for (int label = 0; label <= used; ++label) {
      c[i] = label;
      double add = b[i][i];
      for (std::size_t j = 0; j < i; ++j) {
        if (c[j] == label) add += 2 * b[i][j];
      }
      rec(i + 1, std::max(used, label + 1), acc + add);
    }
  };
  rec(0, 0, 0.0);
  if (argmax) *argmax = best_c;
  return best / (2 * m);
}

}  // namespace oracle
