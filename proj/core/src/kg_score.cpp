#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "matforge/kg.hpp"
#include "matforge/text_norm.hpp"

namespace matforge {
namespace {

// Rectangular assignment (rows <= cols) minimizing total cost; returns the
// column chosen for each row. Classic O(n^2 m) potentials method.
std::vector<std::size_t> hungarian(const std::vector<std::vector<long long>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n ? cost[0].size() : 0;
  constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// node_match with every name normalized once per node instead of once per
// pair; normalization dominates scoring time on larger graphs.
struct NodeView {
  const KgNode* node = nullptr;
  std::string name;
  std::set<std::string> names;  // name and co-references
  std::vector<std::string> co_references;
  std::vector<std::pair<std::string, std::string>> related;  // sorted, values normalized
  std::string key;
};

NodeView view_of(const KgNode& n) {
  NodeView v;
  v.node = &n;
  v.name = normalize_name(n.node_name);
  v.names.insert(v.name);
  for (const auto& c : n.co_references) {
    v.co_references.push_back(normalize_name(c));
    v.names.insert(v.co_references.back());
  }
  for (const auto& [k, val] : n.related_entities) v.related.emplace_back(k, normalize_name(val));
  std::sort(v.related.begin(), v.related.end());
  v.related.erase(std::unique(v.related.begin(), v.related.end()), v.related.end());
  v.key = node_key(n);
  return v;
}

bool view_match(const NodeView& p, const NodeView& g) {
  if (p.node->symbol != g.node->symbol) return false;
  bool shared = !g.name.empty() && p.names.count(g.name);
  for (const auto& c : g.co_references) shared = shared || p.names.count(c);
  if (!shared) return false;
  for (auto it = p.related.begin(); it != p.related.end();) {
    const std::string& k = it->first;
    bool in_gold = false, agree = false;
    for (const auto& [gk, gv] : g.related) {
      if (gk != k) continue;
      in_gold = true;
      for (auto jt = it; jt != p.related.end() && jt->first == k; ++jt) agree = agree || jt->second == gv;
    }
    if (in_gold && !agree) return false;
    while (it != p.related.end() && it->first == k) ++it;
  }
  return true;
}

// A match is worth far more than any tie-break bonus, so the optimum is
// always a maximum-cardinality matching.
constexpr long long kMatchWeight = 1'000'000;

long long pair_weight(const NodeView& p, const NodeView& g) {
  if (!view_match(p, g)) return 0;
  long long w = kMatchWeight;
  if (p.name == g.name) w += 4;
  if (p.key == g.key) w += 2;
  return w;
}

std::vector<std::size_t> canonical_order(const std::vector<NodeView>& views) {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& v : views) {
    std::string tail;
    for (const auto& c : v.co_references) tail += c + "\x1f";
    keys.emplace_back(v.key, tail + v.node->node_name);
  }
  std::vector<std::size_t> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

std::vector<std::optional<std::size_t>> match_nodes(const KnowledgeGraph& pred, const KnowledgeGraph& gold) {
  std::vector<std::optional<std::size_t>> assignment(pred.nodes.size());
  if (pred.nodes.empty() || gold.nodes.empty()) return assignment;

  // Work in canonical order so the result does not depend on input order.
  std::vector<NodeView> pv, gv;
  for (const auto& n : pred.nodes) pv.push_back(view_of(n));
  for (const auto& n : gold.nodes) gv.push_back(view_of(n));
  const auto po = canonical_order(pv);
  const auto go = canonical_order(gv);
  const bool transpose = po.size() > go.size();
  const auto& rows = transpose ? go : po;
  const auto& cols = transpose ? po : go;
  std::vector<std::vector<long long>> cost(rows.size(), std::vector<long long>(cols.size(), 0));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& pn = pv[transpose ? cols[c] : rows[r]];
      const auto& gn = gv[transpose ? rows[r] : cols[c]];
      cost[r][c] = -pair_weight(pn, gn);
    }
  const auto pick = hungarian(cost);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (cost[r][pick[r]] == 0) continue;
    const std::size_t p = transpose ? cols[pick[r]] : rows[r];
    const std::size_t g = transpose ? rows[r] : cols[pick[r]];
    assignment[p] = g;
  }
  return assignment;
}

}  // namespace

KgCounts count_kg(const KnowledgeGraph& pred, const KnowledgeGraph& gold) {
  KgCounts out;
  out.assignment = match_nodes(pred, gold);

  std::vector<bool> gold_hit(gold.nodes.size(), false);
  for (std::size_t p = 0; p < pred.nodes.size(); ++p) {
    if (out.assignment[p]) {
      ++out.nodes[pred.nodes[p].symbol].tp;
      gold_hit[*out.assignment[p]] = true;
    } else {
      ++out.nodes[pred.nodes[p].symbol].fp;
    }
  }
  for (std::size_t g = 0; g < gold.nodes.size(); ++g)
    if (!gold_hit[g]) ++out.nodes[gold.nodes[g].symbol].fn;

  using EdgeKey = std::tuple<std::size_t, std::string, std::size_t>;
  std::map<EdgeKey, std::size_t> gold_edges;
  for (const auto& e : gold.edges) {
    const std::string label = normalize_name(e.relation);
    ++gold_edges[{e.source, label, e.target}];
    ++out.relations[label].fn;
  }
  for (const auto& e : pred.edges) {
    const std::string label = normalize_name(e.relation);
    auto& c = out.relations[label];
    const auto s = e.source < out.assignment.size() ? out.assignment[e.source] : std::nullopt;
    const auto t = e.target < out.assignment.size() ? out.assignment[e.target] : std::nullopt;
    if (s && t) {
      auto it = gold_edges.find({*s, label, *t});
      if (it != gold_edges.end() && it->second > 0) {
        --it->second;
        ++c.tp;
        --c.fn;
        continue;
      }
    }
    ++c.fp;
  }
  return out;
}

KgScore score_kg(const KnowledgeGraph& pred, const KnowledgeGraph& gold) {
  KgCounts counts = count_kg(pred, gold);
  return KgScore{make_report(counts.nodes), make_report(counts.relations), std::move(counts.assignment)};
}

}  // namespace matforge
