#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/encoder.hpp"
#include "ssg3d/graph.hpp"

namespace ssg3d {

/// Connecting-strength scorer: one affine map from a final-layer edge
/// representation to a raw score. Initialized to zero so the first update
/// already moves in a signal-aligned direction.
struct ScorerParams {
  Vec w;
  double b = 0.0;
};

inline ScorerParams init_scorer(int hidden_dim) {
  if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
  ScorerParams s;
  s.w = Vec::Zero(hidden_dim);
  s.b = 0.0;
  return s;
}

/// Connecting-strength scores a(i,j). Rows belonging to a target are
/// softmax-normalized over that target's incident edges (so they read as
/// probabilities and log-likelihoods are well defined); every other row
/// holds per-edge sigmoid scores. Zero wherever there is no edge.
struct EdgeScores {
  int n = 0;
  std::array<int, 2> targets{0, 1};
  Mat raw;  // scorer outputs z, defined where e=1
  Mat a;    // normalized scores
};

inline EdgeScores score_edges(const GraphEncoding& enc,
                              const SpatialSceneGraph& g,
                              const ScorerParams& scorer) {
  if (enc.n != g.n) throw ValidationError("encoding/graph node count mismatch");
  if (scorer.w.size() != enc.hidden_dim)
    throw ValidationError("scorer dimension mismatch");
  const int n = g.n;
  EdgeScores s;
  s.n = n;
  s.targets = g.targets;
  s.raw = Mat::Zero(n, n);
  s.a = Mat::Zero(n, n);
  const Mat& e_final = enc.final_edge_reps();
  // base holds the bias-free scores; within a target's softmax group the
  // bias shifts every entry equally and cancels, so the softmax is taken
  // over base to make that invariance exact in floating point
  Mat base = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.edge(i, j)) {
        base(i, j) =
            scorer.w.dot(e_final.row(static_cast<Eigen::Index>(i) * n + j));
        s.raw(i, j) = base(i, j) + scorer.b;
      }

  for (int i = 0; i < n; ++i) {
    std::vector<int> nb;
    for (int j = 0; j < n; ++j)
      if (g.edge(i, j)) nb.push_back(j);
    if (nb.empty()) continue;
    if (g.is_target(i)) {
      double mx = base(i, nb[0]);
      for (int j : nb) mx = std::max(mx, base(i, j));
      double total = 0.0;
      for (int j : nb) total += std::exp(base(i, j) - mx);
      for (int j : nb) s.a(i, j) = std::exp(base(i, j) - mx) / total;
    } else {
      for (int j : nb) s.a(i, j) = 1.0 / (1.0 + std::exp(-s.raw(i, j)));
    }
  }
  return s;
}

enum class SubgraphType { TwoHop, ThreeHopS, ThreeHopO, FourHop };

inline const char* subgraph_type_name(SubgraphType t) {
  switch (t) {
    case SubgraphType::TwoHop: return "2-hop";
    case SubgraphType::ThreeHopS: return "3-hop-s";
    case SubgraphType::ThreeHopO: return "3-hop-o";
    case SubgraphType::FourHop: return "4-hop";
  }
  return "?";
}

/// A selected sub-structure: both targets, at most one first-order neighbor
/// per target, the target-pair edge, connected and acyclic.
struct Subgraph {
  std::vector<int> nodes;                  // ascending
  std::vector<std::pair<int, int>> edges;  // (min,max), ascending
  SubgraphType type = SubgraphType::TwoHop;
  double score = 0.0;
};

namespace detail {

/// Assembles the canonical subgraph for a per-target neighbor choice.
/// Score contract: a(t1,t2) + a(t1,n1) + a(t2,n2), summed in that order.
inline Subgraph assemble_subgraph(const std::array<int, 2>& targets,
                                  std::optional<int> n1, std::optional<int> n2,
                                  const EdgeScores& s) {
  const int t1 = targets[0], t2 = targets[1];
  Subgraph sub;
  sub.nodes = {t1, t2};
  sub.edges = {{std::min(t1, t2), std::max(t1, t2)}};
  sub.score = s.a(t1, t2);
  if (n1) {
    sub.nodes.push_back(*n1);
    sub.edges.push_back({std::min(t1, *n1), std::max(t1, *n1)});
    sub.score += s.a(t1, *n1);
  }
  if (n2) {
    sub.nodes.push_back(*n2);
    sub.edges.push_back({std::min(t2, *n2), std::max(t2, *n2)});
    sub.score += s.a(t2, *n2);
  }
  std::sort(sub.nodes.begin(), sub.nodes.end());
  std::sort(sub.edges.begin(), sub.edges.end());
  if (n1 && n2) sub.type = SubgraphType::FourHop;
  else if (n1) sub.type = SubgraphType::ThreeHopS;
  else if (n2) sub.type = SubgraphType::ThreeHopO;
  else sub.type = SubgraphType::TwoHop;
  return sub;
}

/// Ranking contract: score descending, then node indices, type, edge list.
inline bool subgraph_before(const Subgraph& a, const Subgraph& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.nodes != b.nodes) return a.nodes < b.nodes;
  if (a.type != b.type) return static_cast<int>(a.type) < static_cast<int>(b.type);
  return a.edges < b.edges;
}

inline bool same_structure(const Subgraph& a, const Subgraph& b) {
  return a.nodes == b.nodes && a.edges == b.edges;
}

}  // namespace detail

/// Pattern-matches a subgraph against the four structure types.
inline SubgraphType classify_subgraph(const Subgraph& sub,
                                      const std::array<int, 2>& targets) {
  const int t1 = targets[0], t2 = targets[1];
  auto has_node = [&sub](int v) {
    return std::find(sub.nodes.begin(), sub.nodes.end(), v) != sub.nodes.end();
  };
  auto has_edge = [&sub](int a, int b) {
    return std::find(sub.edges.begin(), sub.edges.end(),
                     std::make_pair(std::min(a, b), std::max(a, b))) !=
           sub.edges.end();
  };
  if (!has_node(t1) || !has_node(t2) || !has_edge(t1, t2))
    throw ValidationError("subgraph must contain both targets and their edge");
  std::vector<int> extras;
  for (int v : sub.nodes)
    if (v != t1 && v != t2) extras.push_back(v);

  if (extras.empty() && sub.edges.size() == 1) return SubgraphType::TwoHop;
  if (extras.size() == 1 && sub.edges.size() == 2) {
    if (has_edge(t1, extras[0])) return SubgraphType::ThreeHopS;
    if (has_edge(t2, extras[0])) return SubgraphType::ThreeHopO;
  }
  if (extras.size() == 2 && sub.edges.size() == 3) {
    const bool a = has_edge(t1, extras[0]) && has_edge(t2, extras[1]);
    const bool b = has_edge(t1, extras[1]) && has_edge(t2, extras[0]);
    if (a || b) return SubgraphType::FourHop;
  }
  throw ValidationError("subgraph matches no known structure type");
}

/// Training-time single sample. Each target independently picks over its
/// incident edges via Gumbel-perturbed argmax on log a(t, .) + T * g; as the
/// temperature approaches zero the choice degenerates to the plain argmax.
/// Picking the other target contributes no extra node. If both targets pick
/// the same neighbor, the lower-scored conflicting edge is pruned.
inline Subgraph select_subgraph_train(const SpatialSceneGraph& g,
                                      const EdgeScores& s, double temperature,
                                      std::uint64_t seed) {
  if (temperature <= 0.0) throw ValidationError("temperature must be > 0");
  RandomStream rng(seed);
  std::array<std::optional<int>, 2> pick;
  for (int t = 0; t < 2; ++t) {
    const int target = g.targets[t];
    const int other = g.targets[1 - t];
    double best = -std::numeric_limits<double>::infinity();
    std::optional<int> best_j;
    for (int j = 0; j < g.n; ++j) {
      if (!g.edge(target, j)) continue;
      const double perturbed =
          std::log(std::max(s.a(target, j), 1e-300)) +
          temperature * rng.gumbel();
      if (perturbed > best) {
        best = perturbed;
        best_j = j;
      }
    }
    if (best_j && *best_j != other) pick[static_cast<std::size_t>(t)] = best_j;
  }
  std::optional<int> n1 = pick[0], n2 = pick[1];
  if (n1 && n2 && *n1 == *n2) {
    // cycle through the common neighbor: keep the higher-scored side
    if (s.a(g.targets[0], *n1) >= s.a(g.targets[1], *n2)) n2.reset();
    else n1.reset();
  }
  return detail::assemble_subgraph(g.targets, n1, n2, s);
}

/// Inference-time top-k sampling. Per-target neighbor choices scoring below
/// p_cut are dropped (the target-pair edge is never filtered, so the 2-hop
/// subgraph is always a candidate), cycles through a common neighbor are
/// pruned toward the higher-scored side, duplicates collapse, and the first
/// k survivors of the ranking contract are returned.
inline std::vector<Subgraph> select_subgraphs_topk(const SpatialSceneGraph& g,
                                                   const EdgeScores& s, int k,
                                                   double p_cut = 0.1) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::array<std::vector<int>, 2> eligible;
  for (int t = 0; t < 2; ++t) {
    const int target = g.targets[t];
    const int other = g.targets[1 - t];
    for (int j = 0; j < g.n; ++j)
      if (j != other && g.edge(target, j) && s.a(target, j) >= p_cut)
        eligible[static_cast<std::size_t>(t)].push_back(j);
  }

  std::vector<Subgraph> candidates;
  std::vector<std::optional<int>> c1{std::nullopt}, c2{std::nullopt};
  for (int j : eligible[0]) c1.emplace_back(j);
  for (int j : eligible[1]) c2.emplace_back(j);
  for (const auto& n1 : c1)
    for (const auto& n2 : c2) {
      std::optional<int> a = n1, b = n2;
      if (a && b && *a == *b) {
        if (s.a(g.targets[0], *a) >= s.a(g.targets[1], *b)) b.reset();
        else a.reset();
      }
      Subgraph sub = detail::assemble_subgraph(g.targets, a, b, s);
      const bool dup =
          std::any_of(candidates.begin(), candidates.end(),
                      [&sub](const Subgraph& c) {
                        return detail::same_structure(c, sub);
                      });
      if (!dup) candidates.push_back(std::move(sub));
    }

  std::sort(candidates.begin(), candidates.end(), detail::subgraph_before);
  if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
  return candidates;
}

/// Brute-force ground truth for top-k selection: exhaustively lists every
/// valid structure of each of the four patterns under the same p_cut and
/// ranking contract. Quadratic in the node count; fine for n <= 36.
inline std::vector<Subgraph> enumerate_subgraphs_oracle(
    const SpatialSceneGraph& g, const EdgeScores& s, double p_cut) {
  const int t1 = g.targets[0], t2 = g.targets[1];
  auto eligible = [&](int target, int v) {
    return v != t1 && v != t2 && g.edge(target, v) &&
           s.a(target, v) >= p_cut;
  };

  std::vector<Subgraph> all;

  {  // 2-hop: the bare target pair
    Subgraph sub;
    sub.nodes = {std::min(t1, t2), std::max(t1, t2)};
    sub.edges = {{std::min(t1, t2), std::max(t1, t2)}};
    sub.type = SubgraphType::TwoHop;
    sub.score = s.a(t1, t2);
    all.push_back(std::move(sub));
  }
  for (int u = 0; u < g.n; ++u)
    if (eligible(t1, u)) {  // 3-hop-s
      Subgraph sub;
      sub.nodes = {t1, t2, u};
      std::sort(sub.nodes.begin(), sub.nodes.end());
      sub.edges = {{std::min(t1, t2), std::max(t1, t2)},
                   {std::min(t1, u), std::max(t1, u)}};
      std::sort(sub.edges.begin(), sub.edges.end());
      sub.type = SubgraphType::ThreeHopS;
      sub.score = s.a(t1, t2) + s.a(t1, u);
      all.push_back(std::move(sub));
    }
  for (int u = 0; u < g.n; ++u)
    if (eligible(t2, u)) {  // 3-hop-o
      Subgraph sub;
      sub.nodes = {t1, t2, u};
      std::sort(sub.nodes.begin(), sub.nodes.end());
      sub.edges = {{std::min(t1, t2), std::max(t1, t2)},
                   {std::min(t2, u), std::max(t2, u)}};
      std::sort(sub.edges.begin(), sub.edges.end());
      sub.type = SubgraphType::ThreeHopO;
      sub.score = s.a(t1, t2) + s.a(t2, u);
      all.push_back(std::move(sub));
    }
  for (int u = 0; u < g.n; ++u)
    for (int w = 0; w < g.n; ++w)
      if (u != w && eligible(t1, u) && eligible(t2, w)) {  // 4-hop
        Subgraph sub;
        sub.nodes = {t1, t2, u, w};
        std::sort(sub.nodes.begin(), sub.nodes.end());
        sub.edges = {{std::min(t1, t2), std::max(t1, t2)},
                     {std::min(t1, u), std::max(t1, u)},
                     {std::min(t2, w), std::max(t2, w)}};
        std::sort(sub.edges.begin(), sub.edges.end());
        sub.type = SubgraphType::FourHop;
        sub.score = s.a(t1, t2) + s.a(t1, u) + s.a(t2, w);
        all.push_back(std::move(sub));
      }

  std::sort(all.begin(), all.end(), detail::subgraph_before);
  return all;
}

/// Local feature of a subgraph: membership- and score-weighted mean over the
/// full graph of node ++ edge final representations. Nodes outside the
/// subgraph still contribute through their target-incident scores; absent
/// edges contribute a zero edge vector; M is the full graph's node count.
inline Vec pool_subgraph(const GraphEncoding& enc, const SpatialSceneGraph& g,
                         const Subgraph& sub, const EdgeScores& s) {
  const int n = g.n;
  const int dh = enc.hidden_dim;
  const int t1 = g.targets[0], t2 = g.targets[1];
  std::vector<char> member(static_cast<std::size_t>(n), 0);
  for (int v : sub.nodes) member[static_cast<std::size_t>(v)] = 1;

  double denom = 0.0;
  for (int l = 0; l < n; ++l) denom += s.a(t1, l) + s.a(t2, l);
  if (denom <= 0.0)
    throw NumericalError("degenerate score normalization in pooling");

  const Mat& vfin = enc.final_node_reps();
  const Mat& efin = enc.final_edge_reps();
  Vec node_part = Vec::Zero(dh);
  Vec edge_part = Vec::Zero(dh);
  for (int i = 0; i < n; ++i) {
    const double lambda =
        (static_cast<double>(member[static_cast<std::size_t>(i)]) +
         s.a(t1, i) + s.a(t2, i)) /
        denom;
    node_part += lambda * static_cast<double>(n) * vfin.row(i).transpose();
    Vec edge_sum = Vec::Zero(dh);
    for (int j = 0; j < n; ++j)
      edge_sum += efin.row(static_cast<Eigen::Index>(i) * n + j).transpose();
    edge_part += lambda * edge_sum;
  }
  Vec r(2 * dh);
  r << node_part, edge_part;
  return r / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace ssg3d
