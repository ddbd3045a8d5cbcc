#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/scene.hpp"

namespace ssg3d {

/// Target-object-centered spatial scene graph: a symmetric 0/1 adjacency
/// over the scene's objects with the two target indices distinguished.
/// Nodes removed as noise keep their index but have an all-zero row/column.
struct SpatialSceneGraph {
  int n = 0;
  std::array<int, 2> targets{0, 1};
  std::vector<std::uint8_t> adj;  // row-major n*n

  bool edge(int i, int j) const {
    return adj[static_cast<std::size_t>(i) * n + j] != 0;
  }
  void set_edge(int i, int j, bool value) {
    adj[static_cast<std::size_t>(i) * n + j] = value ? 1 : 0;
  }
  int degree(int i) const {
    int d = 0;
    for (int j = 0; j < n; ++j) d += edge(i, j) ? 1 : 0;
    return d;
  }
  bool is_target(int i) const { return i == targets[0] || i == targets[1]; }
};

enum class EdgeType { TargetPair, TargetSurrounding, NearNeighbor };

inline const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::TargetPair: return "target-pair";
    case EdgeType::TargetSurrounding: return "target-surrounding";
    case EdgeType::NearNeighbor: return "near-neighbor";
  }
  return "?";
}

struct GraphOptions {
  double distance_threshold = 0.2;    // d
  double confidence_threshold = 0.7;  // p
  // near-neighbor comparator: default adds an edge when dist > d,
  // near_lt flips it to dist < d
  bool near_lt = false;
};

/// Builds the scene graph in the construction algorithm's literal order:
/// (i) target rows/columns set to 1, (ii) pairwise centroid distances
/// compared against the threshold, (iii) non-target objects below the
/// confidence threshold zeroed out. The diagonal is then cleared and the
/// target-pair edge restored; targets are never treated as noise.
inline SpatialSceneGraph build_graph(const Scene& scene,
                                     const GraphOptions& opt = {}) {
  validate_scene(scene);
  const int n = scene.size();
  SpatialSceneGraph g;
  g.n = n;
  g.targets = scene.targets;
  g.adj.assign(static_cast<std::size_t>(n) * n, 0);

  for (int t : g.targets)
    for (int j = 0; j < n; ++j) {
      g.set_edge(t, j, true);
      g.set_edge(j, t, true);
    }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dist =
          (scene.objects[i].loc - scene.objects[j].loc).norm();
      const bool near = opt.near_lt ? dist < opt.distance_threshold
                                    : dist > opt.distance_threshold;
      if (near) g.set_edge(i, j, true);
    }

  for (int i = 0; i < n; ++i)
    if (!g.is_target(i) &&
        scene.objects[i].confidence < opt.confidence_threshold)
      for (int j = 0; j < n; ++j) {
        g.set_edge(i, j, false);
        g.set_edge(j, i, false);
      }

  for (int i = 0; i < n; ++i) g.set_edge(i, i, false);
  g.set_edge(g.targets[0], g.targets[1], true);
  g.set_edge(g.targets[1], g.targets[0], true);
  return g;
}

/// Classifies an existing edge. Precedence: target-pair over
/// target-surrounding over near-neighbor.
inline EdgeType classify_edge(const SpatialSceneGraph& g, int i, int j) {
  if (i < 0 || j < 0 || i >= g.n || j >= g.n || !g.edge(i, j))
    throw ValidationError("no edge between " + std::to_string(i) + " and " +
                          std::to_string(j));
  const bool ti = g.is_target(i), tj = g.is_target(j);
  if (ti && tj) return EdgeType::TargetPair;
  if (ti || tj) return EdgeType::TargetSurrounding;
  return EdgeType::NearNeighbor;
}

}  // namespace ssg3d
