#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/scene.hpp"

namespace ssg3d {

/// One of the 27 canonical spatial terms: a sign per axis with at least one
/// nonzero component (26 sphere directions), or all-zero for "next to".
/// Coordinate system: x toward the viewer (front/back), y up (up/down),
/// z right (right/left).
struct DirectionTerm {
  int x = 0;  // +1 front, -1 back
  int y = 0;  // +1 up,    -1 down
  int z = 0;  // +1 right, -1 left

  bool next_to() const { return x == 0 && y == 0 && z == 0; }
  DirectionTerm opposite() const { return {-x, -y, -z}; }

  /// Canonical spelling: component words in fixed axis order x, y, z
  /// ("front up right"). Other word orders are aliases of the same term.
  std::string canonical() const {
    if (next_to()) return "next to";
    std::string out;
    auto append = [&out](const char* w) {
      if (!out.empty()) out += ' ';
      out += w;
    };
    if (x > 0) append("front");
    if (x < 0) append("back");
    if (y > 0) append("up");
    if (y < 0) append("down");
    if (z > 0) append("right");
    if (z < 0) append("left");
    return out;
  }

  friend bool operator==(const DirectionTerm&, const DirectionTerm&) = default;
  friend bool operator<(const DirectionTerm& a, const DirectionTerm& b) {
    return std::array{a.x, a.y, a.z} < std::array{b.x, b.y, b.z};
  }
};

/// Thresholds and tie-break order for the direction rule table.
struct DirectionRuleSet {
  double tau = 0.2;                           // closeness threshold
  std::array<int, 3> axis_priority{0, 1, 2};  // dominant-axis ties: x, y, z

  void validate() const {
    if (!(tau > 0.0 && tau < 0.5))
      throw ValidationError("tau must lie in (0, 0.5)");
  }
};

/// All 27 canonical term spellings, "next to" first, then the 26 directions
/// in lexicographic component order.
inline std::vector<std::string> all_canonical_terms() {
  std::vector<std::string> out;
  out.push_back("next to");
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z)
        if (x != 0 || y != 0 || z != 0)
          out.push_back(DirectionTerm{x, y, z}.canonical());
  return out;
}

/// Maps two centroids to a direction term describing where the subject sits
/// relative to the object. Per-axis deltas are compared against tau: all
/// within tau gives "next to"; otherwise the strictly greatest delta picks
/// the term family (ties broken by axis priority) and every other axis whose
/// delta exceeds tau contributes its own component. Total over the unit cube.
inline DirectionTerm map_direction(const Eigen::Vector3d& loc_s,
                                   const Eigen::Vector3d& loc_o,
                                   const DirectionRuleSet& rules = {}) {
  rules.validate();
  for (int a = 0; a < 3; ++a)
    if (loc_s[a] < 0.0 || loc_s[a] > 1.0 || loc_o[a] < 0.0 || loc_o[a] > 1.0)
      throw ValidationError("centroids must lie in [0,1]^3");

  std::array<double, 3> d{};
  std::array<int, 3> sign{};
  for (int a = 0; a < 3; ++a) {
    d[a] = std::abs(loc_s[a] - loc_o[a]);
    sign[a] = loc_s[a] > loc_o[a] ? 1 : -1;
  }

  int dominant = rules.axis_priority[0];
  for (int a : rules.axis_priority)
    if (d[a] > d[dominant]) dominant = a;
  if (d[dominant] <= rules.tau) return {};  // next to

  DirectionTerm term;
  auto component = [&term](int axis, int s) {
    if (axis == 0) term.x = s;
    if (axis == 1) term.y = s;
    if (axis == 2) term.z = s;
  };
  component(dominant, sign[dominant]);
  for (int a = 0; a < 3; ++a)
    if (a != dominant && d[a] > rules.tau) component(a, sign[a]);
  return term;
}

/// 2D fallback for objects without depth: box centers (horizontal, vertical)
/// are lifted to 3D with the toward-axis coordinate fixed at 0, so only the
/// up/down and right/left families (and "next to") are reachable.
inline DirectionTerm map_direction_2d(const Eigen::Vector2d& center_s,
                                      const Eigen::Vector2d& center_o,
                                      const DirectionRuleSet& rules = {}) {
  const Eigen::Vector3d s{0.0, center_s[1], center_s[0]};
  const Eigen::Vector3d o{0.0, center_o[1], center_o[0]};
  return map_direction(s, o, rules);
}

/// Normalizes any alias spelling ("up left front", "left up front", ...)
/// to its term; returns nullopt for unknown words, duplicate axes, or empty
/// input. Case-insensitive.
inline std::optional<DirectionTerm> parse_direction(std::string_view text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text)
    lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::istringstream in(lowered);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) return std::nullopt;
  if (words.size() == 2 && words[0] == "next" && words[1] == "to")
    return DirectionTerm{};

  static const std::map<std::string, std::pair<int, int>> word_map = {
      {"front", {0, 1}}, {"back", {0, -1}}, {"up", {1, 1}},
      {"down", {1, -1}}, {"right", {2, 1}}, {"left", {2, -1}}};
  DirectionTerm term;
  std::array<bool, 3> used{};
  for (const std::string& w : words) {
    auto it = word_map.find(w);
    if (it == word_map.end()) return std::nullopt;
    const auto [axis, s] = it->second;
    if (used[static_cast<std::size_t>(axis)]) return std::nullopt;
    used[static_cast<std::size_t>(axis)] = true;
    if (axis == 0) term.x = s;
    if (axis == 1) term.y = s;
    if (axis == 2) term.z = s;
  }
  return term;
}

/// <subject, relation, object> with the relation as term text.
struct RelationTriplet {
  std::string subject_tag;
  std::string relation;
  std::string object_tag;
};

struct PseudoPair {
  std::string input;
  std::string output;
};

using SynonymTable = std::map<std::string, std::vector<std::string>>;

/// Builds pseudo pre-training pairs: for each ground-truth triplet the input
/// carries the rule-mapped direction between the two objects' centroids and
/// the output carries the annotated relation, which is swapped for a random
/// synonym with probability 0.5.
inline std::vector<PseudoPair> gen_pseudo_pairs(
    const Scene& scene, const std::vector<RelationTriplet>& gt_triplets,
    const SynonymTable& synonyms, std::uint64_t seed,
    const DirectionRuleSet& rules = {}) {
  auto resolve = [&scene](const std::string& tag) {
    for (int i = 0; i < scene.size(); ++i)
      if (scene.objects[i].tag == tag) return i;
    throw ValidationError("unknown tag \"" + tag + "\"");
  };
  RandomStream rng(seed);
  std::vector<PseudoPair> out;
  out.reserve(gt_triplets.size());
  for (const RelationTriplet& t : gt_triplets) {
    const int s = resolve(t.subject_tag);
    const int o = resolve(t.object_tag);
    const std::string rel_p =
        map_direction(scene.objects[s].loc, scene.objects[o].loc, rules)
            .canonical();
    std::string rel_g = t.relation;
    const bool swap = rng.uniform() < 0.5;
    if (swap) {
      auto it = synonyms.find(t.relation);
      if (it != synonyms.end() && !it->second.empty()) {
        const int pick =
            rng.uniform_int(0, static_cast<int>(it->second.size()) - 1);
        rel_g = it->second[static_cast<std::size_t>(pick)];
      }
    }
    PseudoPair pair;
    pair.input = "<OBJ> " + t.subject_tag + " <REL> " + rel_p + " <OBJ> " +
                 t.object_tag;
    pair.output = t.subject_tag + ", " + rel_g + ", " + t.object_tag;
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace ssg3d
