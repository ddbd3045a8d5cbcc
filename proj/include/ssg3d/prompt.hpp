#pragma once

#include <string>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/direction.hpp"
#include "ssg3d/sampler.hpp"
#include "ssg3d/scene.hpp"

namespace ssg3d {

/// The two prompt texts and their concatenation. The assembled form is
/// target_part + " <SEP> " + relation_part, with the trailing space trimmed
/// when there are no triplets.
struct PromptText {
  std::string target_part;
  std::string relation_part;
  std::string assembled;
};

/// One triplet per subgraph edge: the target-pair edge first, then the
/// subject-side edge, then the object-side edge. A target endpoint is always
/// the subject (the subject target wins on the pair edge); between
/// non-targets the lower index is the subject. Relations come from the
/// centroid rule table.
inline std::vector<RelationTriplet> triplets_from_subgraph(
    const Scene& scene, const Subgraph& sub, const DirectionRuleSet& rules = {}) {
  const int t1 = scene.targets[0], t2 = scene.targets[1];
  auto is_target = [t1, t2](int v) { return v == t1 || v == t2; };

  // order: pair edge, then edges at the subject target, then at the object
  // target, then any remaining, each group by neighbor index
  std::vector<std::pair<int, int>> ordered;
  auto add_if = [&](auto&& pred) {
    for (const auto& e : sub.edges)
      if (pred(e) &&
          std::find(ordered.begin(), ordered.end(), e) == ordered.end())
        ordered.push_back(e);
  };
  add_if([&](const std::pair<int, int>& e) {
    return is_target(e.first) && is_target(e.second);
  });
  add_if([&](const std::pair<int, int>& e) {
    return e.first == t1 || e.second == t1;
  });
  add_if([&](const std::pair<int, int>& e) {
    return e.first == t2 || e.second == t2;
  });
  add_if([](const std::pair<int, int>&) { return true; });

  std::vector<RelationTriplet> out;
  out.reserve(ordered.size());
  for (const auto& [a, b] : ordered) {
    int subj = std::min(a, b), obj = std::max(a, b);
    if (is_target(a) && is_target(b)) {
      subj = t1;
      obj = t2;
    } else if (is_target(b) && !is_target(a)) {
      subj = b;
      obj = a;
    } else if (is_target(a) && !is_target(b)) {
      subj = a;
      obj = b;
    }
    if (subj < 0 || obj < 0 || subj >= scene.size() || obj >= scene.size())
      throw ValidationError("subgraph node index out of scene range");
    RelationTriplet t;
    t.subject_tag = scene.objects[subj].tag;
    t.object_tag = scene.objects[obj].tag;
    t.relation = map_direction(scene.objects[subj].loc,
                               scene.objects[obj].loc, rules)
                     .canonical();
    out.push_back(std::move(t));
  }
  return out;
}

/// Byte-exact prompt assembly: "<TGT> a <TGT> b <SEP> <OBJ> s <REL> r
/// <OBJ> o" with one relation line per triplet, newline separated.
inline PromptText build_prompt(const std::string& tag_1,
                               const std::string& tag_2,
                               const std::vector<RelationTriplet>& triplets) {
  PromptText p;
  p.target_part = "<TGT> " + tag_1 + " <TGT> " + tag_2;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i > 0) p.relation_part += '\n';
    p.relation_part += "<OBJ> " + triplets[i].subject_tag + " <REL> " +
                       triplets[i].relation + " <OBJ> " +
                       triplets[i].object_tag;
  }
  p.assembled = p.target_part + " <SEP> " + p.relation_part;
  if (p.relation_part.empty()) p.assembled = p.target_part + " <SEP>";
  return p;
}

struct ParsedPrompt {
  std::string tag_1;
  std::string tag_2;
  std::vector<RelationTriplet> triplets;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(' ');
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(' ');
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Inverse of build_prompt; recovers tags and triplets exactly.
inline ParsedPrompt parse_prompt(const std::string& assembled) {
  const std::string sep = "<SEP>";
  const std::size_t sep_pos = assembled.find(sep);
  if (sep_pos == std::string::npos)
    throw ValidationError("prompt: missing <SEP>");
  const std::string target_part = detail::trim(assembled.substr(0, sep_pos));
  const std::string relation_part =
      detail::trim(assembled.substr(sep_pos + sep.size()));

  ParsedPrompt out;
  const std::string tgt = "<TGT>";
  if (target_part.rfind(tgt, 0) != 0)
    throw ValidationError("prompt: target part must start with <TGT>");
  const std::size_t second = target_part.find(tgt, tgt.size());
  if (second == std::string::npos)
    throw ValidationError("prompt: expected two <TGT> tokens");
  out.tag_1 = detail::trim(target_part.substr(tgt.size(), second - tgt.size()));
  out.tag_2 = detail::trim(target_part.substr(second + tgt.size()));

  if (relation_part.empty()) return out;
  std::size_t start = 0;
  while (start <= relation_part.size()) {
    std::size_t end = relation_part.find('\n', start);
    const std::string line = relation_part.substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    const std::string obj = "<OBJ>", rel = "<REL>";
    if (line.rfind(obj, 0) != 0)
      throw ValidationError("prompt: relation line must start with <OBJ>");
    const std::size_t rel_pos = line.find(rel);
    const std::size_t obj2_pos = line.find(obj, obj.size());
    if (rel_pos == std::string::npos || obj2_pos == std::string::npos ||
        obj2_pos < rel_pos)
      throw ValidationError("prompt: malformed relation line");
    RelationTriplet t;
    t.subject_tag = detail::trim(line.substr(obj.size(), rel_pos - obj.size()));
    t.relation = detail::trim(
        line.substr(rel_pos + rel.size(), obj2_pos - rel_pos - rel.size()));
    t.object_tag = detail::trim(line.substr(obj2_pos + obj.size()));
    out.triplets.push_back(std::move(t));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace ssg3d
