#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ssg3d/direction.hpp"

using namespace ssg3d;

TEST_CASE("pure-axis rows of the rule table") {
  const Eigen::Vector3d c{0.5, 0.5, 0.5};
  CHECK(map_direction({0.5, 0.5, 0.5}, {0.1, 0.5, 0.5}).canonical() == "front");
  CHECK(map_direction({0.1, 0.5, 0.5}, {0.5, 0.5, 0.5}).canonical() == "back");
  CHECK(map_direction({0.5, 0.9, 0.5}, {0.5, 0.1, 0.5}).canonical() == "up");
  CHECK(map_direction({0.5, 0.1, 0.5}, {0.5, 0.9, 0.5}).canonical() == "down");
  CHECK(map_direction({0.5, 0.5, 0.9}, {0.5, 0.5, 0.1}).canonical() == "right");
  CHECK(map_direction({0.5, 0.5, 0.1}, {0.5, 0.5, 0.9}).canonical() == "left");
  CHECK(map_direction(c, c).canonical() == "next to");
}

TEST_CASE("composed rows of the front block") {
  CHECK(map_direction({0.9, 0.8, 0.5}, {0.1, 0.3, 0.5}).canonical() ==
        "front up");
  CHECK(map_direction({0.9, 0.3, 0.5}, {0.1, 0.8, 0.5}).canonical() ==
        "front down");
  CHECK(map_direction({0.9, 0.5, 0.8}, {0.1, 0.5, 0.3}).canonical() ==
        "front right");
  CHECK(map_direction({0.9, 0.5, 0.3}, {0.1, 0.5, 0.8}).canonical() ==
        "front left");
  CHECK(map_direction({0.9, 0.8, 0.8}, {0.1, 0.3, 0.3}).canonical() ==
        "front up right");
  CHECK(map_direction({0.9, 0.8, 0.3}, {0.1, 0.3, 0.8}).canonical() ==
        "front up left");
  CHECK(map_direction({0.9, 0.3, 0.8}, {0.1, 0.8, 0.3}).canonical() ==
        "front down right");
  CHECK(map_direction({0.9, 0.3, 0.3}, {0.1, 0.8, 0.8}).canonical() ==
        "front down left");
}

TEST_CASE("families other than front expand symmetrically") {
  // y dominant, x secondary
  CHECK(map_direction({0.8, 0.9, 0.5}, {0.5, 0.1, 0.5}).canonical() ==
        "front up");
  // z dominant, y secondary
  CHECK(map_direction({0.5, 0.8, 0.9}, {0.5, 0.5, 0.1}).canonical() ==
        "up right");
  // z dominant alone
  CHECK(map_direction({0.5, 0.6, 0.9}, {0.5, 0.5, 0.1}).canonical() == "right");
}

TEST_CASE("boundary delta equal to tau does not exceed it") {
  // d == tau counts as "within tau" for secondary axes and for next-to
  CHECK(map_direction({0.7, 0.5, 0.5}, {0.5, 0.5, 0.5}).canonical() ==
        "next to");
  CHECK(map_direction({0.9, 0.7, 0.5}, {0.1, 0.5, 0.5}).canonical() == "front");
}

TEST_CASE("dominant-axis ties break x before y before z") {
  // d_x == d_y > tau: the front/back family wins, y still contributes
  CHECK(map_direction({0.9, 0.9, 0.5}, {0.1, 0.1, 0.5}).canonical() ==
        "front up");
  // d_y == d_z > tau, d_x small: up/down family wins, z contributes
  CHECK(map_direction({0.5, 0.9, 0.9}, {0.5, 0.1, 0.1}).canonical() ==
        "up right");
}

TEST_CASE("map_direction validates input") {
  CHECK_THROWS_AS(map_direction({1.2, 0.5, 0.5}, {0.5, 0.5, 0.5}),
                  ValidationError);
  CHECK_THROWS_AS(map_direction({0.5, 0.5, 0.5}, {0.5, -0.1, 0.5}),
                  ValidationError);
  DirectionRuleSet bad;
  bad.tau = 0.6;
  CHECK_THROWS_AS(map_direction({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, bad),
                  ValidationError);
}

TEST_CASE("grid sweep: totality, coverage, antisymmetry, next-to symmetry") {
  // coarse 0.1 grid here; the acceptance suite runs the full 0.05 sweep
  std::vector<Eigen::Vector3d> pts;
  for (int x = 0; x <= 10; ++x)
    for (int y = 0; y <= 10; ++y)
      for (int z = 0; z <= 10; ++z)
        pts.push_back({x / 10.0, y / 10.0, z / 10.0});
  std::set<std::string> seen;
  for (std::size_t i = 0; i < pts.size(); i += 7)
    for (std::size_t j = 0; j < pts.size(); j += 11) {
      const DirectionTerm st = map_direction(pts[i], pts[j]);
      const DirectionTerm ts = map_direction(pts[j], pts[i]);
      seen.insert(st.canonical());
      CHECK(ts == st.opposite());
      CHECK((st.next_to()) == (ts.next_to()));
    }
  CHECK(seen.size() > 10);
}

TEST_CASE("all 27 canonical terms are distinct and parseable") {
  const auto terms = all_canonical_terms();
  REQUIRE(terms.size() == 27);
  std::set<std::string> uniq(terms.begin(), terms.end());
  CHECK(uniq.size() == 27);
  for (const std::string& t : terms) {
    const auto parsed = parse_direction(t);
    REQUIRE(parsed.has_value());
    CHECK(parsed->canonical() == t);
  }
}

TEST_CASE("alias spellings normalize to one canonical term") {
  const auto a = parse_direction("left up front");
  const auto b = parse_direction("up left front");
  const auto c = parse_direction("front up left");
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  REQUIRE(c.has_value());
  CHECK(*a == *b);
  CHECK(*b == *c);
  CHECK(a->canonical() == "front up left");
  CHECK_FALSE(parse_direction("front sideways").has_value());
  CHECK_FALSE(parse_direction("front front").has_value());
  CHECK_FALSE(parse_direction("").has_value());
  CHECK(parse_direction("Next To").has_value());
}

TEST_CASE("translation invariance of the rule table") {
  RandomStream rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector3d s{rng.uniform(0, 0.5), rng.uniform(0, 0.5),
                      rng.uniform(0, 0.5)};
    Eigen::Vector3d o{rng.uniform(0, 0.5), rng.uniform(0, 0.5),
                      rng.uniform(0, 0.5)};
    const Eigen::Vector3d shift{rng.uniform(0, 0.5), rng.uniform(0, 0.5),
                                rng.uniform(0, 0.5)};
    CHECK(map_direction(s, o) == map_direction(s + shift, o + shift));
  }
}

TEST_CASE("2D fallback reaches only depth-free families") {
  CHECK(map_direction_2d({0.5, 0.5}, {0.5, 0.5}).canonical() == "next to");
  CHECK(map_direction_2d({0.9, 0.5}, {0.1, 0.5}).canonical() == "right");
  CHECK(map_direction_2d({0.1, 0.5}, {0.9, 0.5}).canonical() == "left");
  CHECK(map_direction_2d({0.5, 0.9}, {0.5, 0.1}).canonical() == "up");
  RandomStream rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Vector2d s{rng.uniform(), rng.uniform()};
    const Eigen::Vector2d o{rng.uniform(), rng.uniform()};
    const DirectionTerm term = map_direction_2d(s, o);
    CHECK(term.x == 0);  // never front or back
  }
}

TEST_CASE("pseudo pairs carry the mapped direction and the annotation") {
  Scene scene = synth_scene(4, 3);
  scene.objects[0].tag = "table";
  scene.objects[1].tag = "sofa";
  scene.objects[2].tag = "bed";
  scene.objects[0].loc = {0.5, 0.5, 0.5};
  scene.objects[1].loc = {0.45, 0.55, 0.5};  // next to the table

  const std::vector<RelationTriplet> gt = {{"table", "near", "sofa"}};
  const auto pairs = gen_pseudo_pairs(scene, gt, {}, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].input == "<OBJ> table <REL> next to <OBJ> sofa");
  CHECK(pairs[0].output == "table, near, sofa");
}

TEST_CASE("pseudo pairs: empty synonym table keeps the annotated relation") {
  Scene scene = synth_scene(4, 3);
  scene.objects[0].tag = "table";
  scene.objects[1].tag = "sofa";
  scene.objects[2].tag = "bed";
  std::vector<RelationTriplet> gt;
  for (int i = 0; i < 20; ++i) gt.push_back({"table", "near", "bed"});
  for (const auto& p : gen_pseudo_pairs(scene, gt, {}, 5))
    CHECK(p.output == "table, near, bed");
}

TEST_CASE("pseudo pairs are deterministic per seed and use synonyms") {
  Scene scene = synth_scene(4, 3);
  scene.objects[0].tag = "table";
  scene.objects[1].tag = "sofa";
  scene.objects[2].tag = "bed";
  SynonymTable syn{{"near", {"beside", "close to"}}};
  std::vector<RelationTriplet> gt;
  for (int i = 0; i < 40; ++i) gt.push_back({"table", "near", "sofa"});

  const auto a = gen_pseudo_pairs(scene, gt, syn, 9);
  const auto b = gen_pseudo_pairs(scene, gt, syn, 9);
  REQUIRE(a.size() == b.size());
  bool any_replaced = false, any_kept = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].input == b[i].input);
    CHECK(a[i].output == b[i].output);
    if (a[i].output == "table, near, sofa") any_kept = true;
    else any_replaced = true;
  }
  CHECK(any_replaced);
  CHECK(any_kept);
  CHECK_THROWS_AS(gen_pseudo_pairs(scene, {{"ghost", "near", "sofa"}}, {}, 1),
                  ValidationError);
}
