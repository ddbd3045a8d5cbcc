#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "ssg3d/sampler.hpp"
#include "ssg3d/training.hpp"

using namespace ssg3d;

namespace {

Scene connected_scene(std::uint64_t seed, int n) {
  Scene s = synth_scene(seed, n, 8);
  for (auto& o : s.objects) o.confidence = 0.8 + 0.2 * o.confidence;
  return s;
}

struct Fixture {
  Scene scene;
  SpatialSceneGraph graph;
  Model model;
  GraphEncoding enc;
  EdgeScores scores;
};

Fixture make_fixture(std::uint64_t seed, int n, double scorer_scale = 1.0) {
  Fixture f{connected_scene(seed, n), {}, init_model(seed + 50, 8, 2, 8, 8),
            {}, {}};
  RandomStream rng(seed + 99);
  for (int i = 0; i < f.model.scorer.w.size(); ++i)
    f.model.scorer.w[i] = rng.uniform(-scorer_scale, scorer_scale);
  f.model.scorer.b = rng.uniform(-0.3, 0.3);
  f.graph = build_graph(f.scene);
  f.enc = encode_graph(f.graph, f.scene, f.model.encoder);
  f.scores = score_edges(f.enc, f.graph, f.model.scorer);
  return f;
}

void check_structure(const Subgraph& sub, const SpatialSceneGraph& g) {
  REQUIRE(sub.nodes.size() >= 2);
  REQUIRE(sub.nodes.size() <= 4);
  for (int t : g.targets)
    CHECK(std::find(sub.nodes.begin(), sub.nodes.end(), t) != sub.nodes.end());
  CHECK(sub.edges.size() == sub.nodes.size() - 1);  // acyclic and connected
  for (const auto& [a, b] : sub.edges) CHECK(g.edge(a, b));
  // first-order: every non-target node touches a target directly
  for (int v : sub.nodes) {
    if (g.is_target(v)) continue;
    bool touches = false;
    for (const auto& [a, b] : sub.edges)
      if ((a == v && g.is_target(b)) || (b == v && g.is_target(a)))
        touches = true;
    CHECK(touches);
  }
  // never the pruned triangle
  const int t1 = g.targets[0], t2 = g.targets[1];
  for (int v : sub.nodes) {
    if (g.is_target(v)) continue;
    const bool both =
        std::find(sub.edges.begin(), sub.edges.end(),
                  std::make_pair(std::min(t1, v), std::max(t1, v))) !=
            sub.edges.end() &&
        std::find(sub.edges.begin(), sub.edges.end(),
                  std::make_pair(std::min(t2, v), std::max(t2, v))) !=
            sub.edges.end();
    CHECK_FALSE(both);
  }
  CHECK(classify_subgraph(sub, g.targets) == sub.type);
}

}  // namespace

TEST_CASE("target softmax groups sum to one") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Fixture f = make_fixture(seed, 3 + static_cast<int>(seed % 6));
    for (int t : f.graph.targets) {
      double sum = 0.0;
      for (int j = 0; j < f.graph.n; ++j) sum += f.scores.a(t, j);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    for (int i = 0; i < f.graph.n; ++i)
      for (int j = 0; j < f.graph.n; ++j) {
        if (!f.graph.edge(i, j)) CHECK(f.scores.a(i, j) == 0.0);
        else CHECK(f.scores.a(i, j) > 0.0);
      }
  }
}

TEST_CASE("single incident edge scores exactly one") {
  const Fixture f = make_fixture(2, 2);
  CHECK(f.scores.a(f.graph.targets[0], f.graph.targets[1]) == 1.0);
  CHECK(f.scores.a(f.graph.targets[1], f.graph.targets[0]) == 1.0);
}

TEST_CASE("identical edge reps give uniform scores") {
  Fixture f = make_fixture(7, 5);
  // zero scorer weights make every raw score equal
  f.model.scorer.w.setZero();
  f.model.scorer.b = 0.4;
  const EdgeScores s = score_edges(f.enc, f.graph, f.model.scorer);
  for (int t : f.graph.targets) {
    const int deg = f.graph.degree(t);
    for (int j = 0; j < f.graph.n; ++j)
      if (f.graph.edge(t, j))
        CHECK(s.a(t, j) == Catch::Approx(1.0 / deg).margin(1e-12));
  }
}

TEST_CASE("training selection is deterministic and prunes cycles") {
  const Fixture f = make_fixture(11, 6, 2.0);
  const Subgraph a = select_subgraph_train(f.graph, f.scores, 1.0, 42);
  const Subgraph b = select_subgraph_train(f.graph, f.scores, 1.0, 42);
  CHECK(a.nodes == b.nodes);
  CHECK(a.edges == b.edges);
  CHECK(a.type == b.type);
  check_structure(a, f.graph);
  CHECK_THROWS_AS(select_subgraph_train(f.graph, f.scores, 0.0, 1),
                  ValidationError);
}

TEST_CASE("temperature to zero degenerates to the argmax choice") {
  const Fixture f = make_fixture(13, 6, 2.0);
  const int t1 = f.graph.targets[0], t2 = f.graph.targets[1];
  auto argmax_for = [&](int t) {
    int best = -1;
    double best_a = -1.0;
    for (int j = 0; j < f.graph.n; ++j)
      if (f.graph.edge(t, j) && f.scores.a(t, j) > best_a) {
        best_a = f.scores.a(t, j);
        best = j;
      }
    return best;
  };
  std::optional<int> n1, n2;
  if (const int j = argmax_for(t1); j != t2) n1 = j;
  if (const int j = argmax_for(t2); j != t1) n2 = j;
  if (n1 && n2 && *n1 == *n2) {
    if (f.scores.a(t1, *n1) >= f.scores.a(t2, *n2)) n2.reset();
    else n1.reset();
  }
  std::set<int> expected = {t1, t2};
  if (n1) expected.insert(*n1);
  if (n2) expected.insert(*n2);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Subgraph sub = select_subgraph_train(f.graph, f.scores, 1e-12, seed);
    CHECK(std::set<int>(sub.nodes.begin(), sub.nodes.end()) == expected);
  }
}

TEST_CASE("cycle pruning keeps the higher-scored conflicting edge") {
  // hand-built scores: 3 nodes, both targets prefer the common neighbor
  SpatialSceneGraph g;
  g.n = 3;
  g.targets = {0, 1};
  g.adj.assign(9, 0);
  g.set_edge(0, 1, true);
  g.set_edge(1, 0, true);
  g.set_edge(0, 2, true);
  g.set_edge(2, 0, true);
  g.set_edge(1, 2, true);
  g.set_edge(2, 1, true);
  EdgeScores s;
  s.n = 3;
  s.targets = {0, 1};
  s.raw = Mat::Zero(3, 3);
  s.a = Mat::Zero(3, 3);
  s.a(0, 1) = 0.1;
  s.a(0, 2) = 0.9;  // subject side wins
  s.a(1, 0) = 0.6;
  s.a(1, 2) = 0.4;
  s.a(2, 0) = 0.5;
  s.a(2, 1) = 0.5;

  const Subgraph sub = select_subgraph_train(g, s, 1e-12, 0);
  CHECK(sub.type == SubgraphType::ThreeHopS);
  CHECK(sub.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}});

  // flip the preference: object side keeps the edge
  s.a(0, 2) = 0.3;
  s.a(0, 1) = 0.7;
  s.a(1, 0) = 0.2;
  s.a(1, 2) = 0.8;
  const Subgraph sub2 = select_subgraph_train(g, s, 1e-12, 0);
  CHECK(sub2.type == SubgraphType::ThreeHopO);
  CHECK(sub2.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
}

TEST_CASE("classify_subgraph patterns and failure") {
  const std::array<int, 2> targets{0, 1};
  Subgraph two;
  two.nodes = {0, 1};
  two.edges = {{0, 1}};
  CHECK(classify_subgraph(two, targets) == SubgraphType::TwoHop);

  Subgraph three_s;
  three_s.nodes = {0, 1, 4};
  three_s.edges = {{0, 1}, {0, 4}};
  CHECK(classify_subgraph(three_s, targets) == SubgraphType::ThreeHopS);

  Subgraph three_o;
  three_o.nodes = {0, 1, 4};
  three_o.edges = {{0, 1}, {1, 4}};
  CHECK(classify_subgraph(three_o, targets) == SubgraphType::ThreeHopO);

  Subgraph four;
  four.nodes = {0, 1, 3, 4};
  four.edges = {{0, 1}, {0, 3}, {1, 4}};
  CHECK(classify_subgraph(four, targets) == SubgraphType::FourHop);

  Subgraph bad;
  bad.nodes = {0, 1, 3};
  bad.edges = {{0, 1}};  // disconnected extra node
  CHECK_THROWS_AS(classify_subgraph(bad, targets), ValidationError);
}

TEST_CASE("all scores below the cut leave only the 2-hop subgraph") {
  const Fixture f = make_fixture(17, 6);
  const auto subs = select_subgraphs_topk(f.graph, f.scores, 5, 1.1);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].type == SubgraphType::TwoHop);
}

TEST_CASE("two-target graph yields the 2-hop subgraph for any k") {
  const Fixture f = make_fixture(2, 2);
  for (int k : {1, 3, 10}) {
    const auto subs = select_subgraphs_topk(f.graph, f.scores, k);
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].type == SubgraphType::TwoHop);
  }
  CHECK_THROWS_AS(select_subgraphs_topk(f.graph, f.scores, 0), ValidationError);
}

TEST_CASE("disjoint eligible neighbors enumerate 1+2+2+4 candidates") {
  SpatialSceneGraph g;
  g.n = 6;
  g.targets = {0, 1};
  g.adj.assign(36, 0);
  auto connect = [&g](int a, int b) {
    g.set_edge(a, b, true);
    g.set_edge(b, a, true);
  };
  connect(0, 1);
  connect(0, 2);
  connect(0, 3);
  connect(1, 4);
  connect(1, 5);
  EdgeScores s;
  s.n = 6;
  s.targets = {0, 1};
  s.raw = Mat::Zero(6, 6);
  s.a = Mat::Zero(6, 6);
  s.a(0, 1) = 0.2;
  s.a(0, 2) = 0.5;
  s.a(0, 3) = 0.3;
  s.a(1, 0) = 0.4;
  s.a(1, 4) = 0.35;
  s.a(1, 5) = 0.25;
  s.a(2, 0) = s.a(3, 0) = s.a(4, 1) = s.a(5, 1) = 0.5;

  const auto all = enumerate_subgraphs_oracle(g, s, 0.1);
  CHECK(all.size() == 9);
  std::map<SubgraphType, int> counts;
  for (const Subgraph& sub : all) ++counts[sub.type];
  CHECK(counts[SubgraphType::TwoHop] == 1);
  CHECK(counts[SubgraphType::ThreeHopS] == 2);
  CHECK(counts[SubgraphType::ThreeHopO] == 2);
  CHECK(counts[SubgraphType::FourHop] == 4);
  // ranking is non-increasing in score
  for (std::size_t i = 1; i < all.size(); ++i)
    CHECK(all[i - 1].score >= all[i].score);
  // top of the list: both best neighbors
  CHECK(all[0].type == SubgraphType::FourHop);
  CHECK(all[0].score == Catch::Approx(0.2 + 0.5 + 0.35));
}

TEST_CASE("top-k equals the oracle prefix on hand-set scores") {
  const Fixture base = make_fixture(19, 5, 2.0);
  const auto all = enumerate_subgraphs_oracle(base.graph, base.scores, 0.1);
  const auto top3 = select_subgraphs_topk(base.graph, base.scores, 3, 0.1);
  REQUIRE(top3.size() == std::min<std::size_t>(3, all.size()));
  for (std::size_t i = 0; i < top3.size(); ++i) {
    CHECK(top3[i].nodes == all[i].nodes);
    CHECK(top3[i].edges == all[i].edges);
    CHECK(top3[i].score == all[i].score);
  }
}

TEST_CASE("top-k output is an oracle prefix across many seeded graphs") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Fixture f = make_fixture(seed, 3 + static_cast<int>(seed % 6), 2.0);
    const double p_cut = 0.05 + 0.05 * static_cast<double>(seed % 3);
    const auto all = enumerate_subgraphs_oracle(f.graph, f.scores, p_cut);
    for (int k : {1, 2, 5}) {
      const auto top = select_subgraphs_topk(f.graph, f.scores, k, p_cut);
      REQUIRE(top.size() ==
              std::min<std::size_t>(static_cast<std::size_t>(k), all.size()));
      for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i].nodes == all[i].nodes);
        CHECK(top[i].edges == all[i].edges);
        CHECK(top[i].type == all[i].type);
      }
      for (const Subgraph& sub : top) check_structure(sub, f.graph);
    }
  }
}

TEST_CASE("lowering the cut never shrinks the candidate set") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Fixture f = make_fixture(seed + 200, 6, 2.0);
    std::size_t prev = 0;
    for (double p_cut : {0.3, 0.2, 0.1, 0.05}) {
      const auto all = enumerate_subgraphs_oracle(f.graph, f.scores, p_cut);
      CHECK(all.size() >= prev);
      prev = all.size();
    }
  }
}

TEST_CASE("pooling matches a scalar double-loop recomputation") {
  const Fixture f = make_fixture(23, 6, 1.5);
  const auto subs = select_subgraphs_topk(f.graph, f.scores, 3, 0.05);
  REQUIRE_FALSE(subs.empty());
  const int n = f.graph.n, dh = f.enc.hidden_dim;
  const int t1 = f.graph.targets[0], t2 = f.graph.targets[1];
  for (const Subgraph& sub : subs) {
    const Vec r = pool_subgraph(f.enc, f.graph, sub, f.scores);
    REQUIRE(r.size() == 2 * dh);
    // direct summation oracle
    double denom = 0.0;
    for (int l = 0; l < n; ++l) denom += f.scores.a(t1, l) + f.scores.a(t2, l);
    Vec expect = Vec::Zero(2 * dh);
    for (int i = 0; i < n; ++i) {
      const bool member =
          std::find(sub.nodes.begin(), sub.nodes.end(), i) != sub.nodes.end();
      const double lambda =
          ((member ? 1.0 : 0.0) + f.scores.a(t1, i) + f.scores.a(t2, i)) /
          denom;
      for (int j = 0; j < n; ++j) {
        Vec cat(2 * dh);
        cat << f.enc.final_node_reps().row(i).transpose(),
            f.enc.final_edge_reps()
                .row(static_cast<Eigen::Index>(i) * n + j)
                .transpose();
        expect += lambda * cat;
      }
    }
    expect /= static_cast<double>(n) * static_cast<double>(n);
    CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pooling scales linearly with the representations") {
  Fixture f = make_fixture(29, 5, 1.0);
  const auto subs = select_subgraphs_topk(f.graph, f.scores, 1, 0.05);
  const Vec base = pool_subgraph(f.enc, f.graph, subs[0], f.scores);
  GraphEncoding scaled = f.enc;
  scaled.node_reps.back() *= 3.0;
  scaled.edge_reps.back() *= 3.0;
  const Vec tripled = pool_subgraph(scaled, f.graph, subs[0], f.scores);
  CHECK((tripled - 3.0 * base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-node pooling weights follow the closed form") {
  const Fixture f = make_fixture(2, 2);
  // both scores are 1, denom = 2, membership 1: lambda = (1 + 1) / 2 = 1
  Subgraph sub;
  sub.nodes = {std::min(f.graph.targets[0], f.graph.targets[1]),
               std::max(f.graph.targets[0], f.graph.targets[1])};
  sub.edges = {{sub.nodes[0], sub.nodes[1]}};
  sub.type = SubgraphType::TwoHop;
  const Vec r = pool_subgraph(f.enc, f.graph, sub, f.scores);
  const int n = 2, dh = f.enc.hidden_dim;
  Vec expect = Vec::Zero(2 * dh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec cat(2 * dh);
      cat << f.enc.final_node_reps().row(i).transpose(),
          f.enc.final_edge_reps()
              .row(static_cast<Eigen::Index>(i) * n + j)
              .transpose();
      expect += cat;  // lambda = 1 for both nodes
    }
  expect /= 4.0;
  CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-12);
}
