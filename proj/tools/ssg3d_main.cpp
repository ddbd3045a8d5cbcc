// ssg3d command line: scene graph construction, encoding, subgraph sampling,
// direction mapping, prompt generation, toy training, and diversity metrics.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssg3d/ssg3d.hpp"

namespace {

using namespace ssg3d;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ValidationError("cannot write \"" + out_path + "\"");
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
}

Eigen::Vector3d parse_xyz(const std::string& text) {
  Eigen::Vector3d v;
  std::istringstream in(text);
  std::string part;
  for (int a = 0; a < 3; ++a) {
    if (!std::getline(in, part, ','))
      throw ValidationError("expected x,y,z but got \"" + text + "\"");
    try {
      v[a] = std::stod(part);
    } catch (const std::exception&) {
      throw ValidationError("bad coordinate \"" + part + "\"");
    }
  }
  if (std::getline(in, part, ','))
    throw ValidationError("expected exactly 3 coordinates");
  return v;
}

std::vector<RelationTriplet> load_triplets(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("triplets: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("triplets: expected a JSON array");
  std::vector<RelationTriplet> out;
  for (const auto& item : doc) {
    if (!item.is_array() || item.size() != 3)
      throw ValidationError("triplets: each entry must be [subject, relation, object]");
    out.push_back({item[0].get<std::string>(), item[1].get<std::string>(),
                   item[2].get<std::string>()});
  }
  return out;
}

SynonymTable load_synonyms(const std::string& path) {
  if (path.empty()) return {};
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("synonyms: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("synonyms: expected a JSON object");
  SynonymTable table;
  for (const auto& [term, list] : doc.items()) {
    if (!list.is_array()) throw ValidationError("synonyms: values must be arrays");
    for (const auto& s : list) table[term].push_back(s.get<std::string>());
  }
  return table;
}

std::string subgraph_report(const Scene& scene, const Subgraph& sub) {
  std::ostringstream out;
  out << subgraph_type_name(sub.type) << " score=" << sub.score << "\n";
  out << "  nodes:";
  for (int v : sub.nodes) out << " " << v << ":" << scene.objects[v].tag;
  out << "\n  edges:";
  for (const auto& [a, b] : sub.edges)
    out << " (" << scene.objects[a].tag << "," << scene.objects[b].tag << ")";
  out << "\n";
  return out.str();
}

struct CliState {
  std::string out_path;
  std::uint64_t seed = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"target-centered 3D spatial scene graphs: construction, "
               "encoding, subgraph sampling, direction terms, prompts"};
  app.require_subcommand(1);
  app.set_config("--config")->description("key=value configuration file");
  app.fallthrough();

  CliState cli;
  app.add_option("--out", cli.out_path, "write output to this path instead of stdout");
  app.add_option("--seed", cli.seed, "random seed for seeded subcommands");

  int exit_code = 0;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  int synth_n = 6, synth_vis = 8;
  synth->add_option("--n", synth_n, "object count (2..36)");
  synth->add_option("--vis-dim", synth_vis, "visual feature dimension");
  synth->callback([&] {
    emit(cli.out_path, serialize_scene(synth_scene(cli.seed, synth_n, synth_vis)));
  });

  // build-graph
  auto* bg = app.add_subcommand("build-graph", "construct the spatial scene graph");
  std::string bg_scene;
  GraphOptions bg_opt;
  bool bg_json = false;
  bg->add_option("--scene", bg_scene, "scene JSON file")->required();
  bg->add_option("--d", bg_opt.distance_threshold, "distance threshold");
  bg->add_option("--p", bg_opt.confidence_threshold, "confidence threshold");
  bg->add_flag("--near-lt", bg_opt.near_lt,
               "near-neighbor comparator dist < d instead of dist > d");
  bg->add_flag("--json", bg_json, "emit a JSON report");
  bg->callback([&] {
    const Scene scene = parse_scene(read_file(bg_scene));
    const SpatialSceneGraph g = build_graph(scene, bg_opt);
    if (bg_json) {
      nlohmann::json doc;
      doc["n"] = g.n;
      doc["targets"] = {g.targets[0], g.targets[1]};
      doc["adjacency"] = nlohmann::json::array();
      for (int i = 0; i < g.n; ++i) {
        std::vector<int> row(g.n);
        for (int j = 0; j < g.n; ++j) row[j] = g.edge(i, j) ? 1 : 0;
        doc["adjacency"].push_back(row);
      }
      doc["edges"] = nlohmann::json::array();
      for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j)
          if (g.edge(i, j))
            doc["edges"].push_back({{"i", i},
                                    {"j", j},
                                    {"type", edge_type_name(classify_edge(g, i, j))}});
      emit(cli.out_path, doc.dump(2));
      return;
    }
    std::ostringstream out;
    out << "nodes: " << g.n << "  targets: (" << g.targets[0] << ","
        << g.targets[1] << ")\n";
    for (int i = 0; i < g.n; ++i) {
      for (int j = 0; j < g.n; ++j) out << (g.edge(i, j) ? '1' : '0');
      out << "  " << i << ":" << scene.objects[i].tag << "\n";
    }
    for (int i = 0; i < g.n; ++i)
      for (int j = i + 1; j < g.n; ++j)
        if (g.edge(i, j))
          out << "edge (" << i << "," << j << ") "
              << edge_type_name(classify_edge(g, i, j)) << "\n";
    emit(cli.out_path, out.str());
  });

  // encode
  auto* enc_cmd = app.add_subcommand("encode", "run the graph encoder");
  std::string enc_scene, enc_params;
  int enc_layers = -1;
  GraphOptions enc_gopt;
  enc_cmd->add_option("--scene", enc_scene, "scene JSON file")->required();
  enc_cmd->add_option("--params", enc_params, "parameter bundle")->required();
  enc_cmd->add_option("--layers", enc_layers,
                      "emit representations of this layer (default: final)");
  enc_cmd->add_option("--d", enc_gopt.distance_threshold, "distance threshold");
  enc_cmd->add_option("--p", enc_gopt.confidence_threshold, "confidence threshold");
  enc_cmd->add_flag("--near-lt", enc_gopt.near_lt, "flip the near comparator");
  enc_cmd->callback([&] {
    const Scene scene = parse_scene(read_file(enc_scene));
    const Model model = load_model(enc_params);
    const SpatialSceneGraph g = build_graph(scene, enc_gopt);
    const GraphEncoding enc = encode_graph(g, scene, model.encoder);
    const int layer = enc_layers < 0 ? enc.layers : enc_layers;
    if (layer < 0 || layer > enc.layers)
      throw ValidationError("layer must lie in [0," +
                            std::to_string(enc.layers) + "]");
    nlohmann::json doc;
    doc["layer"] = layer;
    doc["node_reps"] = nlohmann::json::array();
    const Mat& nodes = enc.node_reps[static_cast<std::size_t>(layer)];
    for (int i = 0; i < g.n; ++i)
      doc["node_reps"].push_back(
          std::vector<double>(nodes.row(i).begin(), nodes.row(i).end()));
    doc["target_summary"] = std::vector<double>(
        enc.target_summary.data(),
        enc.target_summary.data() + enc.target_summary.size());
    doc["attention"] = nlohmann::json::array();
    for (int l = 1; l <= enc.layers; ++l) {
      nlohmann::json mat = nlohmann::json::array();
      for (int i = 0; i < g.n; ++i) {
        const Vec row = enc.attention_row(l, i);
        mat.push_back(std::vector<double>(row.data(), row.data() + row.size()));
      }
      doc["attention"].push_back(std::move(mat));
    }
    emit(cli.out_path, doc.dump(2));
  });

  // sample
  auto* sample = app.add_subcommand("sample", "select scene subgraphs");
  std::string sample_scene, sample_params;
  int sample_k = 5;
  double sample_pcut = 0.1, sample_temp = 1.0;
  bool sample_train = false;
  GraphOptions sample_gopt;
  sample->add_option("--scene", sample_scene, "scene JSON file")->required();
  sample->add_option("--params", sample_params, "parameter bundle")->required();
  sample->add_option("--k", sample_k, "number of subgraphs");
  sample->add_option("--p-cut", sample_pcut, "low-score filter threshold");
  sample->add_flag("--train-mode", sample_train,
                   "single stochastic sample instead of top-k");
  sample->add_option("--temperature", sample_temp, "training-sample temperature");
  sample->add_flag("--near-lt", sample_gopt.near_lt, "flip the near comparator");
  sample->callback([&] {
    const Scene scene = parse_scene(read_file(sample_scene));
    const Model model = load_model(sample_params);
    const SpatialSceneGraph g = build_graph(scene, sample_gopt);
    const GraphEncoding enc = encode_graph(g, scene, model.encoder);
    const EdgeScores scores = score_edges(enc, g, model.scorer);
    std::ostringstream out;
    if (sample_train) {
      out << subgraph_report(
          scene, select_subgraph_train(g, scores, sample_temp, cli.seed));
    } else {
      for (const Subgraph& sub :
           select_subgraphs_topk(g, scores, sample_k, sample_pcut))
        out << subgraph_report(scene, sub);
    }
    emit(cli.out_path, out.str());
  });

  // map-direction
  auto* md = app.add_subcommand("map-direction",
                                "map a centroid pair to a direction term");
  std::string md_s, md_o;
  DirectionRuleSet md_rules;
  md->add_option("--s", md_s, "subject centroid x,y,z")->required();
  md->add_option("--o", md_o, "object centroid x,y,z")->required();
  md->add_option("--tau", md_rules.tau, "closeness threshold");
  md->callback([&] {
    emit(cli.out_path,
         map_direction(parse_xyz(md_s), parse_xyz(md_o), md_rules).canonical());
  });

  // gen-pseudo
  auto* gp = app.add_subcommand("gen-pseudo",
                                "pseudo pre-training pairs from triplets");
  std::string gp_scene, gp_triplets, gp_synonyms;
  DirectionRuleSet gp_rules;
  gp->add_option("--scene", gp_scene, "scene JSON file")->required();
  gp->add_option("--triplets", gp_triplets,
                 "JSON array of [subject, relation, object]")->required();
  gp->add_option("--synonyms", gp_synonyms, "JSON object term -> synonyms");
  gp->add_option("--tau", gp_rules.tau, "closeness threshold");
  gp->callback([&] {
    const Scene scene = parse_scene(read_file(gp_scene));
    std::ostringstream out;
    for (const PseudoPair& pair :
         gen_pseudo_pairs(scene, load_triplets(gp_triplets),
                          load_synonyms(gp_synonyms), cli.seed, gp_rules))
      out << pair.input << "\t" << pair.output << "\n";
    emit(cli.out_path, out.str());
  });

  // gen-prompts
  auto* gpr = app.add_subcommand("gen-prompts",
                                 "prompt texts for sampled subgraphs");
  std::string gpr_scene, gpr_params;
  int gpr_k = 5;
  double gpr_pcut = 0.1;
  GraphOptions gpr_gopt;
  gpr->add_option("--scene", gpr_scene, "scene JSON file")->required();
  gpr->add_option("--params", gpr_params, "parameter bundle")->required();
  gpr->add_option("--k", gpr_k, "number of subgraphs");
  gpr->add_option("--p-cut", gpr_pcut, "low-score filter threshold");
  gpr->add_flag("--near-lt", gpr_gopt.near_lt, "flip the near comparator");
  gpr->callback([&] {
    const Scene scene = parse_scene(read_file(gpr_scene));
    const Model model = load_model(gpr_params);
    const SpatialSceneGraph g = build_graph(scene, gpr_gopt);
    const GraphEncoding enc = encode_graph(g, scene, model.encoder);
    const EdgeScores scores = score_edges(enc, g, model.scorer);
    std::ostringstream out;
    bool first = true;
    for (const Subgraph& sub :
         select_subgraphs_topk(g, scores, gpr_k, gpr_pcut)) {
      if (!first) out << "\n";
      first = false;
      const auto triplets = triplets_from_subgraph(scene, sub);
      out << build_prompt(scene.objects[scene.targets[0]].tag,
                          scene.objects[scene.targets[1]].tag, triplets)
                 .assembled
          << "\n";
    }
    emit(cli.out_path, out.str());
  });

  // train-toy
  auto* tt = app.add_subcommand("train-toy",
                                "train encoder+scorer on a planted synthetic set");
  int tt_scenes = 200, tt_steps = 500, tt_dh = 16, tt_objects = 6, tt_vis = 8;
  TrainConfig tt_cfg;
  std::string tt_params_out;
  tt->add_option("--scenes", tt_scenes, "number of planted scenes");
  tt->add_option("--steps", tt_steps, "optimization steps");
  tt->add_option("--d-h", tt_dh, "hidden dimension");
  tt->add_option("--n-objects", tt_objects, "objects per scene");
  tt->add_option("--vis-dim", tt_vis, "visual feature dimension");
  tt->add_option("--lr", tt_cfg.learning_rate, "learning rate");
  tt->add_option("--weight-decay", tt_cfg.weight_decay, "decoupled weight decay");
  tt->add_option("--batch-size", tt_cfg.batch_size, "batch size");
  tt->add_option("--save-params", tt_params_out, "write trained bundle here");
  tt->callback([&] {
    const auto scenes =
        make_planted_set(cli.seed + 1, tt_scenes, tt_objects, tt_vis);
    Model model = init_model(cli.seed, tt_dh, 3, 16, tt_vis);
    const double acc0 = argmax_accuracy(model, scenes);
    const auto losses = run_toy_training(model, scenes, tt_steps, tt_cfg);
    const double acc1 = argmax_accuracy(model, scenes);
    std::ostringstream out;
    out << "scenes=" << tt_scenes << " steps=" << tt_steps
        << " d_h=" << tt_dh << "\n";
    out << "loss first=" << losses.front() << " last=" << losses.back() << "\n";
    out << "argmax accuracy before=" << acc0 << " after=" << acc1 << "\n";
    if (!tt_params_out.empty()) {
      save_model(tt_params_out, model);
      out << "params written to " << tt_params_out << "\n";
    }
    emit(cli.out_path, out.str());
  });

  // eval-diversity
  auto* ev = app.add_subcommand("eval-diversity",
                                "diversity metrics over candidate sentences");
  std::string ev_candidates, ev_references;
  ev->add_option("--candidates", ev_candidates,
                 "file with one candidate sentence per line, or - for stdin")
      ->required();
  ev->add_option("--references", ev_references,
                 "optional file with one reference per line (enables BLEU-4@K)");
  ev->callback([&] {
    auto read_lines = [](const std::string& path) {
      std::vector<std::string> lines;
      auto take = [&lines](std::istream& in) {
        for (std::string line; std::getline(in, line);)
          if (!line.empty()) lines.push_back(line);
      };
      if (path == "-") {
        take(std::cin);
      } else {
        std::istringstream in(read_file(path));
        take(in);
      }
      return lines;
    };
    const auto candidates = read_lines(ev_candidates);
    std::vector<MetricReport> reports;
    reports.push_back({"mBLEU-4", mbleu4(candidates),
                       static_cast<int>(candidates.size())});
    if (!ev_references.empty()) {
      const auto refs = read_lines(ev_references);
      reports.push_back({"BLEU-4@K", bleu4_at_k(candidates, refs),
                         static_cast<int>(candidates.size())});
    }
    std::ostringstream out;
    out << "metric      value       samples\n";
    for (const MetricReport& r : reports) {
      out << r.name;
      for (std::size_t pad = r.name.size(); pad < 12; ++pad) out << ' ';
      out << r.value << "  " << r.samples << "\n";
    }
    emit(cli.out_path, out.str());
  });

  // grad-check
  auto* gc = app.add_subcommand("grad-check",
                                "analytic gradients vs central differences");
  int gc_n = 6, gc_dh = 8, gc_layers = 3;
  double gc_eps = 1e-6, gc_tol = 1e-5;
  gc->add_option("--n", gc_n, "objects in the check scene");
  gc->add_option("--d-h", gc_dh, "hidden dimension");
  gc->add_option("--layers", gc_layers, "encoder layers");
  gc->add_option("--eps", gc_eps, "finite-difference step");
  gc->add_option("--tol", gc_tol, "failure threshold on the relative error");
  gc->callback([&] {
    Scene s = synth_scene(cli.seed + 1, gc_n, 8);
    for (auto& o : s.objects) {
      o.confidence = 0.75 + 0.2 * o.confidence;
      o.vis *= 3.0;
    }
    Model m = init_model(cli.seed * 977 + 11, gc_dh, gc_layers, 16, 8);
    RandomStream rng(cli.seed * 31 + 5);
    for (int i = 0; i < m.scorer.w.size(); ++i)
      m.scorer.w[i] = rng.uniform(-3.0, 3.0);
    m.scorer.b = rng.uniform(-0.5, 0.5);
    std::set<int> gt;
    for (int i = 0; i < s.size(); ++i)
      if (i != s.targets[0] && i != s.targets[1]) gt.insert(i);
    const auto res = finite_diff_check(s, m, gt, gc_eps);
    std::ostringstream out;
    out << "max relative error (per parameter tensor): " << res.max_rel_error
        << "\n";
    out << "max relative error (per entry, diagnostic): "
        << res.max_scalar_rel_error << "\n";
    out << "worst tensor: " << res.worst_tensor << "\n";
    emit(cli.out_path, out.str());
    if (res.max_rel_error >= gc_tol) {
      std::ostringstream msg;
      msg << "gradient check failed: " << res.max_rel_error
          << " >= " << gc_tol;
      throw NumericalError(msg.str());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
