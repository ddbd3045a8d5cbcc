#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/encoder.hpp"
#include "ssg3d/graph.hpp"
#include "ssg3d/sampler.hpp"
#include "ssg3d/scene.hpp"

namespace ssg3d {

/// Encoder plus connecting-strength scorer: everything the toy training
/// loop optimizes.
struct Model {
  EncoderParams encoder;
  ScorerParams scorer;
};

inline Model init_model(std::uint64_t seed, int hidden_dim, int layers,
                        int bins, int vis_dim) {
  Model m;
  m.encoder = init_params(seed, hidden_dim, layers, bins, vis_dim);
  m.scorer = init_scorer(hidden_dim);
  return m;
}

inline std::vector<TensorRef> tensor_refs(Model& m) {
  std::vector<TensorRef> refs = tensor_refs(m.encoder);
  refs.push_back({"scorer.w", m.scorer.w.data(), m.scorer.w.size(),
                  m.scorer.w.size(), 1});
  refs.push_back({"scorer.b", &m.scorer.b, 1, 1, 1});
  return refs;
}

inline Model zero_like(const Model& m) {
  Model z = m;
  for (TensorRef& t : tensor_refs(z))
    for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] = 0.0;
  return z;
}

struct TrainConfig {
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  int epochs = 30;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate < 0.0) throw ValidationError("learning_rate must be >= 0");
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw ValidationError("betas must lie in (0,1)");
    if (eps <= 0.0) throw ValidationError("eps must be > 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  }
};

/// Indices of objects whose tag occurs in the description as a
/// case-insensitive whole word (boundaries are non-alphanumeric characters
/// or the string ends). "chair" does not match inside "chairs".
inline std::set<int> extract_gt_objects(const std::string& description,
                                        const std::vector<std::string>& tags) {
  auto lower = [](const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  const std::string text = lower(description);
  std::set<int> found;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string tag = lower(tags[i]);
    if (tag.empty()) continue;
    std::size_t pos = 0;
    while ((pos = text.find(tag, pos)) != std::string::npos) {
      const bool left_ok = pos == 0 || !word_char(text[pos - 1]);
      const std::size_t end = pos + tag.size();
      const bool right_ok = end == text.size() || !word_char(text[end]);
      if (left_ok && right_ok) {
        found.insert(static_cast<int>(i));
        break;
      }
      ++pos;
    }
  }
  return found;
}

/// Connecting-strength loss: -sum over in-set objects of the two target-row
/// log scores. Terms whose edge is absent are skipped; an empty set gives 0.
inline double loss_connect(const EdgeScores& scores,
                           const std::set<int>& gt_objects) {
  double loss = 0.0;
  for (int t : scores.targets)
    for (int i : gt_objects)
      if (i >= 0 && i < scores.n && scores.a(t, i) != 0.0)  // 0 == no edge
        loss -= std::log(std::max(scores.a(t, i), 1e-12));
  return loss;
}

/// Loss of one scene under the current model (forward only).
inline double connect_loss_forward(const Scene& scene,
                                   const SpatialSceneGraph& g,
                                   const Model& model,
                                   const std::set<int>& gt_objects) {
  const GraphEncoding enc = encode_graph(g, scene, model.encoder);
  const EdgeScores scores = score_edges(enc, g, model.scorer);
  return loss_connect(scores, gt_objects);
}

/// Forward + analytic backward of the connecting-strength loss through the
/// scorer and every encoder layer down to the embedding tables. Gradients
/// are accumulated into `grads` (same shapes as the model).
inline double loss_connect_backward(const Scene& scene,
                                    const SpatialSceneGraph& g,
                                    const Model& model,
                                    const std::set<int>& gt_objects,
                                    Model& grads) {
  const EncoderParams& p = model.encoder;
  const int n = g.n;
  const int dh = p.hidden_dim;
  const int o1 = g.targets[0], o2 = g.targets[1];

  const GraphEncoding enc = encode_graph(g, scene, p);
  const EdgeScores scores = score_edges(enc, g, model.scorer);
  const double loss = loss_connect(scores, gt_objects);

  // d loss / d raw score, nonzero only on target rows:
  // for softmax row t over its incident edges, each in-set term -log a(t,i)
  // contributes a(t,j) - [j == i].
  Mat gz = Mat::Zero(n, n);
  for (int t : g.targets) {
    std::vector<int> in_set;
    for (int i : gt_objects)
      if (i >= 0 && i < n && g.edge(t, i)) in_set.push_back(i);
    if (in_set.empty()) continue;
    for (int j = 0; j < n; ++j)
      if (g.edge(t, j))
        gz(t, j) = static_cast<double>(in_set.size()) * scores.a(t, j);
    for (int i : in_set) gz(t, i) -= 1.0;
  }

  // scorer backward and gradient w.r.t. final edge reps; the bias cancels
  // inside each softmax group, so its gradient under this loss is exactly 0
  const Mat& e_fin = enc.final_edge_reps();
  Mat g_edge = Mat::Zero(static_cast<Eigen::Index>(n) * n, dh);
  for (int t : g.targets)
    for (int j = 0; j < n; ++j)
      if (g.edge(t, j) && gz(t, j) != 0.0) {
        const Eigen::Index row = static_cast<Eigen::Index>(t) * n + j;
        grads.scorer.w += gz(t, j) * e_fin.row(row).transpose();
        g_edge.row(row) += gz(t, j) * model.scorer.w.transpose();
      }
  Mat g_node = Mat::Zero(n, dh);

  // layers L..1
  for (int l = p.layers; l >= 1; --l) {
    const Mat& pv = enc.node_reps[static_cast<std::size_t>(l - 1)];
    const Mat& pe = enc.edge_reps[static_cast<std::size_t>(l - 1)];
    const Mat& cv = enc.node_reps[static_cast<std::size_t>(l)];
    const Mat& ce = enc.edge_reps[static_cast<std::size_t>(l)];
    const Mat& att = enc.attention[static_cast<std::size_t>(l - 1)];
    Vec t_sum(2 * dh);
    t_sum << pv.row(o1).transpose(), pv.row(o2).transpose();

    Mat g_node_prev = Mat::Zero(n, dh);
    Mat g_edge_prev = Mat::Zero(static_cast<Eigen::Index>(n) * n, dh);

    // edge update: E_l(i,j) = tanh(Wu [v_{l-1}(i); E_{l-1}(i,j); v_{l-1}(j)] + bu)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g.edge(i, j)) {
          const Eigen::Index row = static_cast<Eigen::Index>(i) * n + j;
          if (g_edge.row(row).isZero(0.0)) continue;
          const Vec gpre = g_edge.row(row).transpose().array() *
                           (1.0 - ce.row(row).array().square()).transpose();
          Vec x(3 * dh);
          x << pv.row(i).transpose(), pe.row(row).transpose(),
              pv.row(j).transpose();
          grads.encoder.ffn_edge_update.W += gpre * x.transpose();
          grads.encoder.ffn_edge_update.b += gpre;
          const Vec gx = p.ffn_edge_update.W.transpose() * gpre;
          g_node_prev.row(i) += gx.segment(0, dh).transpose();
          g_edge_prev.row(row) += gx.segment(dh, dh).transpose();
          g_node_prev.row(j) += gx.segment(2 * dh, dh).transpose();
        }

    // node update: v_l(i) = tanh(sum_j gamma_ij (Wa c_ij + ba)),
    // gamma = softmax(attn_w . c_ij) over neighbors,
    // c_ij = [v_{l-1}(j); E_{l-1}(i,j); t_sum]
    Vec g_t = Vec::Zero(2 * dh);
    for (int i = 0; i < n; ++i) {
      if (g_node.row(i).isZero(0.0)) continue;
      std::vector<int> nb;
      for (int j = 0; j < n; ++j)
        if (g.edge(i, j)) nb.push_back(j);
      if (nb.empty()) {
        g_node_prev.row(i) += g_node.row(i);  // copy-through
        continue;
      }
      const Vec gh = g_node.row(i).transpose().array() *
                     (1.0 - cv.row(i).array().square()).transpose();

      std::vector<Vec> cs(nb.size()), msgs(nb.size());
      Vec ggamma(static_cast<Eigen::Index>(nb.size()));
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const int j = nb[k];
        cs[k].resize(4 * dh);
        cs[k] << pv.row(j).transpose(),
            pe.row(static_cast<Eigen::Index>(i) * n + j).transpose(), t_sum;
        msgs[k] = p.agg_W[static_cast<std::size_t>(l - 1)] * cs[k] +
                  p.agg_b[static_cast<std::size_t>(l - 1)];
        ggamma[static_cast<Eigen::Index>(k)] = msgs[k].dot(gh);
      }
      double dot = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k)
        dot += att(i, nb[k]) * ggamma[static_cast<Eigen::Index>(k)];
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const int j = nb[k];
        const double gamma = att(i, j);
        const Vec gm = gamma * gh;
        const double gu = gamma * (ggamma[static_cast<Eigen::Index>(k)] - dot);
        grads.encoder.agg_W[static_cast<std::size_t>(l - 1)] +=
            gm * cs[k].transpose();
        grads.encoder.agg_b[static_cast<std::size_t>(l - 1)] += gm;
        // the attention logit reads only the neighbor and edge blocks; the
        // target block cancels in the softmax and has exactly zero gradient
        grads.encoder.attn_w[static_cast<std::size_t>(l - 1)].head(2 * dh) +=
            gu * cs[k].head(2 * dh);
        Vec gc = p.agg_W[static_cast<std::size_t>(l - 1)].transpose() * gm;
        gc.head(2 * dh) +=
            gu * p.attn_w[static_cast<std::size_t>(l - 1)].head(2 * dh);
        g_node_prev.row(j) += gc.segment(0, dh).transpose();
        g_edge_prev.row(static_cast<Eigen::Index>(i) * n + j) +=
            gc.segment(dh, dh).transpose();
        g_t += gc.segment(2 * dh, 2 * dh);
      }
    }
    g_node_prev.row(o1) += g_t.segment(0, dh).transpose();
    g_node_prev.row(o2) += g_t.segment(dh, dh).transpose();

    g_node = std::move(g_node_prev);
    g_edge = std::move(g_edge_prev);
  }

  // layer 0: node embeddings
  const Mat& v0 = enc.node_reps[0];
  for (int i = 0; i < n; ++i) {
    if (g_node.row(i).isZero(0.0)) continue;
    const Object3D& obj = scene.objects[i];
    const Vec gpre = g_node.row(i).transpose().array() *
                     (1.0 - v0.row(i).array().square()).transpose();
    Vec pose = Vec::Zero(dh);
    const auto bins = pose_bins(obj, p.bins);
    for (int k = 0; k < 6; ++k)
      pose += p.embed_tables[static_cast<std::size_t>(k)].row(bins[k]);
    Vec x(p.vis_dim + dh);
    x << obj.vis, pose;
    grads.encoder.ffn_node.W += gpre * x.transpose();
    grads.encoder.ffn_node.b += gpre;
    const Vec gpose =
        p.ffn_node.W.rightCols(dh).transpose() * gpre;
    for (int k = 0; k < 6; ++k)
      grads.encoder.embed_tables[static_cast<std::size_t>(k)].row(bins[k]) +=
          gpose.transpose();
  }

  // layer 0: edge embeddings
  const Mat& e0 = enc.edge_reps[0];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.edge(i, j)) {
        const Eigen::Index row = static_cast<Eigen::Index>(i) * n + j;
        if (g_edge.row(row).isZero(0.0)) continue;
        const Vec gpre = g_edge.row(row).transpose().array() *
                         (1.0 - e0.row(row).array().square()).transpose();
        Vec x(6);
        x << scene.objects[i].loc, scene.objects[j].loc;
        grads.encoder.ffn_edge.W += gpre * x.transpose();
        grads.encoder.ffn_edge.b += gpre;
      }

  return loss;
}

struct AdamWState {
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

/// Decoupled-weight-decay Adam step over every tensor of the model.
/// `grads` is only read; it is non-const so the tensor views can be built.
inline void adamw_update(Model& model, Model& grads, const TrainConfig& cfg,
                         AdamWState& state) {
  cfg.validate();
  std::vector<TensorRef> prefs = tensor_refs(model);
  std::vector<TensorRef> grefs = tensor_refs(grads);
  std::size_t total = 0;
  for (const TensorRef& t : prefs) total += static_cast<std::size_t>(t.size);
  if (state.m.empty()) {
    state.m.assign(total, 0.0);
    state.v.assign(total, 0.0);
  }
  if (state.m.size() != total)
    throw ValidationError("optimizer state does not match the model");

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::size_t idx = 0;
  for (std::size_t t = 0; t < prefs.size(); ++t)
    for (Eigen::Index i = 0; i < prefs[t].size; ++i, ++idx) {
      const double grad = grefs[t].data[i];
      state.m[idx] = cfg.beta1 * state.m[idx] + (1.0 - cfg.beta1) * grad;
      state.v[idx] = cfg.beta2 * state.v[idx] + (1.0 - cfg.beta2) * grad * grad;
      const double mhat = state.m[idx] / bc1;
      const double vhat = state.v[idx] / bc2;
      prefs[t].data[i] -=
          cfg.learning_rate *
          (mhat / (std::sqrt(vhat) + cfg.eps) +
           cfg.weight_decay * prefs[t].data[i]);
    }
}

/// One optimization step: forward + backward over the batch (losses summed),
/// then an AdamW update. The ground-truth object set of each scene comes
/// from whole-word search of its tags in the description.
inline double train_step(Model& model, const std::vector<Scene>& batch,
                         const TrainConfig& cfg, AdamWState& state,
                         const GraphOptions& gopt = {}) {
  cfg.validate();
  if (batch.empty()) throw ValidationError("batch must be non-empty");
  Model grads = zero_like(model);
  double total = 0.0;
  for (const Scene& scene : batch) {
    std::vector<std::string> tags;
    tags.reserve(scene.objects.size());
    for (const Object3D& obj : scene.objects) tags.push_back(obj.tag);
    const std::set<int> gt =
        scene.description ? extract_gt_objects(*scene.description, tags)
                          : std::set<int>{};
    const SpatialSceneGraph g = build_graph(scene, gopt);
    total += loss_connect_backward(scene, g, model, gt, grads);
  }
  if (!std::isfinite(total))
    throw NumericalError("non-finite training loss: " + std::to_string(total));
  adamw_update(model, grads, cfg, state);
  return total;
}

struct GradCheckResult {
  /// Worst per-parameter error: for each named parameter tensor,
  /// ||g_fd - g_an|| / max(||g_fd||, ||g_an||, 1e-12) over its entries.
  double max_rel_error = 0.0;
  /// Worst single-entry error |g_fd - g_an| / max(|g_fd|, |g_an|, 1e-12).
  /// Diagnostic only: central differences at eps=1e-6 on a unit-scale loss
  /// carry ~1e-10 of rounding noise, so entries whose true gradient is
  /// below ~1e-5 report large relative errors regardless of correctness.
  double max_scalar_rel_error = 0.0;
  std::string worst_tensor;
};

/// Central finite differences (f(theta+eps) - f(theta-eps)) / 2eps of the
/// connecting-strength loss, entry by entry, against the analytic gradient.
inline GradCheckResult finite_diff_check(const Scene& scene,
                                         const Model& model,
                                         const std::set<int>& gt_objects,
                                         double eps,
                                         const GraphOptions& gopt = {}) {
  if (eps <= 0.0) throw ValidationError("eps must be > 0");
  const SpatialSceneGraph g = build_graph(scene, gopt);

  Model work = model;
  Model analytic = zero_like(model);
  loss_connect_backward(scene, g, work, gt_objects, analytic);

  std::vector<TensorRef> prefs = tensor_refs(work);
  std::vector<TensorRef> arefs = tensor_refs(analytic);
  GradCheckResult result;
  for (std::size_t t = 0; t < prefs.size(); ++t) {
    double diff_sq = 0.0, fd_sq = 0.0, an_sq = 0.0;
    for (Eigen::Index i = 0; i < prefs[t].size; ++i) {
      double& theta = prefs[t].data[i];
      const double saved = theta;
      theta = saved + eps;
      const double up = connect_loss_forward(scene, g, work, gt_objects);
      theta = saved - eps;
      const double down = connect_loss_forward(scene, g, work, gt_objects);
      theta = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double an = arefs[t].data[i];
      diff_sq += (fd - an) * (fd - an);
      fd_sq += fd * fd;
      an_sq += an * an;
      const double rel =
          std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-12});
      result.max_scalar_rel_error =
          std::max(result.max_scalar_rel_error, rel);
    }
    const double rel_tensor =
        std::sqrt(diff_sq) /
        std::max({std::sqrt(fd_sq), std::sqrt(an_sq), 1e-12});
    if (rel_tensor > result.max_rel_error) {
      result.max_rel_error = rel_tensor;
      result.worst_tensor = prefs[t].name;
    }
  }
  return result;
}

/// Synthetic training scene: unique tags, confidences above the default
/// noise threshold, and one non-target object carrying a strong visual
/// signature plus the only tag mentioned in the description.
inline Scene make_planted_scene(std::uint64_t seed, int n_objects = 6,
                                int vis_dim = 8) {
  if (n_objects < 3) throw ValidationError("planted scene needs >= 3 objects");
  const auto& vocab = synth_vocabulary();
  if (n_objects > static_cast<int>(vocab.size()))
    throw ValidationError("planted scene limited to vocabulary size");
  RandomStream rng(seed);

  std::vector<int> tag_ids(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) tag_ids[i] = static_cast<int>(i);
  for (int i = 0; i < n_objects; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(vocab.size()) - 1);
    std::swap(tag_ids[static_cast<std::size_t>(i)],
              tag_ids[static_cast<std::size_t>(j)]);
  }

  Scene scene;
  for (int i = 0; i < n_objects; ++i) {
    Object3D obj;
    obj.tag = vocab[static_cast<std::size_t>(tag_ids[static_cast<std::size_t>(i)])];
    obj.confidence = rng.uniform(0.75, 1.0);
    for (int a = 0; a < 3; ++a) obj.loc[a] = rng.uniform();
    for (int a = 0; a < 3; ++a) obj.size[a] = 1.0 - rng.uniform();
    for (int a = 0; a < 3; ++a) obj.ori[a] = rng.uniform(-kPi, kPi);
    obj.vis.resize(vis_dim);
    for (int k = 0; k < vis_dim; ++k) obj.vis[k] = rng.uniform(-0.5, 0.5);
    scene.objects.push_back(std::move(obj));
  }
  scene.targets[0] = rng.uniform_int(0, n_objects - 1);
  int second = rng.uniform_int(0, n_objects - 2);
  if (second >= scene.targets[0]) ++second;
  scene.targets[1] = second;

  int planted = rng.uniform_int(0, n_objects - 3);
  for (int t : {std::min(scene.targets[0], scene.targets[1]),
                std::max(scene.targets[0], scene.targets[1])})
    if (planted >= t) ++planted;
  scene.objects[static_cast<std::size_t>(planted)].vis[0] += 4.0;
  scene.description =
      "the " + scene.objects[static_cast<std::size_t>(planted)].tag +
      " is the landmark";
  validate_scene(scene);
  return scene;
}

inline std::vector<Scene> make_planted_set(std::uint64_t seed, int count,
                                           int n_objects = 6, int vis_dim = 8) {
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(make_planted_scene(seed + static_cast<std::uint64_t>(i),
                                     n_objects, vis_dim));
  return out;
}

/// Fraction of (scene, target) pairs whose highest-scored incident edge
/// points at a ground-truth object.
inline double argmax_accuracy(const Model& model,
                              const std::vector<Scene>& scenes,
                              const GraphOptions& gopt = {}) {
  if (scenes.empty()) throw ValidationError("no scenes");
  int correct = 0, total = 0;
  for (const Scene& scene : scenes) {
    std::vector<std::string> tags;
    for (const Object3D& obj : scene.objects) tags.push_back(obj.tag);
    const std::set<int> gt =
        scene.description ? extract_gt_objects(*scene.description, tags)
                          : std::set<int>{};
    const SpatialSceneGraph g = build_graph(scene, gopt);
    const GraphEncoding enc = encode_graph(g, scene, model.encoder);
    const EdgeScores scores = score_edges(enc, g, model.scorer);
    for (int t : g.targets) {
      int best = -1;
      double best_score = -1.0;
      for (int j = 0; j < g.n; ++j)
        if (g.edge(t, j) && scores.a(t, j) > best_score) {
          best_score = scores.a(t, j);
          best = j;
        }
      ++total;
      if (best >= 0 && gt.count(best)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

/// Runs `steps` sequential batches over the scene list (wrapping around) and
/// returns the per-step summed losses. Deterministic for a fixed model,
/// scene order, and config.
inline std::vector<double> run_toy_training(Model& model,
                                            const std::vector<Scene>& scenes,
                                            int steps, const TrainConfig& cfg,
                                            const GraphOptions& gopt = {}) {
  if (scenes.empty()) throw ValidationError("no scenes");
  AdamWState state;
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(steps));
  std::size_t cursor = 0;
  for (int s = 0; s < steps; ++s) {
    std::vector<Scene> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      batch.push_back(scenes[cursor]);
      cursor = (cursor + 1) % scenes.size();
    }
    losses.push_back(train_step(model, batch, cfg, state, gopt));
  }
  return losses;
}

}  // namespace ssg3d
