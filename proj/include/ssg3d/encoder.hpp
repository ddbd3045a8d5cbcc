#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssg3d/common.hpp"
#include "ssg3d/graph.hpp"
#include "ssg3d/scene.hpp"

namespace ssg3d {

/// Affine block applied as tanh(W x + b).
struct FfnBlock {
  Mat W;
  Vec b;
};

/// Parameters of the object-centered graph convolutional encoder.
///
/// Pose scalars (3 orientation angles, 3 size extents) are quantized into
/// `bins` uniform buckets and looked up in per-scalar embedding tables whose
/// vectors are summed. Aggregation and attention weights are per layer; the
/// edge-update block is shared across layers.
struct EncoderParams {
  int hidden_dim = 0;  // d_h
  int layers = 0;      // L
  int bins = 0;        // quantization buckets per pose scalar
  int vis_dim = 0;     // expected visual feature dimension

  std::array<Mat, 6> embed_tables;  // bins x hidden_dim; ori x/y/z, size x/y/z
  FfnBlock ffn_node;         // hidden_dim x (vis_dim + hidden_dim)
  FfnBlock ffn_edge;         // hidden_dim x 6
  FfnBlock ffn_edge_update;  // hidden_dim x 3*hidden_dim
  std::vector<Mat> agg_W;    // per layer: hidden_dim x 4*hidden_dim
  std::vector<Vec> agg_b;    // per layer: hidden_dim
  std::vector<Vec> attn_w;   // per layer: 4*hidden_dim
};

/// Named view over every parameter tensor, in a fixed order. Used by the
/// optimizer, the finite-difference checker, and the parameter file format.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index size;
  Eigen::Index rows;
  Eigen::Index cols;
};

inline std::vector<TensorRef> tensor_refs(EncoderParams& p) {
  std::vector<TensorRef> refs;
  auto add_mat = [&refs](const std::string& name, Mat& m) {
    refs.push_back({name, m.data(), m.size(), m.rows(), m.cols()});
  };
  auto add_vec = [&refs](const std::string& name, Vec& v) {
    refs.push_back({name, v.data(), v.size(), v.size(), 1});
  };
  for (int k = 0; k < 6; ++k)
    add_mat("embed_table_" + std::to_string(k), p.embed_tables[k]);
  add_mat("ffn_node.W", p.ffn_node.W);
  add_vec("ffn_node.b", p.ffn_node.b);
  add_mat("ffn_edge.W", p.ffn_edge.W);
  add_vec("ffn_edge.b", p.ffn_edge.b);
  add_mat("ffn_edge_update.W", p.ffn_edge_update.W);
  add_vec("ffn_edge_update.b", p.ffn_edge_update.b);
  for (int l = 0; l < p.layers; ++l) {
    add_mat("layer" + std::to_string(l + 1) + ".agg_W", p.agg_W[l]);
    add_vec("layer" + std::to_string(l + 1) + ".agg_b", p.agg_b[l]);
    add_vec("layer" + std::to_string(l + 1) + ".attn_w", p.attn_w[l]);
  }
  return refs;
}

/// Same-shaped parameter block with every entry zeroed (gradient container).
inline EncoderParams zero_like(const EncoderParams& p) {
  EncoderParams z = p;
  for (TensorRef& t : tensor_refs(z))
    for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] = 0.0;
  return z;
}

/// Deterministic initialization: every weight and bias entry is uniform in
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)] of its block; embedding tables use
/// fan_in = hidden_dim. Draw order follows tensor_refs.
inline EncoderParams init_params(std::uint64_t seed, int hidden_dim, int layers,
                               int bins, int vis_dim) {
  if (hidden_dim < 2) throw ValidationError("hidden_dim must be >= 2");
  if (layers < 1) throw ValidationError("layers must be >= 1");
  if (bins < 2) throw ValidationError("bins must be >= 2");
  if (vis_dim < 1) throw ValidationError("vis_dim must be >= 1");

  EncoderParams p;
  p.hidden_dim = hidden_dim;
  p.layers = layers;
  p.bins = bins;
  p.vis_dim = vis_dim;
  for (Mat& t : p.embed_tables) t.resize(bins, hidden_dim);
  p.ffn_node.W.resize(hidden_dim, vis_dim + hidden_dim);
  p.ffn_node.b.resize(hidden_dim);
  p.ffn_edge.W.resize(hidden_dim, 6);
  p.ffn_edge.b.resize(hidden_dim);
  p.ffn_edge_update.W.resize(hidden_dim, 3 * hidden_dim);
  p.ffn_edge_update.b.resize(hidden_dim);
  p.agg_W.assign(layers, Mat(hidden_dim, 4 * hidden_dim));
  p.agg_b.assign(layers, Vec(hidden_dim));
  p.attn_w.assign(layers, Vec(4 * hidden_dim));

  RandomStream rng(seed);
  for (TensorRef& t : tensor_refs(p)) {
    Eigen::Index fan_in = t.cols == 1 ? t.rows : t.cols;
    if (t.name.rfind("embed_table_", 0) == 0) fan_in = hidden_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < t.size; ++i)
      t.data[i] = rng.uniform(-scale, scale);
  }
  return p;
}

/// Largest |entry| the init rule can produce for a given block, exposed so
/// tests can derive the bound from the rule instead of hard-coding it.
inline double init_scale_bound(const EncoderParams& p, const std::string& name) {
  EncoderParams copy = p;
  for (TensorRef& t : tensor_refs(copy))
    if (t.name == name) {
      Eigen::Index fan_in = t.cols == 1 ? t.rows : t.cols;
      if (t.name.rfind("embed_table_", 0) == 0) fan_in = p.hidden_dim;
      return 1.0 / std::sqrt(static_cast<double>(fan_in));
    }
  throw ValidationError("unknown tensor \"" + name + "\"");
}

/// Bucket index of a scalar under uniform quantization over [lo, hi).
inline int pose_bin(double value, double lo, double hi, int bins) {
  const int idx = static_cast<int>(
      std::floor((value - lo) / (hi - lo) * static_cast<double>(bins)));
  return std::clamp(idx, 0, bins - 1);
}

/// Bucket indices for the six pose scalars: ori over [-pi, pi), size over
/// (0, 1] (larger sizes clamp into the top bucket).
inline std::array<int, 6> pose_bins(const Object3D& obj, int bins) {
  std::array<int, 6> idx{};
  for (int a = 0; a < 3; ++a) idx[a] = pose_bin(obj.ori[a], -kPi, kPi, bins);
  for (int a = 0; a < 3; ++a)
    idx[3 + a] = pose_bin(obj.size[a], 0.0, 1.0, bins);
  return idx;
}

/// Per-layer node/edge representations and attention of the encoder.
/// node_reps[0] / edge_reps[0] hold the initial embeddings; edge rows are
/// indexed i*n+j and are zero wherever there is no edge.
struct GraphEncoding {
  int n = 0;
  int hidden_dim = 0;
  int layers = 0;
  std::vector<Mat> node_reps;  // layers+1 matrices, n x hidden_dim
  std::vector<Mat> edge_reps;  // layers+1 matrices, (n*n) x hidden_dim
  std::vector<Mat> attention;  // layers matrices, n x n
  Vec target_summary;          // final subject rep ++ final object rep

  const Mat& final_node_reps() const { return node_reps.back(); }
  const Mat& final_edge_reps() const { return edge_reps.back(); }

  /// Attention row of node i at a 1-based layer.
  Vec attention_row(int layer, int i) const {
    if (layer < 1 || layer > layers)
      throw ValidationError("layer must lie in [1," + std::to_string(layers) +
                            "]");
    if (i < 0 || i >= n) throw ValidationError("node index out of range");
    return attention[static_cast<std::size_t>(layer - 1)].row(i);
  }
};

/// Encodes a built graph. Layer 0 embeds nodes from visual + quantized pose
/// features and edges from the endpoint centroids; each further layer runs
/// target-conditioned attention aggregation over neighbors (messages carry
/// the neighbor rep, the edge rep, and the concatenated target summary,
/// sigma = tanh) and refreshes edge reps from the previous layer's endpoint
/// reps. Isolated nodes keep their layer-0 representation.
inline GraphEncoding encode_graph(const SpatialSceneGraph& g,
                                  const Scene& scene, const EncoderParams& p) {
  if (g.n != scene.size())
    throw ValidationError("graph/scene node count mismatch");
  if (p.vis_dim != scene.vis_dim())
    throw ValidationError("params expect vis_dim=" + std::to_string(p.vis_dim) +
                          ", scene has " + std::to_string(scene.vis_dim()));
  const int n = g.n;
  const int dh = p.hidden_dim;
  const int o1 = g.targets[0], o2 = g.targets[1];

  GraphEncoding enc;
  enc.n = n;
  enc.hidden_dim = dh;
  enc.layers = p.layers;

  // Layer 0.
  Mat v0(n, dh);
  for (int i = 0; i < n; ++i) {
    const Object3D& obj = scene.objects[i];
    Vec pose = Vec::Zero(dh);
    const auto bins = pose_bins(obj, p.bins);
    for (int k = 0; k < 6; ++k)
      pose += p.embed_tables[static_cast<std::size_t>(k)].row(bins[k]);
    Vec x(p.vis_dim + dh);
    x << obj.vis, pose;
    v0.row(i) = (p.ffn_node.W * x + p.ffn_node.b).array().tanh();
  }
  Mat e0 = Mat::Zero(static_cast<Eigen::Index>(n) * n, dh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (g.edge(i, j)) {
        Vec x(6);
        x << scene.objects[i].loc, scene.objects[j].loc;
        e0.row(static_cast<Eigen::Index>(i) * n + j) =
            (p.ffn_edge.W * x + p.ffn_edge.b).array().tanh();
      }
  enc.node_reps.push_back(std::move(v0));
  enc.edge_reps.push_back(std::move(e0));

  for (int l = 0; l < p.layers; ++l) {
    const Mat& pv = enc.node_reps.back();
    const Mat& pe = enc.edge_reps.back();
    Vec t_sum(2 * dh);
    t_sum << pv.row(o1).transpose(), pv.row(o2).transpose();

    Mat att = Mat::Zero(n, n);
    Mat nv(n, dh);
    for (int i = 0; i < n; ++i) {
      std::vector<int> nb;
      for (int j = 0; j < n; ++j)
        if (g.edge(i, j)) nb.push_back(j);
      if (nb.empty()) {
        nv.row(i) = pv.row(i);  // isolated: carry the layer-0 value through
        continue;
      }
      std::vector<Vec> msgs(nb.size());
      Vec logits(static_cast<Eigen::Index>(nb.size()));
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const int j = nb[k];
        Vec c(4 * dh);
        c << pv.row(j).transpose(),
            pe.row(static_cast<Eigen::Index>(i) * n + j).transpose(), t_sum;
        // the target-summary block adds the same constant to every logit of
        // the row and cancels in the softmax; it is dropped here so the
        // invariance is exact in floating point
        logits[static_cast<Eigen::Index>(k)] =
            p.attn_w[l].head(2 * dh).dot(c.head(2 * dh));
        msgs[k] = p.agg_W[l] * c + p.agg_b[l];
      }
      const double mx = logits.maxCoeff();
      Vec w = (logits.array() - mx).exp();
      w /= w.sum();
      Vec h = Vec::Zero(dh);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        att(i, nb[k]) = w[static_cast<Eigen::Index>(k)];
        h += w[static_cast<Eigen::Index>(k)] * msgs[k];
      }
      nv.row(i) = h.array().tanh();
    }

    Mat ne = Mat::Zero(static_cast<Eigen::Index>(n) * n, dh);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g.edge(i, j)) {
          Vec x(3 * dh);
          x << pv.row(i).transpose(),
              pe.row(static_cast<Eigen::Index>(i) * n + j).transpose(),
              pv.row(j).transpose();
          ne.row(static_cast<Eigen::Index>(i) * n + j) =
              (p.ffn_edge_update.W * x + p.ffn_edge_update.b).array().tanh();
        }

    enc.attention.push_back(std::move(att));
    enc.node_reps.push_back(std::move(nv));
    enc.edge_reps.push_back(std::move(ne));
  }

  enc.target_summary.resize(2 * dh);
  enc.target_summary << enc.node_reps.back().row(o1).transpose(),
      enc.node_reps.back().row(o2).transpose();
  return enc;
}

}  // namespace ssg3d
