#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "c2s/env.hpp"
#include "c2s/nn.hpp"

namespace c2s {

// Customer graph for one wave. Node k corresponds to order_ids[k].
struct GraphSnapshot {
  std::vector<OrderId> order_ids;
  Matrix features;   // n x 2, normalized (x, y)
  Matrix adjacency;  // n x n, symmetric 0/1, zero diagonal

  int size() const { return static_cast<int>(features.rows()); }
  int edge_count() const;
};

// Edge (i, j) iff d(i, j) <= min(dnw_i, dnw_j), where dnw_k is the distance
// from customer k to its nearest warehouse.
GraphSnapshot build_graph(std::span<const Point> customers, std::span<const Warehouse> warehouses,
                          std::vector<OrderId> ids = {});
GraphSnapshot build_graph(const World& world, std::span<const OrderId> ids);

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Matrix normalized_adjacency(const Matrix& adjacency);

// 1 - |e1 - e2| / max_dist; identically 1 when max_dist is not positive.
double decode_similarity(const Vector& e1, const Vector& e2, double max_dist);

// Largest pairwise row distance.
double max_pairwise_distance(const Matrix& embeddings);

struct GaeSettings {
  int hidden = 16;
  double learning_rate = 0.01;
  double clamp = 1e-6;
};

// Two graph-convolution layers: relu hidden, linear 2-d output, no biases.
class GaeModel {
 public:
  GaeModel() = default;
  GaeModel(Rng& rng, GaeSettings settings = {});
  static GaeModel zeros(GaeSettings settings = {});

  const GaeSettings& settings() const { return settings_; }
  Matrix& w1() { return w1_; }
  Matrix& w2() { return w2_; }
  const Matrix& w1() const { return w1_; }
  const Matrix& w2() const { return w2_; }

  // n x 2 embeddings, one row per node.
  Matrix encode(const GraphSnapshot& graph) const;
  Matrix encode(const Matrix& features, const Matrix& norm_adj) const;

  // Binary cross-entropy of similarity against the edge label over the given
  // node pairs. Fills grads = {dW1, dW2} when non-null.
  double pair_loss(const Matrix& features, const Matrix& norm_adj,
                   std::span<const std::pair<int, int>> pairs, std::span<const double> labels,
                   std::vector<Matrix>* grads) const;

  // All edges plus an equal number of uniformly drawn non-edges.
  static void sample_pairs(const GraphSnapshot& graph, Rng& rng,
                           std::vector<std::pair<int, int>>& pairs, std::vector<double>& labels);

  // One Adam step on one graph; returns the pre-step loss, or a negative
  // value when the graph has no edges to learn from.
  double train_step(const GraphSnapshot& graph, Rng& rng);

  void save(std::ostream& os) const;
  static GaeModel load(std::istream& is);
  void save_file(const std::string& path) const;
  static GaeModel load_file(const std::string& path);

 private:
  GaeSettings settings_;
  Matrix w1_;  // 2 x hidden
  Matrix w2_;  // hidden x 2
  AdamState adam_;
};

// Mean loss per epoch over the buffer.
std::vector<double> train_gae(GaeModel& model, std::span<const GraphSnapshot> buffer, int epochs,
                              Rng& rng);

// Area under the ROC curve of similarity scores against ground-truth
// adjacency over every node pair of every graph (ties count half).
double edge_auc(const GaeModel& model, std::span<const GraphSnapshot> graphs);

// Max relative error of the analytic GAE gradient vs central differences on
// a fixed pair set.
double gae_gradient_check(const GaeModel& model, const GraphSnapshot& graph,
                          std::span<const std::pair<int, int>> pairs,
                          std::span<const double> labels, double step = 1e-5,
                          double floor = 1e-6);

}  // namespace c2s
