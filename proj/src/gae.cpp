#include "c2s/gae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace c2s {

namespace {

// Keeps the pair distance differentiable when two embeddings coincide.
constexpr double kDistanceSmoothing = 1e-12;

}  // namespace

int GraphSnapshot::edge_count() const {
  return static_cast<int>(std::lround(adjacency.sum() / 2.0));
}

GraphSnapshot build_graph(std::span<const Point> customers, std::span<const Warehouse> warehouses,
                          std::vector<OrderId> ids) {
  const auto n = static_cast<Eigen::Index>(customers.size());
  GraphSnapshot g;
  if (ids.empty()) {
    ids.resize(customers.size());
    std::iota(ids.begin(), ids.end(), 0);
  }
  g.order_ids = std::move(ids);
  g.features.resize(n, 2);
  g.adjacency = Matrix::Zero(n, n);
  std::vector<double> nearest(customers.size(), std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& p = customers[static_cast<std::size_t>(i)];
    g.features(i, 0) = p.x;
    g.features(i, 1) = p.y;
    for (const Warehouse& w : warehouses)
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], distance(p, w.location));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      const double radius = std::min(nearest[ui], nearest[uj]);
      if (distance(customers[ui], customers[uj]) <= radius) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  }
  return g;
}

GraphSnapshot build_graph(const World& world, std::span<const OrderId> ids) {
  std::vector<Point> pts;
  pts.reserve(ids.size());
  for (OrderId id : ids) pts.push_back(world.order(id).location);
  return build_graph(pts, world.warehouses(), std::vector<OrderId>(ids.begin(), ids.end()));
}

Matrix normalized_adjacency(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  Matrix a = adjacency + Matrix::Identity(n, n);
  const Vector inv_sqrt = a.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

double decode_similarity(const Vector& e1, const Vector& e2, double max_dist) {
  if (!(max_dist > 0.0)) return 1.0;
  return 1.0 - (e1 - e2).norm() / max_dist;
}

double max_pairwise_distance(const Matrix& embeddings) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i)
    for (Eigen::Index j = i + 1; j < embeddings.rows(); ++j)
      best = std::max(best, (embeddings.row(i) - embeddings.row(j)).norm());
  return best;
}

GaeModel::GaeModel(Rng& rng, GaeSettings settings) : GaeModel(zeros(settings)) {
  auto glorot = [&rng](Matrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
  };
  glorot(w1_);
  glorot(w2_);
}

GaeModel GaeModel::zeros(GaeSettings settings) {
  if (settings.hidden <= 0) throw std::invalid_argument("GAE hidden width must be positive");
  GaeModel m;
  m.settings_ = settings;
  m.w1_ = Matrix::Zero(2, settings.hidden);
  m.w2_ = Matrix::Zero(settings.hidden, 2);
  m.adam_ = AdamState({&m.w1_, &m.w2_});
  return m;
}

Matrix GaeModel::encode(const GraphSnapshot& graph) const {
  return encode(graph.features, normalized_adjacency(graph.adjacency));
}

Matrix GaeModel::encode(const Matrix& features, const Matrix& norm_adj) const {
  if (features.cols() != w1_.rows())
    throw std::invalid_argument("GAE expects 2 features per node");
  if (norm_adj.rows() != features.rows() || norm_adj.cols() != features.rows())
    throw std::invalid_argument("adjacency does not match node count");
  const Matrix hidden = (norm_adj * features * w1_).cwiseMax(0.0);
  return norm_adj * hidden * w2_;
}

double GaeModel::pair_loss(const Matrix& features, const Matrix& norm_adj,
                           std::span<const std::pair<int, int>> pairs,
                           std::span<const double> labels, std::vector<Matrix>* grads) const {
  const Matrix ax = norm_adj * features;
  const Matrix z1 = ax * w1_;
  const Matrix h1 = z1.cwiseMax(0.0);
  const Matrix ah = norm_adj * h1;
  const Matrix e = ah * w2_;
  const Eigen::Index n = e.rows();

  auto pair_dist = [&e](Eigen::Index i, Eigen::Index j) {
    return std::sqrt((e.row(i) - e.row(j)).squaredNorm() + kDistanceSmoothing);
  };
  double max_d = 0.0;
  Eigen::Index am = -1, bm = -1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = pair_dist(i, j);
      if (d > max_d) {
        max_d = d;
        am = i;
        bm = j;
      }
    }

  const double lo = settings_.clamp;
  const double hi = 1.0 - settings_.clamp;
  double loss = 0.0;
  Matrix de = Matrix::Zero(n, 2);
  double dmax = 0.0;  // dLoss / d max_d
  const double count = static_cast<double>(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    const double y = labels[k];
    const double d = pair_dist(i, j);
    const double s = (max_d > 0.0) ? 1.0 - d / max_d : 1.0;
    const double p = std::clamp(s, lo, hi);
    loss -= (y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) / count;
    if (grads == nullptr || s < lo || s > hi || !(max_d > 0.0)) continue;
    const double dp = (-y / p + (1.0 - y) / (1.0 - p)) / count;
    // s = 1 - d / M
    const double dd = -dp / max_d;
    dmax += dp * d / (max_d * max_d);
    const Eigen::RowVectorXd u = (e.row(i) - e.row(j)) / d;
    de.row(i) += dd * u;
    de.row(j) -= dd * u;
  }
  if (grads == nullptr) return loss;

  if (am >= 0 && dmax != 0.0) {
    const Eigen::RowVectorXd u = (e.row(am) - e.row(bm)) / max_d;
    de.row(am) += dmax * u;
    de.row(bm) -= dmax * u;
  }
  grads->assign(2, Matrix());
  (*grads)[1] = ah.transpose() * de;
  const Matrix dh1 = norm_adj.transpose() * de * w2_.transpose();
  const Matrix dz1 = dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  (*grads)[0] = ax.transpose() * dz1;
  return loss;
}

void GaeModel::sample_pairs(const GraphSnapshot& graph, Rng& rng,
                            std::vector<std::pair<int, int>>& pairs,
                            std::vector<double>& labels) {
  pairs.clear();
  labels.clear();
  std::vector<std::pair<int, int>> negatives;
  const int n = graph.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (graph.adjacency(i, j) > 0.5) {
        pairs.emplace_back(i, j);
        labels.push_back(1.0);
      } else {
        negatives.emplace_back(i, j);
      }
    }
  const std::size_t want = std::min(pairs.size(), negatives.size());
  for (std::size_t k = 0; k < want; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, negatives.size() - 1);
    std::swap(negatives[k], negatives[pick(rng)]);
    pairs.push_back(negatives[k]);
    labels.push_back(0.0);
  }
}

double GaeModel::train_step(const GraphSnapshot& graph, Rng& rng) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> labels;
  sample_pairs(graph, rng, pairs, labels);
  if (graph.edge_count() == 0 || pairs.empty()) return -1.0;
  std::vector<Matrix> grads;
  const double loss =
      pair_loss(graph.features, normalized_adjacency(graph.adjacency), pairs, labels, &grads);
  adam_.step({&w1_, &w2_}, grads, settings_.learning_rate);
  return loss;
}

void GaeModel::save(std::ostream& os) const {
  TensorFile f;
  f.kind = "gae";
  f.meta["hidden"] = std::to_string(settings_.hidden);
  f.tensors = {w1_, w2_};
  write_tensors(os, f);
}

GaeModel GaeModel::load(std::istream& is) {
  TensorFile f = read_tensors(is);
  if (f.kind != "gae" || f.tensors.size() != 2) throw std::runtime_error("checkpoint is not a GAE");
  GaeSettings s;
  s.hidden = std::stoi(f.meta.at("hidden"));
  GaeModel m = zeros(s);
  if (f.tensors[0].rows() != 2 || f.tensors[0].cols() != s.hidden ||
      f.tensors[1].rows() != s.hidden || f.tensors[1].cols() != 2)
    throw std::runtime_error("GAE checkpoint shape mismatch");
  m.w1_ = f.tensors[0];
  m.w2_ = f.tensors[1];
  return m;
}

void GaeModel::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save(os);
}

GaeModel GaeModel::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load(is);
}

std::vector<double> train_gae(GaeModel& model, std::span<const GraphSnapshot> buffer, int epochs,
                              Rng& rng) {
  if (buffer.empty()) throw std::invalid_argument("GAE training buffer is empty");
  std::vector<double> history;
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int used = 0;
    for (std::size_t idx : order) {
      const double loss = model.train_step(buffer[idx], rng);
      if (loss < 0.0) continue;
      total += loss;
      ++used;
    }
    history.push_back(used > 0 ? total / used : 0.0);
  }
  return history;
}

double edge_auc(const GaeModel& model, std::span<const GraphSnapshot> graphs) {
  std::vector<std::pair<double, int>> scored;
  for (const auto& g : graphs) {
    const Matrix e = model.encode(g);
    const double m = max_pairwise_distance(e);
    for (int i = 0; i < g.size(); ++i)
      for (int j = i + 1; j < g.size(); ++j)
        scored.emplace_back(decode_similarity(e.row(i).transpose(), e.row(j).transpose(), m),
                            g.adjacency(i, j) > 0.5 ? 1 : 0);
  }
  std::sort(scored.begin(), scored.end());
  // Mann-Whitney U with average ranks for ties.
  double positives = 0.0, rank_sum = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (scored[k].second == 1) {
        positives += 1.0;
        rank_sum += avg_rank;
      }
    i = j;
  }
  const double negatives = static_cast<double>(scored.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) return 0.5;
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

double gae_gradient_check(const GaeModel& model, const GraphSnapshot& graph,
                          std::span<const std::pair<int, int>> pairs,
                          std::span<const double> labels, double step, double floor) {
  const Matrix adj = normalized_adjacency(graph.adjacency);
  std::vector<Matrix> grads;
  model.pair_loss(graph.features, adj, pairs, labels, &grads);
  GaeModel probe = model;
  Matrix* params[2] = {&probe.w1(), &probe.w2()};
  double worst = 0.0;
  for (int p = 0; p < 2; ++p) {
    Matrix& m = *params[p];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = probe.pair_loss(graph.features, adj, pairs, labels, nullptr);
      m.data()[i] = saved - step;
      const double down = probe.pair_loss(graph.features, adj, pairs, labels, nullptr);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[static_cast<std::size_t>(p)].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace c2s
