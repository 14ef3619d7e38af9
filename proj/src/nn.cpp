#include "c2s/nn.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace c2s {

const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

AdamState::AdamState(const std::vector<Matrix*>& params) {
  for (const Matrix* p : params) {
    first_.push_back(Matrix::Zero(p->rows(), p->cols()));
    second_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void AdamState::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                     double lr, const AdamSettings& s) {
  if (first_.size() != params.size()) *this = AdamState(params);
  ++steps_;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_[i] = s.beta1 * first_[i] + (1.0 - s.beta1) * grads[i];
    second_[i] = s.beta2 * second_[i] + (1.0 - s.beta2) * grads[i].cwiseProduct(grads[i]);
    if (lr == 0.0) continue;
    const Matrix m_hat = first_[i] / c1;
    const Matrix v_hat = second_[i] / c2;
    *params[i] -= lr * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + s.epsilon).matrix());
  }
}

namespace {

Matrix activate(const Matrix& z, Activation a) {
  if (a == Activation::Tanh) return z.array().tanh().matrix();
  return z.cwiseMax(0.0);
}

// Derivative expressed through the activation output h (tanh) or the
// pre-activation z (relu).
Matrix activation_grad(const Matrix& z, const Matrix& h, Activation a) {
  if (a == Activation::Tanh) return (1.0 - h.array().square()).matrix();
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

DenseNet::DenseNet(std::vector<int> layer_sizes, Activation hidden, Rng& rng)
    : DenseNet(zeros(std::move(layer_sizes), hidden)) {
  for (auto& w : weights_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
  }
}

DenseNet DenseNet::zeros(std::vector<int> layer_sizes, Activation hidden) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("a net needs at least two layer sizes");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  DenseNet net;
  net.sizes_ = std::move(layer_sizes);
  net.hidden_ = hidden;
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    net.weights_.push_back(Matrix::Zero(net.sizes_[l + 1], net.sizes_[l]));
    net.biases_.push_back(Matrix::Zero(net.sizes_[l + 1], 1));
  }
  net.adam_ = AdamState(net.parameters());
  return net;
}

std::size_t DenseNet::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

void DenseNet::check_input(Eigen::Index rows) const {
  if (rows != sizes_.front())
    throw std::invalid_argument("input has " + std::to_string(rows) + " features, net expects " +
                                std::to_string(sizes_.front()));
}

Vector DenseNet::forward(const Vector& input) const {
  check_input(input.size());
  Vector h = input;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Vector z = weights_[l] * h + biases_[l].col(0);
    h = (l + 1 == weights_.size()) ? z : Vector(activate(z, hidden_));
  }
  return h;
}

Matrix DenseNet::forward_batch(const Matrix& inputs) const {
  check_input(inputs.rows());
  Matrix h = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = weights_[l] * h;
    z.colwise() += biases_[l].col(0);
    h = (l + 1 == weights_.size()) ? z : activate(z, hidden_);
  }
  return h;
}

std::vector<Vector> DenseNet::hidden_activations(const Vector& input) const {
  check_input(input.size());
  std::vector<Vector> out;
  Vector h = input;
  for (std::size_t l = 0; l + 1 < weights_.size(); ++l) {
    h = activate(weights_[l] * h + biases_[l].col(0), hidden_);
    out.push_back(h);
  }
  return out;
}

double DenseNet::loss(const Matrix& inputs, const Matrix& targets) const {
  const Matrix out = forward_batch(inputs);
  return (out - targets).squaredNorm() / static_cast<double>(out.size());
}

double DenseNet::loss_and_gradients(const Matrix& inputs, const Matrix& targets,
                                    std::vector<Matrix>& grads) const {
  check_input(inputs.rows());
  if (targets.rows() != sizes_.back() || targets.cols() != inputs.cols())
    throw std::invalid_argument("target shape does not match net output");
  if (inputs.cols() == 0) throw std::invalid_argument("empty batch");

  const std::size_t L = weights_.size();
  std::vector<Matrix> pre(L);
  std::vector<Matrix> act(L + 1);
  act[0] = inputs;
  for (std::size_t l = 0; l < L; ++l) {
    pre[l] = weights_[l] * act[l];
    pre[l].colwise() += biases_[l].col(0);
    act[l + 1] = (l + 1 == L) ? pre[l] : activate(pre[l], hidden_);
  }
  const Matrix diff = act[L] - targets;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;

  grads.assign(2 * L, Matrix());
  Matrix delta = (2.0 / n) * diff;
  for (std::size_t l = L; l-- > 0;) {
    grads[2 * l] = delta * act[l].transpose();
    grads[2 * l + 1] = delta.rowwise().sum();
    if (l > 0) {
      delta = (weights_[l].transpose() * delta)
                  .cwiseProduct(activation_grad(pre[l - 1], act[l], hidden_));
    }
  }
  return loss;
}

double DenseNet::train_batch(const Matrix& inputs, const Matrix& targets, double lr) {
  std::vector<Matrix> grads;
  const double loss = loss_and_gradients(inputs, targets, grads);
  adam_.step(parameters(), grads, lr);
  return loss;
}

std::vector<Matrix*> DenseNet::parameters() {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Matrix*> DenseNet::parameters() const {
  std::vector<const Matrix*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  return a.sizes_ == b.sizes_ && a.hidden_ == b.hidden_ && a.weights_ == b.weights_ &&
         a.biases_ == b.biases_;
}

void DenseNet::save(std::ostream& os) const {
  TensorFile f;
  f.kind = "densenet";
  std::string sizes;
  for (int s : sizes_) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
  f.meta["layers"] = sizes;
  f.meta["activation"] = to_string(hidden_);
  for (const Matrix* p : parameters()) f.tensors.push_back(*p);
  write_tensors(os, f);
}

DenseNet DenseNet::load(std::istream& is) {
  TensorFile f = read_tensors(is);
  if (f.kind != "densenet") throw std::runtime_error("checkpoint is not a densenet");
  std::vector<int> sizes;
  std::stringstream ss(f.meta.at("layers"));
  for (std::string tok; std::getline(ss, tok, ',');) sizes.push_back(std::stoi(tok));
  DenseNet net = zeros(sizes, parse_activation(f.meta.at("activation")));
  auto params = net.parameters();
  if (params.size() != f.tensors.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != f.tensors[i].rows() || params[i]->cols() != f.tensors[i].cols())
      throw std::runtime_error("checkpoint tensor shape mismatch");
    *params[i] = f.tensors[i];
  }
  return net;
}

void DenseNet::save_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save(os);
}

DenseNet DenseNet::load_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load(is);
}

double gradient_check(const DenseNet& net, const Vector& input, const Vector& target, double step,
                      double floor) {
  const Matrix x = input;
  const Matrix y = target;
  std::vector<Matrix> grads;
  net.loss_and_gradients(x, y, grads);

  DenseNet probe = net;
  auto params = probe.parameters();
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& m = *params[p];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = probe.loss(x, y);
      m.data()[i] = saved - step;
      const double down = probe.loss(x, y);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = grads[p].data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

void write_tensors(std::ostream& os, const TensorFile& file) {
  os << "c2s-tensors 1 " << file.kind << '\n';
  for (const auto& [k, v] : file.meta) os << "meta " << k << ' ' << v << '\n';
  os << "count " << file.tensors.size() << '\n';
  os << std::hexfloat;
  for (const Matrix& t : file.tensors) {
    os << "tensor " << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) os << (c ? " " : "") << t(r, c);
      os << '\n';
    }
  }
  os << std::defaultfloat;
}

namespace {

// istream >> double does not parse hexfloat on libstdc++; strtod does.
double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw std::runtime_error("bad number '" + tok + "'");
  return v;
}

}  // namespace

TensorFile read_tensors(std::istream& is) {
  TensorFile f;
  std::string magic;
  int version = 0;
  is >> magic >> version >> f.kind;
  if (magic != "c2s-tensors") throw std::runtime_error("not a c2s tensor file");
  if (version != 1) throw std::runtime_error("unsupported tensor file version");
  std::string word;
  std::size_t count = 0;
  while (is >> word) {
    if (word == "meta") {
      std::string k, v;
      is >> k >> v;
      f.meta[k] = v;
    } else if (word == "count") {
      is >> count;
      break;
    } else {
      throw std::runtime_error("unexpected token '" + word + "' in tensor header");
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Index rows = 0, cols = 0;
    is >> word >> rows >> cols;
    if (word != "tensor" || !is) throw std::runtime_error("malformed tensor header");
    Matrix t(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string tok;
        is >> tok;
        t(r, c) = parse_double(tok);
      }
    f.tensors.push_back(std::move(t));
  }
  if (!is && !is.eof()) throw std::runtime_error("truncated tensor file");
  return f;
}

}  // namespace c2s
