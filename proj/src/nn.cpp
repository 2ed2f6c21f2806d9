#include "gridres/nn.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "gridres/error.hpp"

namespace gridres {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw DomainError("network needs at least input and output sizes");
  size_t n = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw DomainError("layer sizes must be positive");
    offsets_.push_back(n);
    n += static_cast<size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(n, 0.0);
}

std::vector<double> Mlp::forward(const std::vector<double>& x, Tape* tape) const {
  if (static_cast<int>(x.size()) != input_dim()) throw DomainError("input width mismatch");
  if (tape) {
    tape->act.clear();
    tape->act.push_back(x);
  }
  std::vector<double> a = x;
  const size_t layers = sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + static_cast<size_t>(in) * out;
    std::vector<double> z(out);
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = l + 1 < layers ? std::tanh(s) : s;
      if (!std::isfinite(z[o])) throw NumericError("non-finite activation");
    }
    a = std::move(z);
    if (tape) tape->act.push_back(a);
  }
  return a;
}

void Mlp::backward(const Tape& tape, const std::vector<double>& grad_out,
                   std::vector<double>& grad) const {
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
  std::vector<double> delta = grad_out;
  const size_t layers = sizes_.size() - 1;
  for (size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    // through tanh for hidden layers
    if (l + 1 < layers) {
      const auto& y = tape.act[l + 1];
      for (int o = 0; o < out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    }
    const auto& a = tape.act[l];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + static_cast<size_t>(in) * out;
    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* grow = gw + static_cast<size_t>(o) * in;
      const double* row = w + static_cast<size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        grow[i] += d * a[i];
        prev[i] += d * row[i];
      }
    }
    delta = std::move(prev);
  }
}

void Mlp::init_orthogonal(std::mt19937_64& rng, double hidden_gain, double output_gain) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const size_t layers = sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double gain = l + 1 < layers ? hidden_gain : output_gain;
    const int rows = std::max(in, out), cols = std::min(in, out);
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    // sign fix so the result is uniformly distributed
    Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (int j = 0; j < cols; ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    double* w = params_.data() + offsets_[l];
    for (int o = 0; o < out; ++o) {
      for (int i = 0; i < in; ++i) {
        double v = out >= in ? q(o, i) : q(i, o);
        w[static_cast<size_t>(o) * in + i] = gain * v;
      }
    }
    double* b = w + static_cast<size_t>(in) * out;
    for (int o = 0; o < out; ++o) b[o] = 0.0;
  }
}

Adam::Adam(size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw DomainError("optimizer size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace gridres
