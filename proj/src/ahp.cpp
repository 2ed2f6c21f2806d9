#include <charconv>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "gridres/error.hpp"
#include "gridres/metrics.hpp"

namespace gridres {

double random_consistency_index(int n) {
  static constexpr double kRi[] = {0.0, 0.0, 0.0, 0.58, 0.90, 1.12,
                                   1.24, 1.32, 1.41, 1.45, 1.49};
  if (n < 1 || n > 10) throw DomainError("random index tabulated for n in [1,10]");
  return kRi[n];
}

AhpWeights ahp_weights(const Eigen::MatrixXd& a, double max_cr) {
  const int n = static_cast<int>(a.rows());
  if (n < 1 || a.cols() != n) throw DomainError("pairwise matrix must be square");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!(a(i, j) > 0.0) || !std::isfinite(a(i, j))) {
        throw DomainError("pairwise entries must be positive and finite");
      }
      if (std::abs(a(i, j) * a(j, i) - 1.0) > 1e-9) {
        throw DomainError(fmt::format("entries ({},{}) and ({},{}) are not reciprocal", i, j, j, i));
      }
    }
    if (std::abs(a(i, i) - 1.0) > 1e-12) throw DomainError("pairwise diagonal must be 1");
  }

  Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
  const auto& values = solver.eigenvalues();
  int k = 0;
  for (int i = 1; i < n; ++i) {
    if (values[i].real() > values[k].real()) k = i;
  }
  Eigen::VectorXd v = solver.eigenvectors().col(k).real();
  // Perron vector has one sign; fix it and normalize
  if (v.sum() < 0.0) v = -v;
  v /= v.sum();

  AhpWeights out;
  out.w.assign(v.data(), v.data() + n);
  out.lambda_max = values[k].real();
  out.consistency_index = n > 1 ? std::max(0.0, (out.lambda_max - n) / (n - 1)) : 0.0;
  double ri = random_consistency_index(n);
  out.consistency_ratio = ri > 0.0 ? out.consistency_index / ri : 0.0;
  if (out.consistency_ratio > max_cr) {
    throw InconsistencyError(
        fmt::format("pairwise matrix inconsistent: CR = {:.4f} > {}", out.consistency_ratio, max_cr),
        out.consistency_ratio);
  }
  return out;
}

Eigen::MatrixXd parse_pairwise_matrix(std::string_view text) {
  Eigen::MatrixXd m(kNumMetrics, kNumMetrics);
  int row = 0;
  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    int col = 0;
    size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j == i) break;
      auto tok = line.substr(i, j - i);
      if (row >= kNumMetrics || col >= kNumMetrics) {
        throw DataError("pairwise matrix must be 5 x 5", line_no);
      }
      double num = 0.0, den = 1.0;
      auto slash = tok.find('/');
      auto num_tok = tok.substr(0, slash);
      auto r = std::from_chars(num_tok.data(), num_tok.data() + num_tok.size(), num);
      bool ok = r.ec == std::errc() && r.ptr == num_tok.data() + num_tok.size();
      if (ok && slash != std::string_view::npos) {
        auto den_tok = tok.substr(slash + 1);
        auto r2 = std::from_chars(den_tok.data(), den_tok.data() + den_tok.size(), den);
        ok = r2.ec == std::errc() && r2.ptr == den_tok.data() + den_tok.size();
      }
      if (!ok || !(num > 0.0) || !(den > 0.0)) {
        throw DataError(fmt::format("expected positive rational but found '{}'", tok), line_no);
      }
      m(row, col++) = num / den;
      i = j;
    }
    if (col > 0) {
      if (col != kNumMetrics) throw DataError("pairwise matrix rows need 5 entries", line_no);
      ++row;
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  if (row != kNumMetrics) throw DataError("pairwise matrix must have 5 rows");
  return m;
}

AhpWeights default_metric_weights() {
  static constexpr double kDefault[] = {0.2, 0.3, 0.15, 0.2, 0.15};
  return metric_weights_from_values(kDefault);
}

AhpWeights metric_weights_from_values(std::span<const double> w) {
  if (w.size() != kNumMetrics) throw DomainError("expected five metric weights");
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) throw DomainError("metric weights must be positive");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("metric weights must sum to one");
  AhpWeights out;
  out.w.assign(w.begin(), w.end());
  out.lambda_max = kNumMetrics;
  return out;
}

}  // namespace gridres
