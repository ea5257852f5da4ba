#pragma once

// Shared fixtures and independent reference implementations for the unit
// suite. Nothing here calls into the library code it is used to check.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sys/wait.h>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "twinpurify/expr_data.hpp"

namespace tp_test {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("twinpurify_unit_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed, double sd = 1.0) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(g);
  return m;
}

/// Tumor-only matrix with generated ids.
inline twinpurify::ExpressionMatrix make_matrix(const Eigen::MatrixXd& values) {
  twinpurify::ExpressionMatrix m;
  m.values = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) m.genes.push_back("G" + std::to_string(j));
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    m.samples.push_back(twinpurify::SampleMeta{.sample_id = "S" + std::to_string(i)});
  return m;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvalues in
/// descending order with matching eigenvector columns.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  Eigen::VectorXd vals(n);
  Eigen::MatrixXd vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    vals[i] = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    vecs.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return {vals, vecs};
}

/// PCA scores from the covariance eigendecomposition, signs aligned to `ref`.
inline Eigen::MatrixXd oracle_pca_scores(const Eigen::MatrixXd& x, Eigen::Index d, const Eigen::MatrixXd& ref) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  const auto [vals, vecs] = jacobi_eigen(cov);
  Eigen::MatrixXd scores = c * vecs.leftCols(d);
  for (Eigen::Index k = 0; k < d; ++k)
    if (scores.col(k).dot(ref.col(k)) < 0.0) scores.col(k) *= -1.0;
  return scores;
}

struct Rec {
  double time;
  bool event;
};

/// Harrell's C by explicit enumeration of unordered pairs.
inline double brute_c_index(const std::vector<double>& s, const std::vector<Rec>& r) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      // Orient the pair so `a` has the earlier time (or is the event at a tie).
      std::size_t a = i, b = j;
      if (r[j].time < r[i].time || (r[j].time == r[i].time && r[j].event && !r[i].event)) std::swap(a, b);
      const bool usable = r[a].event && (r[a].time < r[b].time || !r[b].event);
      if (!usable) continue;
      den += 1.0;
      if (s[a] > s[b]) num += 1.0;
      else if (s[a] == s[b]) num += 0.5;
    }
  return num / den;
}

#ifdef TWINPURIFY_CLI
/// Runs the command-line tool with `args`; stdout and stderr go to `log`.
/// Returns the exit status.
inline int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + TWINPURIFY_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
#endif

}  // namespace tp_test
