#pragma once

// Independent reference implementations the unit and acceptance suites
// check the library against. Everything here recomputes from first
// principles (naive counting, explicit pair enumeration, finite
// differences) and must stay decoupled from the library code paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fame::testing {

struct OracleEer {
  double eer_percent;
  double threshold;
};

// Brute-force EER: sweep every threshold in the merged score set plus a
// sentinel, count FAR/FRR directly, then intersect the two piecewise
// linear curves where FAR - FRR changes sign.
inline OracleEer oracle_eer(const std::vector<double>& match_scores,
                            const std::vector<double>& nonmatch_scores) {
  if (match_scores.empty() || nonmatch_scores.empty())
    throw std::invalid_argument("oracle needs both label classes");

  std::vector<double> thresholds;
  thresholds.insert(thresholds.end(), match_scores.begin(),
                    match_scores.end());
  thresholds.insert(thresholds.end(), nonmatch_scores.begin(),
                    nonmatch_scores.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double sentinel = thresholds.back() +
                    std::max(1.0, std::abs(thresholds.back()) * 1e-6);
  if (sentinel <= thresholds.back())
    sentinel = std::nextafter(thresholds.back(),
                              std::numeric_limits<double>::infinity());
  thresholds.push_back(sentinel);

  auto far_at = [&](double t) {
    std::size_t accepted = 0;
    for (double s : nonmatch_scores)
      if (s >= t) ++accepted;
    return static_cast<double>(accepted) /
           static_cast<double>(nonmatch_scores.size());
  };
  auto frr_at = [&](double t) {
    std::size_t rejected = 0;
    for (double s : match_scores)
      if (s < t) ++rejected;
    return static_cast<double>(rejected) /
           static_cast<double>(match_scores.size());
  };

  double prev_t = thresholds.front();
  double prev_far = far_at(prev_t);
  double prev_frr = frr_at(prev_t);
  if (prev_far == prev_frr) return {100.0 * prev_far, prev_t};
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    double t = thresholds[i];
    double far = far_at(t);
    double frr = frr_at(t);
    if (far == frr) return {100.0 * far, t};
    double d_prev = prev_far - prev_frr;
    double d_cur = far - frr;
    if (d_prev > 0.0 && d_cur < 0.0) {
      double alpha = d_prev / (d_prev - d_cur);
      double eer = prev_far + alpha * (far - prev_far);
      return {100.0 * eer, prev_t + alpha * (t - prev_t)};
    }
    prev_t = t;
    prev_far = far;
    prev_frr = frr;
  }
  throw std::logic_error("oracle found no FAR/FRR crossing");
}

// Plain dot-product matrix-vector product.
inline Eigen::VectorXd oracle_affine(const Eigen::MatrixXd& w,
                                     const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& x) {
  Eigen::VectorXd out(w.rows());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = b[r];
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

inline double oracle_cosine(const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Softmax cross-entropy mean over rows, computed against one-hot labels
// with long-double accumulation.
inline double oracle_softmax_ce(const Eigen::MatrixXd& logits,
                                const std::vector<int>& labels) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    long double m = logits(i, 0);
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      m = std::max<long double>(m, logits(i, c));
    long double sum = 0.0L;
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      sum += std::exp(static_cast<long double>(logits(i, c)) - m);
    total += (m + std::log(sum)) -
             static_cast<long double>(logits(i, labels[i]));
  }
  return static_cast<double>(total / logits.rows());
}

// Orthogonality loss by explicit O(N^2) pair enumeration.
inline double oracle_oc(const Eigen::MatrixXd& fused,
                        const std::vector<int>& labels) {
  double same_sum = 0.0, diff_sum = 0.0;
  std::size_t n_same = 0, n_diff = 0;
  for (Eigen::Index i = 0; i < fused.rows(); ++i)
    for (Eigen::Index j = i + 1; j < fused.rows(); ++j) {
      double c = oracle_cosine(fused.row(i).transpose(),
                               fused.row(j).transpose());
      if (labels[i] == labels[j]) {
        same_sum += c;
        ++n_same;
      } else {
        diff_sum += c;
        ++n_diff;
      }
    }
  if (n_diff == 0) throw std::invalid_argument("need two classes");
  double same_mean = n_same > 0 ? same_sum / n_same : 1.0;
  double diff_mean = diff_sum / n_diff;
  return (1.0 - same_mean) + std::abs(diff_mean);
}

}  // namespace fame::testing
