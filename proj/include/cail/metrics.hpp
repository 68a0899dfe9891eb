#pragma once

// Binary detection metrics over real-valued scores: ROC AUC (Mann-Whitney
// with midpoint tie credit), average precision with tie-grouped thresholds,
// and the best achievable F1 over observed-score thresholds. All three are
// rank statistics computed in O(n log n) via one sort, with integer count
// arithmetic so results match a brute-force recount exactly.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cail {

namespace detail {

inline void check_scores_labels(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw std::invalid_argument("metrics: scores/labels size mismatch");
  for (double s : scores)
    if (!std::isfinite(s))
      throw std::invalid_argument("metrics: non-finite score");
}

inline std::vector<std::size_t> order_descending(
    const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return idx;
}

inline std::int64_t count_positives(const std::vector<int>& labels) {
  std::int64_t npos = 0;
  for (int y : labels) npos += (y == 1);
  return npos;
}

}  // namespace detail

// Probability that a random positive outscores a random negative, ties worth
// half. Computed from midranks; equals the O(n^2) pair count bit for bit.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  detail::check_scores_labels(scores, labels);
  const std::int64_t npos = detail::count_positives(labels);
  const std::int64_t nneg = static_cast<std::int64_t>(labels.size()) - npos;
  if (npos == 0 || nneg == 0)
    throw std::invalid_argument("roc_auc: both classes required");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  const std::size_t n = idx.size();
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    // Average 1-based rank of the tie group [i, j): half-integer, exact.
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  const double wins_plus_half_ties =
      pos_rank_sum -
      static_cast<double>(npos) * static_cast<double>(npos + 1) / 2.0;
  return wins_plus_half_ties /
         (static_cast<double>(npos) * static_cast<double>(nneg));
}

// Step-interpolated area under the precision-recall curve; equal scores are
// grouped at one threshold.
inline double average_precision(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  detail::check_scores_labels(scores, labels);
  const std::int64_t npos = detail::count_positives(labels);
  if (npos == 0)
    throw std::invalid_argument("average_precision: no positive labels");

  const std::vector<std::size_t> idx = detail::order_descending(scores);
  double ap = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tp_prev = 0;
  std::size_t i = 0;
  const std::size_t n = idx.size();
  while (i < n) {
    std::size_t j = i;
    for (; j < n && scores[idx[j]] == scores[idx[i]]; ++j) {
      if (labels[idx[j]] == 1)
        ++tp;
      else
        ++fp;
    }
    if (tp > tp_prev) {
      const double precision =
          static_cast<double>(tp) / static_cast<double>(tp + fp);
      ap += (static_cast<double>(tp - tp_prev) / static_cast<double>(npos)) *
            precision;
    }
    tp_prev = tp;
    i = j;
  }
  return ap;
}

struct BestF1 {
  double f1 = 0.0;
  double threshold = 0.0;
};

// Maximizes F1 = 2tp / (2tp + fp + fn) over thresholds at observed score
// values (predict positive iff score >= threshold); ties resolve to the
// lowest maximizing threshold.
inline BestF1 best_f1(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  detail::check_scores_labels(scores, labels);
  const std::int64_t npos = detail::count_positives(labels);
  if (npos == 0) throw std::invalid_argument("best_f1: no positive labels");

  const std::vector<std::size_t> idx = detail::order_descending(scores);
  const std::size_t n = idx.size();
  // Candidate thresholds descending with cumulative counts, then an
  // ascending scan keeps the lowest threshold on F1 ties.
  std::vector<double> thresholds;
  std::vector<std::int64_t> tps, fps;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    for (; j < n && scores[idx[j]] == scores[idx[i]]; ++j) {
      if (labels[idx[j]] == 1)
        ++tp;
      else
        ++fp;
    }
    thresholds.push_back(scores[idx[i]]);
    tps.push_back(tp);
    fps.push_back(fp);
    i = j;
  }
  BestF1 best;
  best.f1 = -1.0;
  for (std::size_t t = thresholds.size(); t-- > 0;) {
    const std::int64_t fn = npos - tps[t];
    const double f1 = (2.0 * static_cast<double>(tps[t])) /
                      static_cast<double>(2 * tps[t] + fps[t] + fn);
    if (f1 > best.f1) {
      best.f1 = f1;
      best.threshold = thresholds[t];
    }
  }
  return best;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC polyline from (0,0) to (1,1), one vertex per distinct threshold.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
  detail::check_scores_labels(scores, labels);
  const std::int64_t npos = detail::count_positives(labels);
  const std::int64_t nneg = static_cast<std::int64_t>(labels.size()) - npos;
  if (npos == 0 || nneg == 0)
    throw std::invalid_argument("roc_curve: both classes required");

  const std::vector<std::size_t> idx = detail::order_descending(scores);
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::size_t i = 0;
  const std::size_t n = idx.size();
  while (i < n) {
    std::size_t j = i;
    for (; j < n && scores[idx[j]] == scores[idx[i]]; ++j) {
      if (labels[idx[j]] == 1)
        ++tp;
      else
        ++fp;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(nneg),
                   static_cast<double>(tp) / static_cast<double>(npos)});
    i = j;
  }
  return pts;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// Precision-recall points, one per distinct threshold, descending.
inline std::vector<PrPoint> pr_curve(const std::vector<double>& scores,
                                     const std::vector<int>& labels) {
  detail::check_scores_labels(scores, labels);
  const std::int64_t npos = detail::count_positives(labels);
  if (npos == 0) throw std::invalid_argument("pr_curve: no positive labels");

  const std::vector<std::size_t> idx = detail::order_descending(scores);
  std::vector<PrPoint> pts;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::size_t i = 0;
  const std::size_t n = idx.size();
  while (i < n) {
    std::size_t j = i;
    for (; j < n && scores[idx[j]] == scores[idx[i]]; ++j) {
      if (labels[idx[j]] == 1)
        ++tp;
      else
        ++fp;
    }
    pts.push_back({static_cast<double>(tp) / static_cast<double>(npos),
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
    i = j;
  }
  return pts;
}

}  // namespace cail
