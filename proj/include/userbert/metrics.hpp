#pragma once

#include <string>
#include <vector>

#include "userbert/common.hpp"

namespace userbert {

/// ROC AUC by the Mann-Whitney formulation:
/// (concordant pairs + 0.5 * tied pairs) / (P * N), computed via rank sums.
/// Throws ValidationError when only one class is present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Fraction of thresholded predictions (score > threshold -> 1) matching labels.
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = 0.5);

/// One user's ranked prediction and ground truth for mAP.
struct RankingResult {
  std::vector<int> ranked_ids;  // descending score, ties broken by ascending id
  std::vector<int> truth;       // ground-truth id set
};

/// mAP@k with AP normalizer min(k, |truth|), so a perfect short ranking
/// scores 1.0. Users with an empty truth set are excluded (counted in
/// *excluded when given).
double map_at_k(const std::vector<RankingResult>& results, int k = 10, int* excluded = nullptr);

/// Builds a descending-score ranking with stable ascending-id tiebreak.
std::vector<int> rank_by_score(const std::vector<double>& scores);

/// One global ranking of ids by descending purchase count (ascending-id
/// tiebreak), emitted identically for every user.
std::vector<int> popularity_ranking(const std::vector<std::vector<int>>& train_purchases,
                                    int num_ids);

/// Metric report line: `task<TAB>metric<TAB>value<TAB>seed`.
struct MetricReport {
  struct Entry {
    std::string task;
    std::string metric;
    double value = 0;
    uint64_t seed = 0;
  };
  std::vector<Entry> entries;

  void add(const std::string& task, const std::string& metric, double value, uint64_t seed);
  void write(const std::string& path) const;
  std::string table() const;  // human-readable
};

}  // namespace userbert
