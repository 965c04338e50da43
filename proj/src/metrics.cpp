#include "userbert/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace userbert {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ValidationError("roc_auc: scores/labels size mismatch or empty");
  size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // rank-sum with average ranks over tie groups
  double pos_rank_sum = 0.0;
  int64_t pos = 0, neg = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        pos_rank_sum += avg_rank;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0)
    throw ValidationError("roc_auc: needs both classes present");
  return (pos_rank_sum - 0.5 * double(pos) * double(pos + 1)) / (double(pos) * double(neg));
}

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
  if (scores.size() != labels.size() || scores.empty())
    throw ValidationError("accuracy: scores/labels size mismatch or empty");
  size_t correct = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    if ((scores[i] > threshold ? 1 : 0) == labels[i]) ++correct;
  return double(correct) / double(scores.size());
}

double map_at_k(const std::vector<RankingResult>& results, int k, int* excluded) {
  double ap_sum = 0.0;
  int counted = 0, skipped = 0;
  for (const auto& r : results) {
    if (r.truth.empty()) {
      ++skipped;
      continue;
    }
    std::unordered_set<int> truth(r.truth.begin(), r.truth.end());
    int limit = std::min<int>(k, int(r.ranked_ids.size()));
    int hits = 0;
    double ap = 0.0;
    for (int rank = 1; rank <= limit; ++rank) {
      if (truth.count(r.ranked_ids[size_t(rank - 1)])) {
        ++hits;
        ap += double(hits) / double(rank);
      }
    }
    ap /= double(std::min<int>(k, int(truth.size())));
    ap_sum += ap;
    ++counted;
  }
  if (excluded) *excluded = skipped;
  if (counted == 0) throw ValidationError("map_at_k: no user has a non-empty truth set");
  return ap_sum / double(counted);
}

std::vector<int> rank_by_score(const std::vector<double>& scores) {
  std::vector<int> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[size_t(a)] != scores[size_t(b)]) return scores[size_t(a)] > scores[size_t(b)];
    return a < b;
  });
  return ids;
}

std::vector<int> popularity_ranking(const std::vector<std::vector<int>>& train_purchases,
                                    int num_ids) {
  if (train_purchases.empty())
    throw ValidationError("popularity_ranking: empty training purchases");
  std::vector<double> counts(size_t(num_ids), 0.0);
  for (const auto& user : train_purchases)
    for (int id : user)
      if (id >= 0 && id < num_ids) counts[size_t(id)] += 1.0;
  return rank_by_score(counts);
}

void MetricReport::add(const std::string& task, const std::string& metric, double value,
                       uint64_t seed) {
  entries.push_back({task, metric, value, seed});
}

void MetricReport::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& e : entries)
    out << e.task << '\t' << e.metric << '\t' << e.value << '\t' << e.seed << '\n';
  if (!out) throw IoError("write failure: " + path);
}

std::string MetricReport::table() const {
  std::ostringstream out;
  out << "task                      metric                    value       seed\n";
  for (const auto& e : entries) {
    out << e.task;
    for (size_t i = e.task.size(); i < 26; ++i) out << ' ';
    out << e.metric;
    for (size_t i = e.metric.size(); i < 26; ++i) out << ' ';
    out << e.value << "\t" << e.seed << "\n";
  }
  return out.str();
}

}  // namespace userbert
