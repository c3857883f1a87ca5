#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cranet/data.h"
#include "cranet/model.h"

namespace cranet {

enum class Task { kRating, kRanking };

const char* to_string(Task t);
Task task_from_string(const std::string& s);

// (actual, predicted) pairs.
double rmse(std::span<const std::pair<double, double>> pairs);

struct RankingList {
  std::size_t user = 0;
  std::vector<std::size_t> items;
  std::vector<double> scores;
};

// Top-K of `scores` (one per item) excluding the indices stored in
// `exclude`; ties go to the smaller item index.
RankingList rank_items(std::size_t user, std::span<const double> scores,
                       const SparseVector& exclude, std::size_t k);

// Predicted score of every item for `user`, from the trained model.
std::vector<double> score_items(const ModelParams& p, const HyperParams& h,
                                const InteractionMatrix& train, std::size_t user,
                                const std::vector<DenseVector>* dense_inputs = nullptr);

// Throws DimensionError for k == 0 or an unknown user.
RankingList recommend_topk(const ModelParams& p, const HyperParams& h,
                           const InteractionMatrix& train, std::size_t user, std::size_t k,
                           const std::vector<DenseVector>* dense_inputs = nullptr);

// `relevant` is a sorted list of item indices.
double precision_at_k(const RankingList& list, std::span<const std::size_t> relevant, std::size_t k);
double ndcg_at_k(const RankingList& list, std::span<const std::size_t> relevant, std::size_t k);

struct Predictions {
  std::vector<std::pair<double, double>> pairs;  // (actual, predicted)
  std::size_t dropped = 0;                        // no trained vector/position
};

// Predictions at held-out (user, item) positions, feeding each training
// vector through the model once. Clips to the rating range when
// h.clip_predictions is set.
Predictions predict_records(const ModelParams& p, const HyperParams& h,
                            const InteractionMatrix& train, const std::vector<RatingRecord>& records,
                            const std::vector<DenseVector>* dense_inputs = nullptr);

struct MetricReport {
  Task task = Task::kRating;
  std::optional<double> rmse;
  std::map<std::size_t, double> precision;
  std::map<std::size_t, double> ndcg;
  std::size_t scored = 0;
  std::size_t dropped = 0;
  std::size_t users_evaluated = 0;
  std::size_t dropped_cold_test = 0;
  std::uint64_t split_seed = 0;

  bool operator==(const MetricReport&) const = default;
};

MetricReport evaluate_split(const ModelParams& p, const HyperParams& h, const DatasetSplit& split,
                            Task task, const std::vector<std::size_t>& ks = {3, 5, 10},
                            const std::vector<DenseVector>* dense_inputs = nullptr);

// Single-line JSON object with stable keys: task, rmse, precision@K, ndcg@K,
// scored, dropped, users_evaluated, dropped_cold_test, split_seed.
std::string to_json_line(const MetricReport& r);
MetricReport metric_report_from_json_line(const std::string& line);
void write_text(std::ostream& out, const MetricReport& r);

}  // namespace cranet
