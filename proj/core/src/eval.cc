#include "cranet/eval.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "cranet/encoder.h"
#include "cranet/errors.h"
#include "cranet/parallel.h"

namespace cranet {

const char* to_string(Task t) { return t == Task::kRating ? "rating" : "ranking"; }

Task task_from_string(const std::string& s) {
  if (s == "rating") return Task::kRating;
  if (s == "ranking") return Task::kRanking;
  throw ConfigError("task must be rating or ranking; got '" + s + "'");
}

double rmse(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw DimensionError("rmse of an empty set");
  double acc = 0.0;
  for (const auto& [actual, predicted] : pairs) {
    const double e = predicted - actual;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

RankingList rank_items(std::size_t user, std::span<const double> scores, const SparseVector& exclude,
                       std::size_t k) {
  if (k == 0) throw DimensionError("top-K needs K >= 1");
  std::vector<std::size_t> cand;
  cand.reserve(scores.size());
  const auto ex = exclude.entries();
  std::size_t next = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    while (next < ex.size() && ex[next].index < j) ++next;
    if (next < ex.size() && ex[next].index == j) continue;
    cand.push_back(j);
  }
  const std::size_t take = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + take, cand.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  RankingList out;
  out.user = user;
  for (std::size_t t = 0; t < take; ++t) {
    out.items.push_back(cand[t]);
    out.scores.push_back(scores[cand[t]]);
  }
  return out;
}

namespace {

void check_user(const InteractionMatrix& train, std::size_t user) {
  if (user >= train.n_users()) {
    throw DimensionError("unknown user index " + std::to_string(user));
  }
}

const DenseVector* dense_for(const std::vector<DenseVector>* dense, std::size_t j) {
  return dense != nullptr ? &(*dense)[j] : nullptr;
}

// Hidden code of every item vector (item-based scoring).
std::vector<DenseVector> item_codes(const ModelParams& p, const HyperParams& h,
                                    const InteractionMatrix& train,
                                    const std::vector<DenseVector>* dense) {
  std::vector<DenseVector> codes(train.n_items());
  parallel_for(0, codes.size(), [&](std::size_t lo, std::size_t hi) {
    EncoderState st;
    for (std::size_t j = lo; j < hi; ++j) {
      encode(p, h, train.column(j), dense_for(dense, j), st);
      codes[j] = st.h;
    }
  });
  return codes;
}

std::vector<double> user_scores_from_codes(const ModelParams& p, const std::vector<DenseVector>& codes,
                                           std::size_t user) {
  std::vector<double> scores(codes.size());
  for (std::size_t j = 0; j < codes.size(); ++j) scores[j] = decode_at(p, codes[j].span(), user);
  return scores;
}

std::vector<double> user_scores_user_based(const ModelParams& p, const HyperParams& h,
                                           const InteractionMatrix& train, std::size_t user,
                                           const std::vector<DenseVector>* dense) {
  const SparseVector& row = train.row(user);
  EncoderState st;
  encode(p, h, row, dense_for(dense, user), st);
  std::vector<double> scores(train.n_items());
  for (std::size_t j = 0; j < scores.size(); ++j) scores[j] = decode_at(p, st.h.span(), j);
  if (h.residual) {
    for (const auto& e : row.entries()) scores[e.index] += e.value;
  }
  return scores;
}

}  // namespace

std::vector<double> score_items(const ModelParams& p, const HyperParams& h,
                                const InteractionMatrix& train, std::size_t user,
                                const std::vector<DenseVector>* dense_inputs) {
  check_user(train, user);
  if (h.orientation == Orientation::kUser) {
    return user_scores_user_based(p, h, train, user, dense_inputs);
  }
  std::vector<double> scores = user_scores_from_codes(p, item_codes(p, h, train, dense_inputs), user);
  if (h.residual) {
    for (const auto& e : train.row(user).entries()) scores[e.index] += e.value;
  }
  return scores;
}

RankingList recommend_topk(const ModelParams& p, const HyperParams& h,
                           const InteractionMatrix& train, std::size_t user, std::size_t k,
                           const std::vector<DenseVector>* dense_inputs) {
  if (k == 0) throw DimensionError("top-K needs K >= 1");
  const auto scores = score_items(p, h, train, user, dense_inputs);
  return rank_items(user, scores, train.row(user), k);
}

double precision_at_k(const RankingList& list, std::span<const std::size_t> relevant, std::size_t k) {
  if (k == 0) throw DimensionError("precision@K needs K >= 1");
  std::size_t hits = 0;
  const std::size_t n = std::min(k, list.items.size());
  for (std::size_t r = 0; r < n; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(), list.items[r])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(const RankingList& list, std::span<const std::size_t> relevant, std::size_t k) {
  if (k == 0) throw DimensionError("NDCG@K needs K >= 1");
  if (relevant.empty()) return 0.0;
  double dcg = 0.0, idcg = 0.0;
  const std::size_t n = std::min(k, list.items.size());
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), list.items[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

Predictions predict_records(const ModelParams& p, const HyperParams& h,
                            const InteractionMatrix& train, const std::vector<RatingRecord>& records,
                            const std::vector<DenseVector>* dense_inputs) {
  const Orientation o = h.orientation;
  struct Slot {
    std::size_t record;
    std::size_t position;
  };
  std::unordered_map<std::size_t, std::vector<Slot>> by_vector;
  std::vector<std::size_t> vectors;
  std::vector<char> located(records.size(), 0);
  Predictions out;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto u = train.users().find(records[k].user);
    const auto i = train.items().find(records[k].item);
    if (!u || !i) continue;
    const std::size_t vec = o == Orientation::kItem ? *i : *u;
    const std::size_t pos = o == Orientation::kItem ? *u : *i;
    auto [it, fresh] = by_vector.try_emplace(vec);
    if (fresh) vectors.push_back(vec);
    it->second.push_back({k, pos});
    located[k] = 1;
  }
  std::sort(vectors.begin(), vectors.end());

  std::vector<double> predicted(records.size(), 0.0);
  const RatingRange range = train.rating_range();
  parallel_for(0, vectors.size(), [&](std::size_t lo, std::size_t hi) {
    EncoderState st;
    for (std::size_t v = lo; v < hi; ++v) {
      const std::size_t vec = vectors[v];
      const SparseVector& r = train.interaction_vector(vec, o);
      encode(p, h, r, dense_for(dense_inputs, vec), st);
      for (const auto& slot : by_vector.at(vec)) {
        double y = decode_at(p, st.h.span(), slot.position);
        if (h.residual) {
          const auto e = r.entries();
          const auto it = std::lower_bound(e.begin(), e.end(), slot.position,
                                           [](const SparseEntry& x, std::size_t idx) { return x.index < idx; });
          if (it != e.end() && it->index == slot.position) y += it->value;
        }
        if (h.clip_predictions) y = std::clamp(y, range.min, range.max);
        predicted[slot.record] = y;
      }
    }
  });

  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!located[k]) {
      ++out.dropped;
      continue;
    }
    out.pairs.emplace_back(records[k].value, predicted[k]);
  }
  return out;
}

MetricReport evaluate_split(const ModelParams& p, const HyperParams& h, const DatasetSplit& split,
                            Task task, const std::vector<std::size_t>& ks,
                            const std::vector<DenseVector>* dense_inputs) {
  MetricReport report;
  report.task = task;
  report.split_seed = split.seed;
  report.dropped_cold_test = split.report.dropped_cold_test;
  const InteractionMatrix& train = split.train;

  if (task == Task::kRating) {
    const Predictions pred = predict_records(p, h, train, split.test, dense_inputs);
    report.scored = pred.pairs.size();
    report.dropped = pred.dropped;
    if (!pred.pairs.empty()) report.rmse = rmse(pred.pairs);
    return report;
  }

  if (ks.empty()) throw DimensionError("ranking evaluation needs at least one K");
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  std::map<std::size_t, std::vector<std::size_t>> relevant;  // user -> sorted items
  for (const auto& r : split.test) {
    const auto u = train.users().find(r.user);
    const auto i = train.items().find(r.item);
    if (!u || !i) {
      ++report.dropped;
      continue;
    }
    relevant[*u].push_back(*i);
    ++report.scored;
  }
  for (auto& [u, items] : relevant) std::sort(items.begin(), items.end());

  std::vector<DenseVector> codes;
  if (h.orientation == Orientation::kItem) codes = item_codes(p, h, train, dense_inputs);

  std::vector<std::size_t> users;
  for (const auto& [u, items] : relevant) users.push_back(u);
  std::vector<std::vector<double>> prec(users.size()), ndcg(users.size());
  parallel_for(0, users.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t x = lo; x < hi; ++x) {
      const std::size_t u = users[x];
      const auto scores = h.orientation == Orientation::kItem
                              ? user_scores_from_codes(p, codes, u)
                              : user_scores_user_based(p, h, train, u, dense_inputs);
      const RankingList list = rank_items(u, scores, train.row(u), kmax);
      for (std::size_t k : ks) {
        prec[x].push_back(precision_at_k(list, relevant.at(u), k));
        ndcg[x].push_back(ndcg_at_k(list, relevant.at(u), k));
      }
    }
  });
  report.users_evaluated = users.size();
  for (std::size_t q = 0; q < ks.size(); ++q) {
    double ps = 0.0, ns = 0.0;
    for (std::size_t x = 0; x < users.size(); ++x) {
      ps += prec[x][q];
      ns += ndcg[x][q];
    }
    const double n = std::max<double>(1.0, static_cast<double>(users.size()));
    report.precision[ks[q]] = ps / n;
    report.ndcg[ks[q]] = ns / n;
  }
  return report;
}

std::string to_json_line(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["task"] = to_string(r.task);
  j["rmse"] = r.rmse ? nlohmann::ordered_json(*r.rmse) : nlohmann::ordered_json(nullptr);
  for (const auto& [k, v] : r.precision) j["precision@" + std::to_string(k)] = v;
  for (const auto& [k, v] : r.ndcg) j["ndcg@" + std::to_string(k)] = v;
  j["scored"] = r.scored;
  j["dropped"] = r.dropped;
  j["users_evaluated"] = r.users_evaluated;
  j["dropped_cold_test"] = r.dropped_cold_test;
  j["split_seed"] = r.split_seed;
  return j.dump();
}

MetricReport metric_report_from_json_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad metric report line: ") + e.what());
  }
  MetricReport r;
  try {
    r.task = task_from_string(j.at("task").get<std::string>());
    if (!j.at("rmse").is_null()) r.rmse = j.at("rmse").get<double>();
    for (const auto& [key, value] : j.items()) {
      const auto at = key.find('@');
      if (at == std::string::npos) continue;
      const std::size_t k = std::stoul(key.substr(at + 1));
      (key.rfind("precision", 0) == 0 ? r.precision : r.ndcg)[k] = value.get<double>();
    }
    r.scored = j.at("scored").get<std::size_t>();
    r.dropped = j.at("dropped").get<std::size_t>();
    r.users_evaluated = j.at("users_evaluated").get<std::size_t>();
    r.dropped_cold_test = j.at("dropped_cold_test").get<std::size_t>();
    r.split_seed = j.at("split_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad metric report line: ") + e.what());
  }
  return r;
}

void write_text(std::ostream& out, const MetricReport& r) {
  out << "task: " << to_string(r.task) << '\n';
  if (r.rmse) out << "rmse: " << *r.rmse << '\n';
  for (const auto& [k, v] : r.precision) out << "precision@" << k << ": " << v << '\n';
  for (const auto& [k, v] : r.ndcg) out << "ndcg@" << k << ": " << v << '\n';
  out << "scored: " << r.scored << '\n'
      << "dropped: " << r.dropped << '\n';
  if (r.task == Task::kRanking) out << "users_evaluated: " << r.users_evaluated << '\n';
  out << "dropped_cold_test: " << r.dropped_cold_test << '\n'
      << "split_seed: " << r.split_seed << '\n';
}

}  // namespace cranet
