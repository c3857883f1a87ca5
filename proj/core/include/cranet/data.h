#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cranet/numerics.h"

namespace cranet {

struct RatingRecord {
  std::int64_t user = 0;
  std::int64_t item = 0;
  double value = 0.0;
  std::optional<std::int64_t> timestamp;

  bool operator==(const RatingRecord&) const = default;
};

enum class RatingFormat { kMlDat, kCsv };

struct ParseOptions {
  RatingFormat format = RatingFormat::kMlDat;
  char delimiter = ',';  // csv only; ml-dat always uses "::"
  bool has_header = false;
};

// One record per non-blank line, in file order. Throws DataError naming the
// 1-based line number for malformed lines, and for empty input.
std::vector<RatingRecord> parse_ratings(std::istream& in, const ParseOptions& options);
std::vector<RatingRecord> parse_ratings(const std::filesystem::path& path,
                                        const ParseOptions& options);

struct DedupResult {
  std::vector<RatingRecord> records;
  std::size_t duplicates = 0;
};

// Last occurrence of each (user, item) wins; survivors keep their relative
// order of last appearance.
DedupResult deduplicate(std::vector<RatingRecord> records);

// Sets every value to 1.0 (implicit feedback).
void binarize(std::vector<RatingRecord>& records);

// Repeatedly drops users with fewer than min_user records and items with
// fewer than min_item records until nothing changes.
std::vector<RatingRecord> apply_min_count_filter(std::vector<RatingRecord> records,
                                                 std::size_t min_user, std::size_t min_item);

enum class Orientation { kItem, kUser };

const char* to_string(Orientation o);
Orientation orientation_from_string(const std::string& s);

// Bijection between raw ids and contiguous 0-based indices. Indices follow
// ascending raw id.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::int64_t> raw_ids);

  std::size_t size() const { return raw_.size(); }
  std::optional<std::size_t> find(std::int64_t raw) const;
  std::int64_t raw(std::size_t index) const { return raw_.at(index); }
  const std::vector<std::int64_t>& raw_ids() const { return raw_; }

 private:
  std::vector<std::int64_t> raw_;
  std::unordered_map<std::int64_t, std::size_t> lookup_;
};

struct RatingRange {
  double min = 1.0;
  double max = 5.0;
};

// Observed part of R (N users x M items), stored both by column (item
// vectors of dimension N) and by row (user vectors of dimension M).
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  // Index maps are built from the records themselves.
  InteractionMatrix(const std::vector<RatingRecord>& records, RatingRange range);
  // Uses the given maps; records whose ids are missing from them throw.
  InteractionMatrix(IdIndex users, IdIndex items, const std::vector<RatingRecord>& records,
                    RatingRange range);

  std::size_t n_users() const { return users_.size(); }
  std::size_t n_items() const { return items_.size(); }
  std::size_t nnz() const { return nnz_; }
  RatingRange rating_range() const { return range_; }
  const IdIndex& users() const { return users_; }
  const IdIndex& items() const { return items_; }

  // Item-based: number of items, each of dimension n_users; user-based the
  // transpose.
  std::size_t vector_count(Orientation o) const;
  std::size_t vector_dim(Orientation o) const;
  // Throws DimensionError for an out-of-range index.
  const SparseVector& interaction_vector(std::size_t index, Orientation o) const;

  const SparseVector& column(std::size_t item) const { return interaction_vector(item, Orientation::kItem); }
  const SparseVector& row(std::size_t user) const { return interaction_vector(user, Orientation::kUser); }

  // All observed records with raw ids, column-major order.
  std::vector<RatingRecord> to_records() const;

 private:
  void build(const std::vector<RatingRecord>& records);

  IdIndex users_;
  IdIndex items_;
  RatingRange range_;
  std::vector<SparseVector> columns_;
  std::vector<SparseVector> rows_;
  std::size_t nnz_ = 0;
};

struct SplitOptions {
  double train_ratio = 0.9;
  double val_frac_of_train = 0.05;
  std::uint64_t seed = 1;
};

struct SplitReport {
  std::size_t records = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
  std::size_t dropped_cold_validation = 0;
  std::size_t dropped_cold_test = 0;
  std::vector<std::string> warnings;
};

struct DatasetSplit {
  InteractionMatrix train;
  std::vector<RatingRecord> validation;
  std::vector<RatingRecord> test;
  std::uint64_t seed = 0;
  SplitReport report;
};

// Seeded uniform partition by record: |test| = round((1-train_ratio)·n),
// validation = floor(val_frac·|pool|) (at least 1 when the pool has two or
// more records), held-out records with users/items absent from train are
// dropped and counted.
DatasetSplit build_split(const std::vector<RatingRecord>& records, const SplitOptions& options,
                         std::optional<RatingRange> range = std::nullopt);

RatingRange infer_range(const std::vector<RatingRecord>& records);

// Keeps only the vectors listed in `keep` (indices in orientation `o`), both
// in train and in the held-out lists. Index maps are unchanged.
DatasetSplit restrict_to_vectors(const DatasetSplit& split, Orientation o,
                                 const std::vector<std::size_t>& keep);

struct SparsityProfile {
  std::vector<std::size_t> counts;           // observed count per vector
  std::vector<std::size_t> group_of;         // group id per vector
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> lower_bounds;     // smallest count in each group
};

// Sort by (count, index) ascending and cut into k contiguous groups whose
// sizes differ by at most one, the earlier groups taking the remainder.
SparsityProfile sparsity_partition(const InteractionMatrix& m, Orientation o, std::size_t k = 5);

struct IngestReport {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
  std::size_t filtered_out = 0;
  std::size_t records = 0;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t dropped_cold_validation = 0;
  std::size_t dropped_cold_test = 0;
};

void write_ingest_report(std::ostream& out, const IngestReport& report);

}  // namespace cranet
