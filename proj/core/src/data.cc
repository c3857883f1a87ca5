#include "cranet/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string_view>
#include <utility>

#include "cranet/errors.h"
#include "cranet/random.h"

namespace cranet {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + sep.size();
  }
  return out;
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* name) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    line_error(line_no, std::string("non-numeric ") + name + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

std::vector<RatingRecord> parse_ratings(std::istream& in, const ParseOptions& options) {
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  const std::string sep =
      options.format == RatingFormat::kMlDat ? std::string("::") : std::string(1, options.delimiter);
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.has_header) continue;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_fields(body, sep);
    if (fields.size() != 3 && fields.size() != 4) {
      line_error(line_no, "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    }
    RatingRecord r;
    r.user = parse_number<std::int64_t>(fields[0], line_no, "user id");
    r.item = parse_number<std::int64_t>(fields[1], line_no, "item id");
    r.value = parse_number<double>(fields[2], line_no, "rating");
    if (!std::isfinite(r.value)) line_error(line_no, "rating is not finite");
    if (fields.size() == 4) r.timestamp = parse_number<std::int64_t>(fields[3], line_no, "timestamp");
    out.push_back(r);
  }
  if (out.empty()) throw DataError("no rating records in input");
  return out;
}

std::vector<RatingRecord> parse_ratings(const std::filesystem::path& path,
                                        const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file " + path.string());
  try {
    return parse_ratings(in, options);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

DedupResult deduplicate(std::vector<RatingRecord> records) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> last;
  for (std::size_t i = 0; i < records.size(); ++i) last[{records[i].user, records[i].item}] = i;
  DedupResult out;
  out.duplicates = records.size() - last.size();
  out.records.reserve(last.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (last.at({records[i].user, records[i].item}) == i) out.records.push_back(records[i]);
  }
  return out;
}

void binarize(std::vector<RatingRecord>& records) {
  for (auto& r : records) r.value = 1.0;
}

std::vector<RatingRecord> apply_min_count_filter(std::vector<RatingRecord> records,
                                                 std::size_t min_user, std::size_t min_item) {
  if (min_user == 0 && min_item == 0) return records;
  while (true) {
    std::unordered_map<std::int64_t, std::size_t> user_counts, item_counts;
    for (const auto& r : records) {
      ++user_counts[r.user];
      ++item_counts[r.item];
    }
    std::vector<RatingRecord> kept;
    kept.reserve(records.size());
    for (const auto& r : records) {
      if (user_counts[r.user] >= min_user && item_counts[r.item] >= min_item) kept.push_back(r);
    }
    if (kept.size() == records.size()) return kept;
    records = std::move(kept);
  }
}

const char* to_string(Orientation o) { return o == Orientation::kItem ? "item" : "user"; }

Orientation orientation_from_string(const std::string& s) {
  if (s == "item") return Orientation::kItem;
  if (s == "user") return Orientation::kUser;
  throw ConfigError("orientation must be 'item' or 'user', got '" + s + "'");
}

IdIndex::IdIndex(std::vector<std::int64_t> raw_ids) : raw_(std::move(raw_ids)) {
  std::sort(raw_.begin(), raw_.end());
  raw_.erase(std::unique(raw_.begin(), raw_.end()), raw_.end());
  lookup_.reserve(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) lookup_.emplace(raw_[i], i);
}

std::optional<std::size_t> IdIndex::find(std::int64_t raw) const {
  const auto it = lookup_.find(raw);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

namespace {

IdIndex users_of(const std::vector<RatingRecord>& records) {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.user);
  return IdIndex(std::move(ids));
}

IdIndex items_of(const std::vector<RatingRecord>& records) {
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.item);
  return IdIndex(std::move(ids));
}

}  // namespace

InteractionMatrix::InteractionMatrix(const std::vector<RatingRecord>& records, RatingRange range)
    : users_(users_of(records)), items_(items_of(records)), range_(range) {
  build(records);
}

InteractionMatrix::InteractionMatrix(IdIndex users, IdIndex items,
                                     const std::vector<RatingRecord>& records, RatingRange range)
    : users_(std::move(users)), items_(std::move(items)), range_(range) {
  build(records);
}

void InteractionMatrix::build(const std::vector<RatingRecord>& records) {
  std::vector<std::vector<SparseEntry>> cols(items_.size()), rows(users_.size());
  for (const auto& r : records) {
    const auto u = users_.find(r.user);
    const auto i = items_.find(r.item);
    if (!u || !i) {
      throw DataError("record (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                      ") not covered by the index maps");
    }
    cols[*i].push_back({*u, r.value});
    rows[*u].push_back({*i, r.value});
  }
  auto finish = [](std::vector<SparseEntry>& entries, std::size_t dim) {
    std::sort(entries.begin(), entries.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
    for (std::size_t k = 1; k < entries.size(); ++k) {
      if (entries[k].index == entries[k - 1].index) {
        throw DataError("duplicate (user, item) pair; deduplicate records first");
      }
    }
    return SparseVector(dim, std::move(entries));
  };
  columns_.clear();
  rows_.clear();
  columns_.reserve(cols.size());
  rows_.reserve(rows.size());
  for (auto& c : cols) columns_.push_back(finish(c, users_.size()));
  for (auto& r : rows) rows_.push_back(finish(r, items_.size()));
  nnz_ = records.size();
}

std::size_t InteractionMatrix::vector_count(Orientation o) const {
  return o == Orientation::kItem ? n_items() : n_users();
}

std::size_t InteractionMatrix::vector_dim(Orientation o) const {
  return o == Orientation::kItem ? n_users() : n_items();
}

const SparseVector& InteractionMatrix::interaction_vector(std::size_t index, Orientation o) const {
  const auto& store = o == Orientation::kItem ? columns_ : rows_;
  if (index >= store.size()) {
    throw DimensionError(std::string(to_string(o)) + " vector index " + std::to_string(index) +
                         " out of range (" + std::to_string(store.size()) + ")");
  }
  return store[index];
}

std::vector<RatingRecord> InteractionMatrix::to_records() const {
  std::vector<RatingRecord> out;
  out.reserve(nnz_);
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    for (const auto& e : columns_[j].entries()) {
      out.push_back({users_.raw(e.index), items_.raw(j), e.value, std::nullopt});
    }
  }
  return out;
}

RatingRange infer_range(const std::vector<RatingRecord>& records) {
  if (records.empty()) return {};
  RatingRange r{records.front().value, records.front().value};
  for (const auto& rec : records) {
    r.min = std::min(r.min, rec.value);
    r.max = std::max(r.max, rec.value);
  }
  return r;
}

DatasetSplit build_split(const std::vector<RatingRecord>& records, const SplitOptions& options,
                         std::optional<RatingRange> range) {
  if (records.empty()) throw DataError("cannot split an empty record list");
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  shuffle(std::span<std::size_t>(order), rng);

  std::size_t n_test = static_cast<std::size_t>(std::llround((1.0 - options.train_ratio) * n));
  n_test = std::min(n_test, n - 1);
  const std::size_t pool = n - n_test;
  std::size_t n_val = static_cast<std::size_t>(std::floor(options.val_frac_of_train * pool));
  if (pool >= 2) n_val = std::max<std::size_t>(1, n_val);
  n_val = std::min(n_val, pool - 1);

  DatasetSplit split;
  split.seed = options.seed;
  split.report.records = n;
  std::vector<RatingRecord> train, val, test;
  train.reserve(pool - n_val);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = records[order[k]];
    if (k < n_test) {
      test.push_back(r);
    } else if (k < n_test + n_val) {
      val.push_back(r);
    } else {
      train.push_back(r);
    }
  }
  split.train = InteractionMatrix(train, range.value_or(infer_range(records)));

  auto keep_warm = [&](std::vector<RatingRecord>& held, std::size_t& dropped) {
    std::vector<RatingRecord> warm;
    warm.reserve(held.size());
    for (const auto& r : held) {
      if (split.train.users().find(r.user) && split.train.items().find(r.item)) {
        warm.push_back(r);
      } else {
        ++dropped;
      }
    }
    held = std::move(warm);
  };
  keep_warm(val, split.report.dropped_cold_validation);
  keep_warm(test, split.report.dropped_cold_test);
  split.validation = std::move(val);
  split.test = std::move(test);
  split.report.train = train.size();
  split.report.validation = split.validation.size();
  split.report.test = split.test.size();
  if (split.validation.empty()) split.report.warnings.push_back("validation set is empty");
  if (split.test.empty()) split.report.warnings.push_back("test set is empty");
  return split;
}

DatasetSplit restrict_to_vectors(const DatasetSplit& split, Orientation o,
                                 const std::vector<std::size_t>& keep) {
  std::vector<char> wanted(split.train.vector_count(o), 0);
  for (std::size_t k : keep) {
    if (k >= wanted.size()) throw DimensionError("restrict_to_vectors: index out of range");
    wanted[k] = 1;
  }
  const auto& m = split.train;
  auto selected = [&](const RatingRecord& r) {
    const auto idx = o == Orientation::kItem ? m.items().find(r.item) : m.users().find(r.user);
    return idx && wanted[*idx];
  };
  std::vector<RatingRecord> train;
  for (const auto& r : m.to_records())
    if (selected(r)) train.push_back(r);

  DatasetSplit out;
  out.seed = split.seed;
  out.train = InteractionMatrix(m.users(), m.items(), train, m.rating_range());
  for (const auto& r : split.validation)
    if (selected(r)) out.validation.push_back(r);
  for (const auto& r : split.test)
    if (selected(r)) out.test.push_back(r);
  out.report = split.report;
  out.report.train = train.size();
  out.report.validation = out.validation.size();
  out.report.test = out.test.size();
  return out;
}

SparsityProfile sparsity_partition(const InteractionMatrix& m, Orientation o, std::size_t k) {
  const std::size_t n = m.vector_count(o);
  if (k == 0 || n < k) {
    throw DimensionError("sparsity_partition: " + std::to_string(n) + " vectors for " +
                         std::to_string(k) + " groups");
  }
  SparsityProfile p;
  p.counts.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.counts[i] = m.interaction_vector(i, o).nnz();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.counts[a] < p.counts[b]; });
  p.group_of.assign(n, 0);
  p.groups.resize(k);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < k; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s, ++pos) {
      p.groups[g].push_back(order[pos]);
      p.group_of[order[pos]] = g;
    }
    p.lower_bounds.push_back(p.counts[p.groups[g].front()]);
  }
  return p;
}

void write_ingest_report(std::ostream& out, const IngestReport& r) {
  out << "lines: " << r.lines << '\n'
      << "duplicates: " << r.duplicates << '\n'
      << "filtered_out: " << r.filtered_out << '\n'
      << "records: " << r.records << '\n'
      << "users: " << r.users << '\n'
      << "items: " << r.items << '\n'
      << "dropped_cold_validation: " << r.dropped_cold_validation << '\n'
      << "dropped_cold_test: " << r.dropped_cold_test << '\n';
}

}  // namespace cranet
