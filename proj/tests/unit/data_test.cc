#include "cranet/data.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cranet/errors.h"
#include "test_util.h"

namespace cranet {
namespace {

std::vector<RatingRecord> parse(const std::string& text, ParseOptions opt = {}) {
  std::istringstream in(text);
  return parse_ratings(in, opt);
}

TEST(ParseRatings, MlDatLine) {
  const auto r = parse("1::1193::5::978300760\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (RatingRecord{1, 1193, 5.0, 978300760}));
}

TEST(ParseRatings, CsvNoHeader) {
  ParseOptions opt;
  opt.format = RatingFormat::kCsv;
  const auto r = parse("7,42,3.5\n", opt);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (RatingRecord{7, 42, 3.5, std::nullopt}));
}

TEST(ParseRatings, CsvHeaderAndTabs) {
  ParseOptions opt;
  opt.format = RatingFormat::kCsv;
  opt.delimiter = '\t';
  opt.has_header = true;
  const auto r = parse("user\titem\trating\n3\t4\t2\n5\t6\t1\t99\n", opt);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1], (RatingRecord{5, 6, 1.0, 99}));
}

TEST(ParseRatings, MalformedLinesNameTheLine) {
  try {
    parse("1::1193::five\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
  try {
    parse("1::2::3\n4::5\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse(""), DataError);
  EXPECT_THROW(parse_ratings(std::filesystem::path("/nonexistent/ratings.dat"), {}), DataError);
}

TEST(ParseRatings, PreservesOrder) {
  const auto r = parse("3::1::1\n1::2::2\n2::3::3\n");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].user, 3);
  EXPECT_EQ(r[1].user, 1);
  EXPECT_EQ(r[2].user, 2);
}

TEST(Deduplicate, LastWriteWins) {
  std::vector<RatingRecord> in{{1, 1, 2.0, {}}, {1, 2, 3.0, {}}, {1, 1, 5.0, {}}};
  const auto d = deduplicate(in);
  EXPECT_EQ(d.duplicates, 1u);
  ASSERT_EQ(d.records.size(), 2u);
  const auto it = std::find_if(d.records.begin(), d.records.end(),
                               [](const RatingRecord& r) { return r.item == 1; });
  EXPECT_EQ(it->value, 5.0);
}

TEST(Binarize, CollapsesToOne) {
  std::vector<RatingRecord> in{{1, 1, 2.0, {}}, {1, 1, 5.0, {}}, {2, 1, 3.0, {}}};
  binarize(in);
  const auto d = deduplicate(in);
  EXPECT_EQ(d.records.size(), 2u);
  for (const auto& r : d.records) EXPECT_EQ(r.value, 1.0);
}

TEST(MinCountFilter, ThresholdZeroIsNoOp) {
  Rng rng(1);
  const auto recs = testing::random_records(10, 10, 0.3, rng);
  EXPECT_EQ(apply_min_count_filter(recs, 0, 0), recs);
}

TEST(MinCountFilter, RemovesSparseUserAndCascades) {
  std::vector<RatingRecord> recs;
  // users 1..20 rate items 1..20 fully; user 100 rates 19 items.
  for (int u = 1; u <= 20; ++u)
    for (int i = 1; i <= 20; ++i) recs.push_back({u, i, 3.0, {}});
  for (int i = 1; i <= 19; ++i) recs.push_back({100, i, 4.0, {}});
  auto out = apply_min_count_filter(recs, 20, 0);
  EXPECT_EQ(out.size(), 400u);
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](const RatingRecord& r) { return r.user == 100; }));

  // Item 99 is rated by 20 users, one of whom (user 7) is sparse; dropping
  // user 7 leaves item 99 with 19 and it goes too.
  std::vector<RatingRecord> cascade;
  for (int u = 1; u <= 20; ++u)
    for (int i = 1; i <= 20; ++i) cascade.push_back({u, i, 3.0, {}});
  for (int u = 1; u <= 19; ++u) cascade.push_back({u, 99, 2.0, {}});
  cascade.push_back({500, 99, 2.0, {}});
  out = apply_min_count_filter(cascade, 20, 20);
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](const RatingRecord& r) { return r.item == 99; }));
  EXPECT_TRUE(std::none_of(out.begin(), out.end(), [](const RatingRecord& r) { return r.user == 500; }));
  EXPECT_EQ(out.size(), 400u);
}

TEST(MinCountFilter, OutputIsFixpoint) {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    const auto recs = testing::random_records(30, 30, 0.2, rng);
    const std::size_t mu = uniform_index(rng, 8), mi = uniform_index(rng, 8);
    const auto once = apply_min_count_filter(recs, mu, mi);
    EXPECT_EQ(apply_min_count_filter(once, mu, mi), once);
    EXPECT_EQ(once, apply_min_count_filter(recs, mu, mi));
  }
}

TEST(InteractionMatrix, VectorsBothOrientations) {
  // 2 users x 2 items, only r(1,1) = 5 observed; ids 1 and 2 map to 0 and 1.
  const std::vector<RatingRecord> recs{{1, 1, 5.0, {}}, {2, 2, 1.0, {}}};
  InteractionMatrix m(recs, {1, 5});
  EXPECT_EQ(m.n_users(), 2u);
  EXPECT_EQ(m.n_items(), 2u);
  const SparseVector& col = m.interaction_vector(0, Orientation::kItem);
  EXPECT_EQ(col.dim(), 2u);
  EXPECT_EQ(col, SparseVector(2, {{0, 5.0}}));
  EXPECT_EQ(m.interaction_vector(0, Orientation::kUser), SparseVector(2, {{0, 5.0}}));
  EXPECT_THROW(m.interaction_vector(2, Orientation::kItem), DimensionError);
  EXPECT_THROW(m.interaction_vector(7, Orientation::kUser), DimensionError);

  InteractionMatrix wide(IdIndex({1, 2, 3}), IdIndex({1, 2}), {{1, 1, 5.0, {}}}, {1, 5});
  EXPECT_TRUE(wide.column(1).empty());
  EXPECT_EQ(wide.column(1).dim(), 3u);
}

TEST(InteractionMatrix, DenseRoundTrip) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    auto recs = testing::random_records(12, 15, 0.3, rng);
    if (recs.empty()) continue;
    InteractionMatrix m(recs, {1, 5});
    std::map<std::pair<std::int64_t, std::int64_t>, double> want, got;
    for (const auto& r : recs) want[{r.user, r.item}] = r.value;
    for (std::size_t j = 0; j < m.n_items(); ++j) {
      const DenseVector d = m.column(j).to_dense();
      for (std::size_t u = 0; u < m.n_users(); ++u)
        if (d[u] != 0.0) got[{m.users().raw(u), m.items().raw(j)}] = d[u];
    }
    EXPECT_EQ(got, want);
    for (std::size_t u = 0; u < m.n_users(); ++u) EXPECT_EQ(*m.users().find(m.users().raw(u)), u);
  }
}

TEST(InteractionMatrix, DuplicatePairThrows) {
  EXPECT_THROW(InteractionMatrix({{1, 1, 2.0, {}}, {1, 1, 3.0, {}}}, {1, 5}), DataError);
}

TEST(BuildSplit, Sizes) {
  std::vector<RatingRecord> recs;
  for (int k = 0; k < 100; ++k) recs.push_back({k % 5, k / 5, 3.0, {}});
  const DatasetSplit s = build_split(recs, {0.9, 0.05, 7});
  EXPECT_EQ(s.report.records, 100u);
  EXPECT_EQ(s.report.test + s.report.dropped_cold_test, 10u);
  EXPECT_EQ(s.report.validation + s.report.dropped_cold_validation, 4u);
  EXPECT_EQ(s.report.train, 86u);
}

TEST(BuildSplit, SingleRecord) {
  const DatasetSplit s = build_split({{1, 1, 4.0, {}}}, {0.9, 0.05, 1});
  EXPECT_EQ(s.train.nnz(), 1u);
  EXPECT_TRUE(s.test.empty());
  EXPECT_TRUE(s.validation.empty());
  EXPECT_FALSE(s.report.warnings.empty());
}

TEST(BuildSplit, DeterministicDisjointAndComplete) {
  Rng rng(4);
  for (int t = 0; t < 40; ++t) {
    const auto recs = testing::random_records(20, 25, 0.15, rng);
    if (recs.empty()) continue;
    const std::uint64_t seed = rng();
    const DatasetSplit a = build_split(recs, {0.9, 0.05, seed});
    const DatasetSplit b = build_split(recs, {0.9, 0.05, seed});
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.validation, b.validation);
    EXPECT_EQ(a.train.to_records(), b.train.to_records());

    std::multiset<std::pair<std::int64_t, std::int64_t>> all, parts;
    for (const auto& r : recs) all.insert({r.user, r.item});
    for (const auto& r : a.train.to_records()) parts.insert({r.user, r.item});
    for (const auto& r : a.validation) parts.insert({r.user, r.item});
    for (const auto& r : a.test) parts.insert({r.user, r.item});
    EXPECT_EQ(parts.size() + a.report.dropped_cold_test + a.report.dropped_cold_validation, all.size());
    // Pairs are unique in the input, so no pair may appear twice across parts.
    std::set<std::pair<std::int64_t, std::int64_t>> uniq(parts.begin(), parts.end());
    EXPECT_EQ(uniq.size(), parts.size());
    for (const auto& p : parts) EXPECT_TRUE(all.count(p));
    for (const auto& r : a.test) {
      EXPECT_TRUE(a.train.users().find(r.user).has_value());
      EXPECT_TRUE(a.train.items().find(r.item).has_value());
    }
  }
}

TEST(SparsityPartition, GroupSizes) {
  std::vector<RatingRecord> recs;
  for (int i = 0; i < 11; ++i)
    for (int u = 0; u <= i; ++u) recs.push_back({u, i, 1.0, {}});
  InteractionMatrix m(recs, {1, 5});
  const SparsityProfile p = sparsity_partition(m, Orientation::kItem, 5);
  ASSERT_EQ(p.groups.size(), 5u);
  EXPECT_EQ(p.groups[0].size(), 3u);
  for (int g = 1; g < 5; ++g) EXPECT_EQ(p.groups[g].size(), 2u);
  EXPECT_EQ(p.groups[0], (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(p.lower_bounds[1], 4u);

  const SparsityProfile u = sparsity_partition(InteractionMatrix(std::vector<RatingRecord>(recs.begin(), recs.begin() + 55), {1, 5}),
                                               Orientation::kItem, 5);
  for (const auto& g : u.groups) EXPECT_EQ(g.size(), 2u);
}

TEST(SparsityPartition, TiesByIndexAndTooFewVectors) {
  std::vector<RatingRecord> recs;
  for (int i = 0; i < 7; ++i) recs.push_back({1, i, 2.0, {}});
  InteractionMatrix m(recs, {1, 5});
  const SparsityProfile p = sparsity_partition(m, Orientation::kItem, 5);
  EXPECT_EQ(p.groups[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(p.groups[1], (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(p.groups[4], (std::vector<std::size_t>{6}));
  EXPECT_THROW(sparsity_partition(m, Orientation::kUser, 5), DimensionError);
}

TEST(IngestReport, KeyValueLines) {
  IngestReport r;
  r.records = 10;
  r.duplicates = 2;
  r.dropped_cold_test = 1;
  std::ostringstream out;
  write_ingest_report(out, r);
  EXPECT_NE(out.str().find("records: 10"), std::string::npos);
  EXPECT_NE(out.str().find("duplicates: 2"), std::string::npos);
  EXPECT_NE(out.str().find("dropped_cold_test: 1"), std::string::npos);
}

}  // namespace
}  // namespace cranet
