#include "cranet/diagnostics.h"

#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cranet/errors.h"
#include "test_util.h"

namespace cranet {
namespace {

TEST(Alignment, TiedIsNonNegative) {
  const TrialReport r = alignment_check(30, 6, 2000, 1, AlignmentReflector::kTied);
  EXPECT_TRUE(r.pass);
  EXPECT_GE(r.min, -1e-12);
  EXPECT_EQ(r.trials, 2000u);
}

TEST(Alignment, NegatedReflectorFlipsSign) {
  const TrialReport tied = alignment_check(30, 6, 200, 2, AlignmentReflector::kTied);
  const TrialReport neg = alignment_check(30, 6, 200, 2, AlignmentReflector::kNegated);
  EXPECT_FALSE(neg.pass);
  EXPECT_EQ(neg.min, -tied.max);
  EXPECT_EQ(neg.max, -tied.min);
  EXPECT_LT(neg.max, 0.0);
}

TEST(Alignment, NegatedReflectorOppositeToTied) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix v = testing::random_matrix(6, 30, rng);
    const SparseVector r = testing::random_sparse(30, 0.3, rng);
    const DenseVector s = mat_vec(v, r);
    const DenseVector tied = transposed_mat_vec(v, s);
    DenseMatrix neg_u = transpose(v);
    for (double& x : neg_u.flat()) x = -x;
    const DenseVector neg = mat_vec(neg_u, s);
    EXPECT_NEAR(dot(tied.values(), neg.values()) / (norm2(tied.values()) * norm2(neg.values())), -1.0, 1e-12);
  }
}

TEST(Alignment, RandomReflectorCanBeNegative) {
  EXPECT_LT(alignment_check(30, 6, 500, 3, AlignmentReflector::kRandom).min, 0.0);
}

TEST(Alignment, IdentityEncoderGivesOne) {
  Rng rng(4);
  const DenseMatrix v = DenseMatrix::identity(5);
  for (int t = 0; t < 20; ++t) EXPECT_NEAR(alignment_cosine(v, v, testing::random_sparse(5, 0.5, rng)), 1.0, 1e-15);
}

TEST(Equivalence, IdentityIsExact) {
  Rng rng(5);
  const DenseMatrix v = testing::random_matrix(4, 12, rng);
  const DenseMatrix u = testing::random_matrix(12, 4, rng);
  const SparseVector r = testing::random_sparse(12, 0.4, rng);
  EXPECT_EQ(tied_equivalence_gap(v, DenseMatrix::identity(4), r, 20), 0.0);
  EXPECT_EQ(independent_equivalence_gap(u, v, DenseMatrix::identity(4), r, 20), 0.0);
}

TEST(Equivalence, DiagonalInvertible) {
  Rng rng(6);
  const DenseMatrix v = testing::random_matrix(2, 9, rng);
  const DenseMatrix u = testing::random_matrix(9, 2, rng);
  const SparseVector r = testing::random_sparse(9, 0.4, rng);
  EXPECT_LE(independent_equivalence_gap(u, v, DenseMatrix{{2, 0}, {0, 0.5}}, r, 20), 1e-9);
  EXPECT_GT(tied_equivalence_gap(v, DenseMatrix{{2, 0}, {0, 0.5}}, r, 20), 1e-3);
}

TEST(Equivalence, Families) {
  EXPECT_TRUE(equivalence_check(40, 8, 100, 7, EquivalenceFamily::kOrthogonal).pass);
  EXPECT_TRUE(equivalence_check(40, 8, 100, 8, EquivalenceFamily::kInvertible).pass);
  const TrialReport control = equivalence_check(40, 8, 20, 9, EquivalenceFamily::kScaling);
  EXPECT_FALSE(control.pass);
  EXPECT_GT(control.min, 1e-6);
}

TEST(Equivalence, ConditionNumber) {
  EXPECT_NEAR(condition_number_l1(DenseMatrix{{2, 0}, {0, 0.5}}), 4.0, 1e-15);
  EXPECT_EQ(condition_number_l1(DenseMatrix(2, 2)), INFINITY);
}

TEST(FiniteDiff, AllModes) {
  for (auto mode : {ReflectionMode::kTied, ReflectionMode::kIndependent, ReflectionMode::kImplicit,
                    ReflectionMode::kPlain})
    for (bool residual : {false, true}) {
      const TrialReport r = finite_diff_check(mode, residual, 10, 6, 10, 11);
      EXPECT_TRUE(r.pass) << to_text_line(r);
    }
  EXPECT_THROW(finite_diff_check(ReflectionMode::kTied, false, 13, 4, 1, 1), DimensionError);
}

TEST(FiniteDiff, SingleInstance) {
  Rng rng(12);
  const ModelParams p = testing::random_params(ReflectionMode::kTied, 6, 3, rng);
  HyperParams h;
  const std::vector<SparseVector> batch{testing::random_sparse(6, 0.5, rng)};
  EXPECT_LT(max_gradient_error(p, h, batch), 1e-4);
}

TEST(ExportLatent, Contract) {
  Rng rng(13);
  const auto recs = testing::random_records(10, 12, 0.4, rng);
  const InteractionMatrix m(recs, {1, 5});
  HyperParams h;
  const ModelParams zero = zeros_like(init_params(ReflectionMode::kImplicit, m.n_users(), 3, 1));
  const std::vector<std::size_t> idx{0, 4, 7};
  std::ostringstream out;
  export_latent(out, zero, h, m, idx);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "id,count,h0,h1,h2");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    EXPECT_EQ(std::stoll(cell), m.items().raw(idx[rows]));
    std::getline(cells, cell, ',');
    EXPECT_EQ(std::stoul(cell), m.column(idx[rows]).nnz());
    while (std::getline(cells, cell, ',')) EXPECT_EQ(std::stod(cell), 0.5);
    ++rows;
  }
  EXPECT_EQ(rows, idx.size());

  const ModelParams p = testing::random_params(ReflectionMode::kTied, m.n_users(), 4, rng, 0.3);
  std::ostringstream o2;
  export_latent(o2, p, h, m, idx);
  std::istringstream in2(o2.str());
  std::getline(in2, line);
  while (std::getline(in2, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    std::getline(cells, cell, ',');
    while (std::getline(cells, cell, ',')) {
      const double v = std::stod(cell);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
  const std::vector<std::size_t> bad{m.n_items()};
  std::ostringstream o3;
  EXPECT_THROW(export_latent(o3, p, h, m, bad), DimensionError);
}

TEST(TrialReport, Lines) {
  TrialReport r{"alignment/tied", 10, -0.5, 0.1, 0.9, -1e-12, false, 3};
  EXPECT_NE(to_text_line(r).find("FAIL"), std::string::npos);
  const auto j = nlohmann::json::parse(to_json_line(r));
  EXPECT_EQ(j.at("name"), "alignment/tied");
  EXPECT_EQ(j.at("pass"), false);
  EXPECT_EQ(j.at("trials"), 10);
}

}  // namespace
}  // namespace cranet
