#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "support.hpp"
#include "wavesal/errors.hpp"
#include "wavesal/saliency.hpp"

using namespace wavesal;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

// Projection residual energies computed from the eigenvectors of M M^T,
// without any SVD.
std::vector<double> projector_residuals(const Eigen::MatrixXd& m, std::size_t r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m * m.transpose());
  const Eigen::MatrixXd u = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(r));
  const Eigen::MatrixXd projector = u * u.transpose();
  std::vector<double> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    out.push_back((projector * m.col(c) - m.col(c)).squaredNorm());
  return out;
}

// Window set on a partition with `blocks` supplied per region (empty =
// inactive).
RegionalWindowSet make_windows(std::size_t regions, std::size_t p, std::size_t window_len,
                               std::vector<std::vector<double>> blocks) {
  RegionalWindowSet w;
  w.partition = make_partition(regions * (p - 1) + 1, regions * (p - 1) + 1, regions, regions);
  w.window_len = window_len;
  w.dt = 1e-7;
  w.group_speed = 1e4;
  w.arrival_index.assign(regions * regions, 0);
  w.active.assign(regions * regions, 0);
  for (std::size_t k = 0; k < blocks.size(); ++k) w.active[k] = blocks[k].empty() ? 0 : 1;
  w.blocks = std::move(blocks);
  return w;
}

}  // namespace

TEST(Assemble, FullPartitionGives289By256) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> blocks(256, std::vector<double>(289 * 3));
  for (auto& b : blocks)
    for (auto& v : b) v = g(rng);
  const auto w = make_windows(16, 17, 3, blocks);
  const SnapshotMatrix s = assemble_snapshot_matrix(w, 2);
  EXPECT_EQ(s.values.rows(), 289);
  EXPECT_EQ(s.values.cols(), 256);
  EXPECT_EQ(s.labels.size(), 256u);
  EXPECT_EQ(s.values(5, 17), blocks[17][2 * 289 + 5]);
  EXPECT_EQ(s.labels[17].i, 1u);
  EXPECT_EQ(s.labels[17].j, 1u);
}

TEST(Assemble, MaskSelectsSamePositionsInEveryColumn) {
  std::vector<std::vector<double>> blocks(4, std::vector<double>(289));
  for (std::size_t r = 0; r < 4; ++r)
    std::iota(blocks[r].begin(), blocks[r].end(), 1000.0 * static_cast<double>(r));
  const auto w = make_windows(2, 17, 1, blocks);
  const Mask mask = double_cross_mask(17, 17, 1);
  const SnapshotMatrix s = assemble_snapshot_matrix(w, 0, std::span(&mask, 1));
  EXPECT_EQ(s.values.rows(), 65);
  EXPECT_EQ(s.values.cols(), 4);
  const auto idx = mask.indices();
  for (Eigen::Index c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < idx.size(); ++k)
      EXPECT_EQ(s.values(static_cast<Eigen::Index>(k), c), 1000.0 * static_cast<double>(c) + static_cast<double>(idx[k]));
}

TEST(Assemble, IdenticalBlocksGiveIdenticalColumnsAndInactiveAreSkipped) {
  std::vector<double> same(9 * 2, 0.5);
  same[3] = 2.0;
  const auto w = make_windows(2, 3, 2, {same, {}, same, std::vector<double>(18, 1.0)});
  const SnapshotMatrix s = assemble_snapshot_matrix(w, 0);
  ASSERT_EQ(s.values.cols(), 3);
  EXPECT_TRUE(s.values.col(0) == s.values.col(1));
  EXPECT_EQ(s.labels[1].i, 0u);
  EXPECT_EQ(s.labels[1].j, 1u);
}

TEST(Assemble, RejectsBadIndexAndMaskShape) {
  const auto w = make_windows(2, 3, 2, std::vector<std::vector<double>>(4, std::vector<double>(18, 1.0)));
  EXPECT_THROW(assemble_snapshot_matrix(w, 2), BoundsError);
  const Mask wrong = random_mask(5, 5, 0.5, 1);
  EXPECT_THROW(assemble_snapshot_matrix(w, 0, std::span(&wrong, 1)), ShapeError);
}

TEST(Assemble, PerRegionMasksPickOwnPositions) {
  std::vector<std::vector<double>> blocks(4, std::vector<double>(289));
  for (auto& b : blocks) std::iota(b.begin(), b.end(), 0.0);
  const auto w = make_windows(2, 17, 1, blocks);
  std::vector<Mask> masks;
  for (std::uint64_t s = 0; s < 4; ++s) masks.push_back(random_mask(17, 17, 0.2, s));
  const SnapshotMatrix m = assemble_snapshot_matrix(w, 0, masks);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const auto idx = masks[static_cast<std::size_t>(c)].indices();
    for (std::size_t k = 0; k < idx.size(); ++k)
      EXPECT_EQ(m.values(static_cast<Eigen::Index>(k), c), static_cast<double>(idx[k]));
  }
  masks.pop_back();
  EXPECT_THROW(assemble_snapshot_matrix(w, 0, masks), ShapeError);
}

TEST(LowRank, RankOneInputIsRecoveredExactly) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd m = random_matrix(rng, 12, 1) * random_matrix(rng, 1, 9);
  const LowRankSplit s = truncated_low_rank(m, 1);
  EXPECT_LE(s.outliers.norm(), 1e-10 * m.norm());
  EXPECT_EQ(s.rank_used, 1u);
}

TEST(LowRank, DiagonalExample) {
  Eigen::MatrixXd m = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const LowRankSplit s = truncated_low_rank(m, 2);
  Eigen::MatrixXd expected = Eigen::Vector3d(3, 2, 0).asDiagonal();
  EXPECT_LE((s.low_rank - expected).norm(), 1e-12);
  EXPECT_NEAR(s.outliers.norm(), 1.0, 1e-12);
  // No random rank-2 competitor does better.
  std::mt19937_64 rng(3);
  for (int k = 0; k < 2000; ++k) {
    const Eigen::MatrixXd c = random_matrix(rng, 3, 2) * random_matrix(rng, 2, 3);
    EXPECT_GE((m - c).norm(), 1.0);
  }
}

TEST(LowRank, FullRankReproducesInput) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd m = random_matrix(rng, 7, 5);
  EXPECT_LE(truncated_low_rank(m, 5).outliers.norm(), 1e-10 * m.norm());
}

TEST(LowRank, ReconstructionAndSpectrumInvariants) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd m = random_matrix(rng, 30, 18);
    for (const std::size_t r : {1u, 4u, 9u}) {
      const LowRankSplit s = truncated_low_rank(m, r);
      EXPECT_LE((s.low_rank + s.outliers - m).norm(), 1e-9 * m.norm());
      Eigen::JacobiSVD<Eigen::MatrixXd> check(s.low_rank);
      const auto rank = (check.singularValues().array() > 1e-9 * check.singularValues()(0)).count();
      EXPECT_LE(static_cast<std::size_t>(rank), r);
      for (Eigen::Index i = 1; i < s.singular_values.size(); ++i)
        EXPECT_LE(s.singular_values(i), s.singular_values(i - 1));
      EXPECT_GE(s.singular_values.minCoeff(), 0.0);
    }
  }
}

TEST(LowRank, BeatsRandomCompetitors) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd m = random_matrix(rng, 40, 25);
    for (const std::size_t r : {1u, 3u, 7u}) {
      const double best = truncated_low_rank(m, r).outliers.norm();
      const auto k = static_cast<Eigen::Index>(r);
      for (int c = 0; c < 100; ++c) {
        const Eigen::MatrixXd competitor = random_matrix(rng, 40, k) * random_matrix(rng, k, 25);
        const double scale = (competitor.cwiseProduct(m)).sum() / competitor.squaredNorm();
        EXPECT_LT(best, (m - scale * competitor).norm());
      }
    }
  }
}

TEST(LowRank, RejectsBadRankAndNonFiniteInput) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(4, 3);
  EXPECT_THROW(truncated_low_rank(m, 0), RankError);
  EXPECT_THROW(truncated_low_rank(m, 4), RankError);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(truncated_low_rank(m, 1), DataError);
}

TEST(Knee, ExampleSpectrum) {
  const std::vector<double> s = {10, 9, 8, 0.1, 0.09, 0.08, 0.07};
  EXPECT_EQ(knee_rank(s), 3u);
}

TEST(Knee, GeometricDecayStaysInRangeAndZerosAreFloored) {
  std::vector<double> s;
  for (int k = 0; k < 20; ++k) s.push_back(std::pow(0.5, k));
  const auto r = knee_rank(s);
  EXPECT_GE(r, 1u);
  EXPECT_LE(r, 20u);
  const std::vector<double> with_zeros = {5, 4, 3, 0, 0, 0};
  EXPECT_EQ(knee_rank(with_zeros), 3u);
}

TEST(Knee, RejectsDegenerateSpectra) {
  EXPECT_THROW(knee_rank(std::vector<double>{1, 0.5}), DegenerateSpectrumError);
  EXPECT_THROW(knee_rank(std::vector<double>{0, 0, 0}), DegenerateSpectrumError);
}

TEST(Energies, ZeroAndUnitColumns) {
  LowRankSplit s;
  s.outliers = Eigen::MatrixXd::Zero(4, 3);
  for (const double e : outlier_energies(s)) EXPECT_EQ(e, 0.0);
  s.outliers(2, 0) = 1.0;
  EXPECT_EQ(outlier_energies(s), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Energies, MatchProjectionResiduals) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd m = random_matrix(rng, 20, 14);
    const std::size_t r = 1 + static_cast<std::size_t>(k % 6);
    const auto energies = outlier_energies(truncated_low_rank(m, r));
    const auto oracle = projector_residuals(m, r);
    for (std::size_t c = 0; c < energies.size(); ++c)
      EXPECT_NEAR(energies[c], oracle[c], 1e-9 * std::max(oracle[c], 1e-300));
  }
}

TEST(Energies, ScaleAndPermutationEquivariance) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd m = random_matrix(rng, 25, 12);
  const auto base = outlier_energies(truncated_low_rank(m, 3));
  const auto scaled = outlier_energies(truncated_low_rank(7.5 * m, 3));
  for (std::size_t c = 0; c < base.size(); ++c) EXPECT_NEAR(scaled[c], 56.25 * base[c], 1e-9 * scaled[c]);
  EXPECT_EQ(salient_columns(base, 0.25), salient_columns(scaled, 0.25));

  std::vector<Eigen::Index> order(12);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd permuted(25, 12);
  for (Eigen::Index c = 0; c < 12; ++c) permuted.col(c) = m.col(order[static_cast<std::size_t>(c)]);
  const auto perm = outlier_energies(truncated_low_rank(permuted, 3));
  for (Eigen::Index c = 0; c < 12; ++c)
    EXPECT_NEAR(perm[static_cast<std::size_t>(c)], base[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])], 1e-9);
  std::vector<std::size_t> mapped;
  for (const auto c : salient_columns(perm, 0.25)) mapped.push_back(static_cast<std::size_t>(order[c]));
  std::sort(mapped.begin(), mapped.end());
  EXPECT_EQ(mapped, salient_columns(base, 0.25));
}

TEST(Salient, ThresholdExamples) {
  EXPECT_EQ(salient_columns(std::vector<double>{10, 1, 1, 4}, 0.25), (std::vector<std::size_t>{0, 3}));
  EXPECT_TRUE(salient_columns(std::vector<double>{0, 0, 0}, 0.25).empty());
  EXPECT_TRUE(salient_columns(std::vector<double>{1, 5, 2}, 1.0).empty());
  EXPECT_EQ(salient_columns(std::vector<double>{2, 2, 2}, 0.99).size(), 3u);
  EXPECT_TRUE(salient_columns(std::vector<double>{2, 2, 2}, 1.0).empty());
}

TEST(SaliencyMap, CountsSalientSnapshots) {
  // Eight regions share one spatial pattern; region 0 carries an orthogonal
  // anomaly in snapshots 0..5 and region 1 in snapshots 6..10.
  const std::size_t p = 5, nodes = p * p, tw = 11;
  std::vector<double> common(nodes), spike(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) common[k] = std::sin(0.3 * static_cast<double>(k)) + 1.0;
  spike[7] = 5.0;
  std::vector<std::vector<double>> blocks(9);
  for (std::size_t r = 0; r < 8; ++r) {
    blocks[r].resize(nodes * tw);
    for (std::size_t t = 0; t < tw; ++t)
      for (std::size_t k = 0; k < nodes; ++k) {
        double v = (1.0 + 0.1 * static_cast<double>(r) + 0.01 * static_cast<double>(t)) * common[k];
        if ((r == 0 && t < 6) || (r == 1 && t >= 6)) v += spike[k];
        blocks[r][t * nodes + k] = v;
      }
  }
  const auto w = make_windows(3, p, tw, blocks);  // region 8 inactive
  const SaliencyMap map = saliency_map(w, RankPolicy::fixed(1), 0.25);
  EXPECT_DOUBLE_EQ(*map.at(0, 0), 6.0 / 11.0);
  EXPECT_DOUBLE_EQ(*map.at(1, 0), 5.0 / 11.0);
  EXPECT_FALSE(map.at(2, 2).has_value());
  for (const auto& v : map.values) {
    if (!v) continue;
    EXPECT_GE(*v, 0.0);
    EXPECT_LE(*v, 1.0);
    EXPECT_NEAR(*v * 11.0, std::round(*v * 11.0), 1e-12);
  }
  EXPECT_EQ(map.rank_used, 1u);
  EXPECT_EQ(map.leading_spectrum.size(), 8u);
  EXPECT_EQ(classify(map, 0.5).size(), 1u);
  EXPECT_EQ(classify(map, 0.4).size(), 2u);
}

TEST(SaliencyMap, AutomaticRankUsesFirstSnapshotKnee) {
  std::mt19937_64 rng(10);
  std::vector<std::vector<double>> blocks(9, std::vector<double>(16 * 2));
  const Eigen::MatrixXd low = random_matrix(rng, 16, 2) * random_matrix(rng, 2, 9);
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t k = 0; k < 16; ++k)
        blocks[r][t * 16 + k] = low(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
  const auto w = make_windows(3, 4, 2, blocks);
  const SaliencyMap autom = saliency_map(w, RankPolicy::automatic(), 0.25);
  EXPECT_EQ(autom.rank_used, 2u);
  const SaliencyMap fixed = saliency_map(w, RankPolicy::fixed(4), 0.25);
  EXPECT_EQ(fixed.rank_used, 4u);
}

TEST(Classify, ThresholdExamples) {
  SaliencyMap map;
  map.regions_x = 2;
  map.regions_y = 1;
  map.window_len = 10;
  map.values = {0.9, 0.3};
  EXPECT_EQ(classify(map, 0.5).size(), 1u);
  EXPECT_EQ(classify(map, 0.5).front().i, 0u);
  EXPECT_TRUE(classify(map, 0.9000001).empty());
  EXPECT_THROW(classify(map, 0.0), DataError);
}

TEST(Export, CsvAndPgmMarkInactiveRegions) {
  SaliencyMap map;
  map.regions_x = 2;
  map.regions_y = 2;
  map.window_len = 4;
  map.values = {0.25, std::nullopt, 1.0, 0.0};
  std::ostringstream csv;
  write_saliency_csv(map, csv);
  EXPECT_EQ(csv.str(), "0.25,1\nNA,0\n");
  wavesal::testing::TempDir dir;
  const auto path = dir.path() / "map.pgm";
  write_saliency_pgm(map, path);
  const std::string img = wavesal::testing::read_file(path);
  EXPECT_EQ(img, std::string("P5\n2 2\n255\n") + char(64) + char(255) + char(255) + char(0));
  const std::string mask = wavesal::testing::read_file(dir.path() / "map.pgm.mask.pgm");
  EXPECT_EQ(mask.substr(mask.size() - 4), std::string() + char(255) + char(0) + char(255) + char(255));
}
