#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "baca/error.hpp"
#include "baca/graphon.hpp"
#include "baca/rng.hpp"
#include "test_support.hpp"

using baca::Graph;
using baca::Graphon;

TEST(Graphon, ValidatesMatrix) {
  Eigen::MatrixXd asym(2, 2);
  asym << 0.1, 0.2, 0.3, 0.4;
  EXPECT_THROW(Graphon{asym}, baca::ValidationError);
  EXPECT_THROW(Graphon{Eigen::MatrixXd::Constant(2, 2, 1.5)}, baca::ValidationError);
  EXPECT_THROW(Graphon{Eigen::MatrixXd::Zero(2, 3)}, baca::ValidationError);
  EXPECT_EQ(Graphon::constant(4, 0.3).resolution(), 4);
}

TEST(AlignedAdjacency, SortsByDegreeAndPads) {
  // Star centred on node 2: after sorting the hub is row 0.
  Graph star(3, {{2, 0}, {2, 1}});
  Eigen::MatrixXd a = baca::aligned_adjacency(star, 4);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  expected(0, 1) = expected(1, 0) = expected(0, 2) = expected(2, 0) = 1.0;
  EXPECT_EQ(a, expected);
}

TEST(AlignedAdjacency, BlockAveragesLargerGraphs) {
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  Eigen::MatrixXd a = baca::aligned_adjacency(k4, 2);
  // Each 2x2 diagonal block holds one edge pair and two zero diagonal cells.
  EXPECT_DOUBLE_EQ(a(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
}

TEST(Usvt, KeepsLargeEigenvaluesAndClips) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(10, 10, 0.4);
  Eigen::MatrixXd out = baca::usvt(m, 0.2);
  EXPECT_LT((out - m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(baca::usvt(Eigen::MatrixXd::Constant(3, 3, 0.01), 1.0), Eigen::MatrixXd::Zero(3, 3));
}

TEST(EstimateGraphon, EmptyInputAndBadResolution) {
  std::vector<Graph> none;
  EXPECT_THROW(baca::estimate_graphon(none, 4), baca::ValidationError);
  std::vector<Graph> one = {Graph(3, {{0, 1}})};
  EXPECT_THROW(baca::estimate_graphon(one, 1), baca::ValidationError);
}

TEST(EstimateGraphon, CompleteGraphsGiveOnesOffDiagonal) {
  std::vector<Graph> graphs;
  for (int n = 5; n < 8; ++n) {
    std::vector<baca::Edge> e;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) e.emplace_back(u, v);
    graphs.emplace_back(n, e);
  }
  Graphon w = baca::estimate_graphon(graphs, 5, 0.2);
  EXPECT_EQ(w.resolution(), 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      EXPECT_GE(w(i, j), 0.0);
      EXPECT_LE(w(i, j), 1.0);
    }
  }
}

TEST(EstimateGraphon, OutputAlwaysValidOnRandomInputs) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(2, 25);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Graph> graphs;
    const int count = 1 + trial % 6;
    for (int i = 0; i < count; ++i) graphs.push_back(baca::test::random_graph(size(rng), density(rng), rng));
    const int res = baca::default_resolution(graphs);
    Graphon w = baca::estimate_graphon(graphs, res, 0.2);
    EXPECT_TRUE(w.matrix().isApprox(w.matrix().transpose(), 0.0));
    EXPECT_GE(w.matrix().minCoeff(), 0.0);
    EXPECT_LE(w.matrix().maxCoeff(), 1.0);
  }
}

TEST(EstimateGraphon, RecoversBlockOrdering) {
  // Dense block on half the nodes: after degree sorting it sits top-left.
  Eigen::MatrixXd blocks(2, 2);
  blocks << 0.9, 0.1, 0.1, 0.2;
  Eigen::MatrixXd m(20, 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) m(i, j) = blocks(i / 10, j / 10);
  Graphon truth(m);
  baca::Rng rng = baca::make_rng(4);
  std::vector<Graph> graphs;
  for (int i = 0; i < 100; ++i) graphs.push_back(baca::sample_graph(truth, 20, rng, 4));
  Graphon est = baca::estimate_graphon(graphs, 20, 0.2);
  const double top_left = est.matrix().topLeftCorner(10, 10).mean();
  const double bottom_right = est.matrix().bottomRightCorner(10, 10).mean();
  EXPECT_GT(top_left, bottom_right + 0.3);
}

TEST(DefaultResolution, MedianClamped) {
  std::vector<Graph> small = {Graph(3, {}), Graph(4, {}), Graph(5, {})};
  EXPECT_EQ(baca::default_resolution(small), 8);
  std::vector<Graph> mid = {Graph(20, {}), Graph(30, {}), Graph(25, {})};
  EXPECT_EQ(baca::default_resolution(mid), 25);
  std::vector<Graph> big = {Graph(100, {})};
  EXPECT_EQ(baca::default_resolution(big), 64);
}

TEST(Mixup, IsExactlyLinear) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Graphon a(baca::test::random_symmetric(6, rng));
    Graphon b(baca::test::random_symmetric(6, rng));
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Graphon m = baca::mixup(a, b, lambda);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) EXPECT_EQ(m(i, j), lambda * a(i, j) + (1.0 - lambda) * b(i, j));
  }
}

TEST(Mixup, RejectsBadArguments) {
  EXPECT_THROW(baca::mixup(Graphon::constant(3, 0.1), Graphon::constant(4, 0.1), 0.5),
               baca::ValidationError);
  EXPECT_THROW(baca::mixup(Graphon::constant(3, 0.1), Graphon::constant(3, 0.1), 1.5),
               baca::ValidationError);
}

TEST(RandomSize, Range) {
  baca::Rng rng = baca::make_rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(baca::random_size(2, rng), 2);
  EXPECT_THROW(baca::random_size(1, rng), baca::ValidationError);
}

TEST(RandomSize, UniformFrequencies) {
  // Each of {2..10} within 3 sigma of 1/9 over 10000 draws.
  baca::Rng rng = baca::make_rng(7);
  std::vector<int> counts(11, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[baca::random_size(10, rng)];
  const double p = 1.0 / 9.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (int r = 2; r <= 10; ++r) EXPECT_LT(std::abs(counts[r] - draws * p), 3 * sigma) << r;
}

TEST(RandomSize, ReproducibleUnderSeed) {
  baca::Rng a = baca::make_rng(12), b = baca::make_rng(12);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(baca::random_size(10, a), baca::random_size(10, b));
}

TEST(SampleGraph, DegenerateGraphons) {
  baca::Rng rng = baca::make_rng(3);
  Graph full = baca::sample_graph(Graphon::constant(6, 1.0), 4, rng, 4);
  EXPECT_EQ(full.num_edges(), 6u);
  EXPECT_EQ(baca::sample_graph(Graphon::constant(6, 0.0), 5, rng, 4).num_edges(), 0u);
  EXPECT_THROW(baca::sample_graph(Graphon::constant(6, 0.5), 7, rng, 4), baca::ValidationError);
  EXPECT_THROW(baca::sample_graph(Graphon::constant(6, 0.5), 1, rng, 4), baca::ValidationError);
}

TEST(SampleGraph, CarriesDegreeFeatures) {
  baca::Rng rng = baca::make_rng(3);
  Graph g = baca::sample_graph(Graphon::constant(8, 0.5), 8, rng, 5);
  ASSERT_TRUE(g.has_features());
  EXPECT_EQ(*g.features(), baca::degree_features(g, 5));
}

TEST(SampleGraph, EdgeDensityConcentrates) {
  // 5000 samples of r = 20 from constant 0.3: mean density within 3 sigma.
  baca::Rng rng = baca::make_rng(10);
  const int samples = 5000, r = 20;
  const double pairs = r * (r - 1) / 2.0;
  double edges = 0.0;
  for (int i = 0; i < samples; ++i) {
    edges += static_cast<double>(baca::sample_graph(Graphon::constant(30, 0.3), r, rng, 4).num_edges());
  }
  const double trials = samples * pairs;
  EXPECT_LT(std::abs(edges / trials - 0.3), 3.0 * std::sqrt(0.3 * 0.7 / trials));
}

TEST(SampleGraph, ExpectedEdgeCountMatchesChosenGrid) {
  // Full-size samples use the whole grid, so E[edges] = sum_{i<j} W(i,j).
  std::mt19937_64 gen(6);
  Graphon w(baca::test::random_symmetric(10, gen));
  double expected = 0.0, variance = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) {
      expected += w(i, j);
      variance += w(i, j) * (1.0 - w(i, j));
    }
  baca::Rng rng = baca::make_rng(2);
  const int samples = 4000;
  double total = 0.0;
  for (int s = 0; s < samples; ++s) total += static_cast<double>(baca::sample_graph(w, 10, rng, 4).num_edges());
  EXPECT_LT(std::abs(total / samples - expected), 3.0 * std::sqrt(variance / samples));
}

TEST(SampleGraphLatent, DensityMatchesGraphonMean) {
  Eigen::MatrixXd m(2, 2);
  m << 0.7, 0.1, 0.1, 0.7;
  Graphon w(m);
  baca::Rng rng = baca::make_rng(8);
  double edges = 0.0, pairs = 0.0;
  for (int i = 0; i < 400; ++i) {
    Graph g = baca::sample_graph_latent(w, 30, rng);
    EXPECT_FALSE(g.has_features());
    edges += static_cast<double>(g.num_edges());
    pairs += 30 * 29 / 2.0;
  }
  EXPECT_NEAR(edges / pairs, 0.4, 0.01);
}

TEST(GraphonCsv, FullPrecisionRows) {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 1.0 / 3.0, 1.0 / 3.0, 1.0;
  std::ostringstream out;
  baca::write_graphon_csv(Graphon(m), out);
  std::istringstream in(out.str());
  std::string row;
  std::getline(in, row);
  const auto comma = row.find(',');
  EXPECT_EQ(std::stod(row.substr(comma + 1)), 1.0 / 3.0);
  std::getline(in, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 1);
}
