#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support.hpp"

using namespace msbtree;

TEST(Entropy, UniformPairIsLogTwo) {
  const double w[] = {0.5, 0.5};
  EXPECT_NEAR(entropy(w), std::log(2.0), 1e-15);
}

TEST(Entropy, PointMassIsZero) {
  const double w[] = {1.0, 0.0, 0.0};
  EXPECT_EQ(entropy(w), 0.0);
}

TEST(Entropy, QuarterThreeQuarters) {
  const double w[] = {0.25, 0.75};
  EXPECT_NEAR(entropy(w), 0.5623351446188083, 1e-15);
}

TEST(Entropy, MeasureOverloadMatchesWeights) {
  const auto m = DiscreteMeasure::from_masses({{0.0}, {1.0}}, std::vector<double>{1.0, 3.0});
  EXPECT_NEAR(entropy(m), 0.5623351446188083, 1e-15);
}

TEST(Entropy, PermutationAndScaleInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> w(1 + rep % 9);
    for (auto& x : w) x = u(rng);
    w[0] += 0.01;
    const auto p = normalize(w);
    auto shuffled = p;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(entropy(p), entropy(shuffled), 1e-13);
    auto scaled = w;
    for (auto& x : scaled) x *= 37.5;
    EXPECT_NEAR(entropy(normalize(scaled)), entropy(p), 1e-13);
    EXPECT_GE(entropy(p), 0.0);
    EXPECT_LE(entropy(p), std::log(static_cast<double>(w.size())) + 1e-13);
  }
}

TEST(Entropy, UniformAttainsLogN) {
  for (std::size_t n = 1; n <= 20; ++n) {
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    EXPECT_NEAR(entropy(w), std::log(static_cast<double>(n)), 1e-13);
  }
}

TEST(Normalize, SymmetricSplit) {
  const double w[] = {2.0, 2.0};
  EXPECT_EQ(normalize(w), (std::vector<double>{0.5, 0.5}));
}

TEST(Normalize, LinearScaling) {
  const double w[] = {1.0, 0.0, 3.0};
  EXPECT_EQ(normalize(w), (std::vector<double>{0.25, 0.0, 0.75}));
}

TEST(Normalize, AllZeroRejected) {
  const double w[] = {0.0, 0.0};
  EXPECT_THROW(normalize(w), ValidationError);
}

TEST(Normalize, NegativeEntryNamesIndex) {
  const double w[] = {1.0, 2.0, -1.0};
  try {
    normalize(w);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos) << e.what();
  }
}

TEST(Normalize, NonFiniteRejected) {
  const double w[] = {1.0, std::nan("")};
  EXPECT_THROW(normalize(w), ValidationError);
}

TEST(DiscreteMeasure, RejectsBadInput) {
  EXPECT_THROW(DiscreteMeasure({}, {}), ValidationError);
  EXPECT_THROW(DiscreteMeasure({{0.0}}, {0.5}), ValidationError);
  EXPECT_THROW(DiscreteMeasure({{0.0}, {1.0}}, {1.0}), ValidationError);
  EXPECT_THROW(DiscreteMeasure({{0.0}, {1.0, 2.0}}, {0.5, 0.5}), ValidationError);
  EXPECT_THROW(DiscreteMeasure({{0.0}, {1.0}}, {1.5, -0.5}), ValidationError);
  EXPECT_THROW(DiscreteMeasure({{INFINITY}}, {1.0}), ValidationError);
}

TEST(DiscreteMeasure, AcceptsSumWithinTolerance) {
  EXPECT_NO_THROW(DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5 + 5e-13}));
  EXPECT_THROW(DiscreteMeasure({{0.0}, {1.0}}, {0.5, 0.5 + 1e-10}), ValidationError);
}

TEST(DiscreteMeasure, PrunedDropsZeroWeights) {
  const DiscreteMeasure m({{0.0}, {1.0}, {2.0}}, {0.25, 0.0, 0.75});
  EXPECT_TRUE(m.has_zero_weights());
  const auto p = m.pruned();
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.point(1), (Point{2.0}));
  EXPECT_FALSE(p.has_zero_weights());
}

TEST(MeasureCollection, NeedsTwoMeasuresOfSameDimension) {
  EXPECT_THROW(MeasureCollection({DiscreteMeasure::dirac({0.0})}), ValidationError);
  EXPECT_THROW(MeasureCollection({DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({0.0, 1.0})}),
               ValidationError);
  const MeasureCollection c({DiscreteMeasure::dirac({0.0}), DiscreteMeasure::uniform({{1.0}, {2.0}, {3.0}})});
  EXPECT_EQ(c.shape(), (std::vector<std::size_t>{1, 3}));
  EXPECT_NEAR(c.entropies()[1], std::log(3.0), 1e-15);
}

TEST(SampleGmm, SingleComponentUniformWeights) {
  const GmmComponent c[] = {{0.0, 1.0, 1.0}};
  const auto m = sample_gmm(c, 3, Interval{}, std::uint64_t{42});
  ASSERT_EQ(m.size(), 3u);
  for (double w : m.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
}

TEST(SampleGmm, TwoComponentsStayInInterval) {
  const GmmComponent c[] = {{-6.0, 3.0, 0.4}, {5.0, 4.0, 0.6}};
  const auto m = sample_gmm(c, 25, Interval{-10.0, 10.0}, std::uint64_t{7});
  ASSERT_EQ(m.size(), 25u);
  for (const auto& p : m.support()) {
    EXPECT_GE(p[0], -10.0);
    EXPECT_LE(p[0], 10.0);
  }
}

TEST(SampleGmm, FarComponentIsClamped) {
  const GmmComponent c[] = {{100.0, 0.1, 1.0}};
  const auto m = sample_gmm(c, 4, Interval{-1.0, 1.0}, std::uint64_t{3});
  for (const auto& p : m.support()) EXPECT_EQ(p[0], 1.0);
}

TEST(SampleGmm, DeterministicUnderSeed) {
  const GmmComponent c[] = {{0.0, 2.0, 1.0}, {3.0, 1.0, 2.0}};
  EXPECT_EQ(sample_gmm(c, 25, Interval{}, std::uint64_t{99}), sample_gmm(c, 25, Interval{}, std::uint64_t{99}));
  EXPECT_NE(sample_gmm(c, 25, Interval{}, std::uint64_t{99}), sample_gmm(c, 25, Interval{}, std::uint64_t{100}));
}

TEST(SampleGmm, RejectsBadInput) {
  EXPECT_THROW(sample_gmm({}, 3, Interval{}, std::uint64_t{1}), ValidationError);
  const GmmComponent c[] = {{0.0, 1.0, 1.0}};
  EXPECT_THROW(sample_gmm(c, 0, Interval{}, std::uint64_t{1}), ValidationError);
  EXPECT_THROW(sample_gmm(c, 3, Interval{1.0, 1.0}, std::uint64_t{1}), ValidationError);
  const GmmComponent bad[] = {{0.0, 0.0, 1.0}};
  EXPECT_THROW(sample_gmm(bad, 3, Interval{}, std::uint64_t{1}), ValidationError);
}

TEST(ImageToMeasure, RowOfTwo) {
  const auto m = image_to_measure(Matrix<double>{{1.0, 1.0}});
  EXPECT_EQ(m.support(), (std::vector<Point>{{0.0, 0.0}, {0.0, 1.0}}));
  EXPECT_EQ(std::vector<double>(m.weights().begin(), m.weights().end()), (std::vector<double>{0.5, 0.5}));
}

TEST(ImageToMeasure, SinglePixelIsDirac) {
  const auto m = image_to_measure(Matrix<double>{{4.0, 0.0}, {0.0, 0.0}});
  EXPECT_EQ(m, DiscreteMeasure::dirac({0.0, 0.0}));
}

TEST(ImageToMeasure, ConstantImageIsUniform) {
  const auto m = image_to_measure(Matrix<double>{{1.0, 1.0}, {1.0, 1.0}});
  ASSERT_EQ(m.size(), 4u);
  for (double w : m.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_EQ(m.point(3), (Point{1.0, 1.0}));
}

TEST(ImageToMeasure, RejectsBlankOrNegative) {
  EXPECT_THROW(image_to_measure(Matrix<double>{{0.0, 0.0}}), ValidationError);
  EXPECT_THROW(image_to_measure(Matrix<double>{{1.0, -1.0}}), ValidationError);
}
