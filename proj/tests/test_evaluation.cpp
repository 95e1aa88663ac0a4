#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "baca/error.hpp"
#include "baca/evaluation.hpp"

namespace {

// Pairwise Mann-Whitney count in doubled units, so ties stay integral.
double brute_force_auc(const std::vector<double>& s, const std::vector<int>& l) {
  double twice_wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j] != 0) continue;
      pairs += 1.0;
      twice_wins += s[i] > s[j] ? 2.0 : s[i] == s[j] ? 1.0 : 0.0;
    }
  }
  return twice_wins / (2.0 * pairs);
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_EQ(baca::auc(std::vector<double>{0.1, 0.9}, std::vector<int>{0, 1}), 1.0);
  EXPECT_EQ(baca::auc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}), 0.0);
  EXPECT_EQ(baca::auc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int>{0, 1, 1}), 0.5);
  EXPECT_EQ(baca::auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
}

TEST(Auc, MatchesPairwiseCountWithTies) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(2, 50), level(0, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (int i = 0; i < n; ++i) {
      s[i] = level(rng) * 0.25;
      l[i] = static_cast<int>(rng() & 1U);
    }
    l[0] = 0;
    l[1] = 1;
    EXPECT_EQ(baca::auc(s, l), brute_force_auc(s, l));
  }
}

TEST(Auc, InvariantUnderMonotoneMaps) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> s(40), mapped(40);
  std::vector<int> l(40);
  for (int i = 0; i < 40; ++i) {
    l[i] = i % 2;
    s[i] = n(rng) + 0.5 * l[i];
    mapped[i] = std::exp(3.0 * s[i]) + 7.0;
  }
  EXPECT_EQ(baca::auc(s, l), baca::auc(mapped, l));
}

TEST(Auc, Errors) {
  EXPECT_THROW(baca::auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), baca::ValidationError);
  EXPECT_THROW(baca::auc(std::vector<double>{0.1}, std::vector<int>{0, 1}), baca::ValidationError);
  EXPECT_THROW(baca::auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 2}), baca::ValidationError);
}

TEST(Kl, IdenticalListsGiveZero) {
  const std::vector<double> a = {0.1, 0.4, 0.4, 0.9, 0.2};
  EXPECT_NEAR(baca::kl_divergence(a, a), 0.0, 1e-15);
  const std::vector<double> c = {2.0, 2.0};
  EXPECT_EQ(baca::kl_divergence(c, c), 0.0);
}

TEST(Kl, NonNegativeAndGrowsWithSeparation) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> id(500), near(500), far(500);
  for (int i = 0; i < 500; ++i) {
    id[i] = n(rng);
    near[i] = n(rng) + 0.5;
    far[i] = n(rng) + 3.0;
  }
  const double k_near = baca::kl_divergence(id, near);
  const double k_far = baca::kl_divergence(id, far);
  EXPECT_GE(k_near, 0.0);
  EXPECT_GT(k_far, k_near);
}

TEST(Kl, ByLabelMatchesDirectCall) {
  const std::vector<double> s = {0.1, 0.7, 0.3, 0.9, 0.8};
  const std::vector<int> l = {0, 1, 0, 1, 1};
  EXPECT_EQ(baca::kl_by_label(s, l),
            baca::kl_divergence(std::vector<double>{0.1, 0.3}, std::vector<double>{0.7, 0.9, 0.8}));
  EXPECT_THROW(baca::kl_divergence(std::vector<double>{}, s), baca::ValidationError);
  EXPECT_THROW(baca::kl_divergence(s, std::vector<double>{NAN}), baca::ValidationError);
}

TEST(Evaluate, ReportFields) {
  std::vector<baca::ScoreRecord> recs;
  for (int i = 0; i < 10; ++i) {
    baca::ScoreRecord r;
    r.label = i % 2;
    r.s_pre = i;
    r.s_baca = r.label == 1 ? 10.0 + i : i;
    recs.push_back(r);
  }
  const auto rep = baca::evaluate(recs);
  EXPECT_EQ(rep.n_id, 5u);
  EXPECT_EQ(rep.n_ood, 5u);
  EXPECT_EQ(rep.auc_baca, 1.0);
  EXPECT_EQ(rep.auc_pre, 0.6);
  EXPECT_EQ(rep.to_json()["auc_baca"], 1.0);
  recs[3].label.reset();
  EXPECT_THROW(baca::evaluate(recs), baca::ValidationError);
}

TEST(ScoreCsv, RoundTripIsExact) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<baca::ScoreRecord> recs(25);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i] = {n(rng), n(rng), n(rng), n(rng), n(rng), {}};
    if (i % 3 != 0) recs[i].label = static_cast<int>(i % 2);
  }
  std::ostringstream out;
  baca::write_scores(recs, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "s_pre,s_in,s_out,s_attn,s_baca,label");
  std::istringstream in(out.str());
  const auto back = baca::read_scores(in);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].s_pre, recs[i].s_pre);
    EXPECT_EQ(back[i].s_baca, recs[i].s_baca);
    EXPECT_EQ(back[i].label, recs[i].label);
  }
}

TEST(ScoreCsv, ParseErrorsCarryLineNumbers) {
  std::istringstream bad("s_pre,s_in,s_out,s_attn,s_baca,label\n1,2,3,4,5,0\n1,2,x,4,5,1\n");
  try {
    baca::read_scores(bad);
    FAIL() << "expected ParseError";
  } catch (const baca::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream header("a,b\n");
  EXPECT_THROW(baca::read_scores(header), baca::ParseError);
  std::istringstream label("s_pre,s_in,s_out,s_attn,s_baca,label\n1,2,3,4,5,2\n");
  EXPECT_THROW(baca::read_scores(label), baca::ParseError);
}
