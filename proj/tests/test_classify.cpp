#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "commpool/classify/mlp.hpp"
#include "commpool/diffnum/gradcheck.hpp"

using namespace commpool;
using namespace commpool::classify;
using diffnum::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

}  // namespace

TEST(Readout, SingleRow) { EXPECT_EQ(global_readout(Matrix({{1.5, -2.0}})), (std::vector<double>{1.5, -2.0})); }

TEST(Readout, TwoRows) { EXPECT_EQ(global_readout(Matrix({{0, 2}, {2, 0}})), (std::vector<double>{1.0, 1.0})); }

TEST(Readout, EmptyRejected) { EXPECT_THROW(global_readout(Matrix(0, 3)), ContractError); }

TEST(ReadoutProperty, PermutationInvariant) {
  // Integer-valued rows make every partial sum exact, so any order agrees bit for bit.
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t l = 1 + rng.index(10), h = 1 + rng.index(6);
    Matrix z(l, h);
    for (double& x : z.data()) x = static_cast<double>(static_cast<int>(rng.index(2001)) - 1000);
    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix p(l, h);
    for (std::size_t i = 0; i < l; ++i) std::copy_n(z.row_span(perm[i]).begin(), h, p.row_span(i).begin());
    EXPECT_EQ(global_readout(z), global_readout(p));
  }
}

TEST(ReadoutProperty, PermutationInvariantReals) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t l = 1 + rng.index(10), h = 1 + rng.index(6);
    const Matrix z = random_matrix(l, h, rng);
    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Matrix p(l, h);
    for (std::size_t i = 0; i < l; ++i) std::copy_n(z.row_span(perm[i]).begin(), h, p.row_span(i).begin());
    const auto a = global_readout(z), b = global_readout(p);
    for (std::size_t c = 0; c < h; ++c) EXPECT_NEAR(a[c], b[c], 1e-14);
  }
}

TEST(MlpForward, ZeroParametersGiveUniform) {
  Rng rng(3);
  auto p = init_mlp(4, 3, {}, rng);
  for (auto* q : p.trainable()) q->value.fill(0.0);
  const auto probs = mlp_forward(std::vector<double>{1, 2, 3, 4}, p);
  for (double x : probs) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(MlpForward, ProbabilitiesSumToOne) {
  Rng rng(4);
  const auto p = init_mlp(5, 4, {}, rng);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(5);
    for (double& v : x) v = 3.0 * rng.normal();
    const auto probs = mlp_forward(x, p);
    EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(MlpForward, LogitShiftInvariance) {
  Rng rng(5);
  auto p = init_mlp(3, 4, {}, rng);
  const std::vector<double> x{0.3, -1.0, 2.0};
  const auto before = mlp_forward(x, p);
  for (double& b : p.b3.value.data()) b += 7.25;
  const auto after = mlp_forward(x, p);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(before[k], after[k], 1e-15);
}

TEST(MlpForward, ShapeMismatch) {
  Rng rng(6);
  EXPECT_THROW(mlp_forward(std::vector<double>{1, 2}, init_mlp(3, 2, {}, rng)), ShapeError);
}

TEST(MlpGradients, MatchFiniteDifferences) {
  Rng rng(7);
  MlpConfig cfg;
  cfg.hidden1 = 6;
  cfg.hidden2 = 5;
  for (int t = 0; t < 5; ++t) {
    auto p = init_mlp(3, 3, cfg, rng);
    for (auto* q : {&p.b1, &p.b2, &p.b3})
      for (double& b : q->value.data()) b = 0.1 * rng.normal();
    const std::vector<int> y{0, 1, 2, 1};
    diffnum::Tape tape;
    const auto net = build_mlp(tape, p, tape.input(random_matrix(4, 3, rng)));
    const auto loss = build_cross_entropy(tape, net.probs, y);
    auto ps = p.trainable();
    for (const auto& r : diffnum::check_tape_gradients(tape, loss, ps)) EXPECT_LT(r.max_relative_error, 1e-5) << r.name;
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(cross_entropy(std::vector<double>{0, 1, 0}, 1), 0.0);
  EXPECT_DOUBLE_EQ(cross_entropy(std::vector<double>{0.5, 0.5}, 0), std::log(2.0));
  EXPECT_DOUBLE_EQ(cross_entropy(std::vector<double>(4, 0.25), 3), std::log(4.0));
  EXPECT_THROW(cross_entropy(std::vector<double>{0.5, 0.5}, 2), ContractError);
  EXPECT_THROW(cross_entropy(std::vector<double>{0.5, 0.5}, -1), ContractError);
}

TEST(CrossEntropyProperty, NonNegativeZeroOnlyAtCertainty) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(1 + rng.index(5));
    double s = 0.0;
    for (double& x : p) s += (x = rng.uniform() + 1e-3);
    for (double& x : p) x /= s;
    const int y = static_cast<int>(rng.index(p.size()));
    const double l = cross_entropy(p, y);
    EXPECT_GE(l, 0.0);
    if (p.size() > 1) EXPECT_GT(l, 0.0);
  }
}

TEST(TrainClassifier, SeparableTwoClassReachesPerfectTrainingAccuracy) {
  Rng rng(9);
  Matrix x(40, 2);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = (y[i] ? 2.0 : -2.0) + 0.3 * rng.normal();
    x(i, 1) = rng.normal();
  }
  MlpConfig cfg;
  cfg.patience = 200;
  const auto res = train_classifier(x, y, x, y, 2, cfg, rng);
  EXPECT_EQ(res.report.accuracy, 1.0);
  EXPECT_EQ(std::accumulate(res.report.class_support.begin(), res.report.class_support.end(), std::size_t{0}), 40u);
}

TEST(TrainClassifier, ShuffledLabelsStayNearChance) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const Matrix xt = random_matrix(120, 4, rng), xv = random_matrix(60, 4, rng);
    std::vector<int> yt(120), yv(60);
    for (int& v : yt) v = static_cast<int>(rng.index(3));
    for (int& v : yv) v = static_cast<int>(rng.index(3));
    const auto res = train_classifier(xt, yt, xv, yv, 3, {}, rng);
    total += evaluate(xv, yv, res.params).accuracy;
  }
  EXPECT_NEAR(total / 5.0, 1.0 / 3.0, 0.15);
}

TEST(TrainClassifier, Deterministic) {
  Rng gen(10);
  const Matrix x = random_matrix(30, 3, gen);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = x(i, 0) > 0 ? 1 : 0;
  MlpConfig cfg;
  cfg.max_epochs = 100;
  Rng r1(4), r2(4);
  const auto a = train_classifier(x, y, x, y, 2, cfg, r1);
  const auto b = train_classifier(x, y, x, y, 2, cfg, r2);
  EXPECT_EQ(a.report.loss_curve, b.report.loss_curve);
  EXPECT_EQ(a.report.best_epoch, b.report.best_epoch);
  EXPECT_EQ(a.params.w1.value, b.params.w1.value);
}

TEST(Evaluate, CountsSumToSetSize) {
  Rng rng(11);
  const auto p = init_mlp(2, 3, {}, rng);
  const Matrix x = random_matrix(17, 2, rng);
  std::vector<int> y(17);
  for (int& v : y) v = static_cast<int>(rng.index(3));
  const auto r = evaluate(x, y, p);
  EXPECT_EQ(std::accumulate(r.class_support.begin(), r.class_support.end(), std::size_t{0}), 17u);
  EXPECT_GE(r.accuracy, 0.0);
  EXPECT_LE(r.accuracy, 1.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(r.class_correct[c], r.class_support[c]);
}
