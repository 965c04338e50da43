#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "userbert/model/encoder.hpp"

using namespace userbert;

namespace {

ModelConfig cfg_of(int layers, int hidden, int heads, int ffn, double dropout = 0.0) {
  ModelConfig cfg;
  cfg.num_layers = layers;
  cfg.hidden = hidden;
  cfg.heads = heads;
  cfg.ffn = ffn;
  cfg.dropout = dropout;
  cfg.attr_dim = 3;
  return cfg;
}

ModelDims tiny_dims() {
  ModelDims d;
  d.long_vocab = {3, 5};
  d.short_vocab = {4};
  d.profile_vocab = {3};
  return d;
}

Parameters<double> make_params(const ModelConfig& cfg, uint64_t seed = 5) {
  Parameters<double> p(cfg, tiny_dims());
  p.init(CounterRng(CounterRng::derive_key({seed, 0})), 0.3);
  return p;
}

Mat<double> random_input(int T, int H, uint64_t seed = 13) {
  CounterRng rng(CounterRng::derive_key({seed, 1}));
  Mat<double> x(T, H);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < H; ++j) x(i, j) = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("softmax rows are positive, normalized, and shift-invariant") {
  Mat<double> z = random_input(4, 6);
  Mat<double> s = nn::softmax_rows(z);
  for (int i = 0; i < 4; ++i) {
    CHECK(s.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.row(i).minCoeff() > 0);
  }
  Mat<double> shifted = z;
  shifted.array() += 1000.0;  // also exercises overflow protection
  CHECK((nn::softmax_rows(shifted) - s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gelu matches reference values of the erf formulation") {
  CHECK(nn::gelu(0.0) == doctest::Approx(0.0));
  CHECK(nn::gelu(1.0) == doctest::Approx(0.8413447460685429));   // x * Phi(x)
  CHECK(nn::gelu(-1.0) == doctest::Approx(-0.15865525393145707));
  CHECK(nn::gelu(10.0) == doctest::Approx(10.0));
  // derivative by central difference
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    double h = 1e-6;
    double num = (nn::gelu(x + h) - nn::gelu(x - h)) / (2 * h);
    CHECK(nn::gelu_grad(x) == doctest::Approx(num).epsilon(1e-6));
  }
}

TEST_CASE("layer_norm output rows have zero mean and unit variance pre-affine") {
  Mat<double> x = random_input(5, 16);
  Mat<double> gain = Mat<double>::Ones(1, 16);
  Mat<double> bias = Mat<double>::Zero(1, 16);
  Mat<double> normed;
  Vec<double> inv_std;
  Mat<double> y = nn::layer_norm(x, gain, bias, &normed, &inv_std);
  CHECK((y - normed).cwiseAbs().maxCoeff() == 0.0);  // unit gain, zero bias
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(y.row(i).mean()) < 1e-10);
    double var = (y.row(i).array() - y.row(i).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps slightly shrinks it
    CHECK(inv_std(i) > 0);
  }
}

TEST_CASE("encoder output shape matches input and is finite") {
  ModelConfig cfg = cfg_of(2, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(6, 8);
  Mat<double> h = encoder_forward<double>(x, p, false, nullptr, nullptr);
  CHECK(h.rows() == 6);
  CHECK(h.cols() == 8);
  CHECK(h.allFinite());
}

TEST_CASE("cached attention rows are probability distributions") {
  ModelConfig cfg = cfg_of(1, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(5, 8);
  EncoderCache<double> cache;
  encoder_forward(x, p, false, nullptr, &cache);
  REQUIRE(cache.layers.size() == 1);
  REQUIRE(cache.layers[0].attn.size() == 2);
  for (const auto& head : cache.layers[0].attn)
    for (int i = 0; i < head.rows(); ++i) {
      CHECK(head.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(head.row(i).minCoeff() >= 0);
    }
}

TEST_CASE("encoder is equivariant to permuting input rows (no position inside)") {
  ModelConfig cfg = cfg_of(2, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(6, 8);
  Mat<double> h = encoder_forward<double>(x, p, false, nullptr, nullptr);

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Mat<double> xp(6, 8);
  for (int i = 0; i < 6; ++i) xp.row(i) = x.row(perm[size_t(i)]);
  Mat<double> hp = encoder_forward<double>(xp, p, false, nullptr, nullptr);
  for (int i = 0; i < 6; ++i)
    CHECK((hp.row(i) - h.row(perm[size_t(i)])).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a uniform-value token attends equally and self-attention is input-dependent") {
  ModelConfig cfg = cfg_of(1, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  // two identical rows must produce identical outputs
  Mat<double> x = random_input(3, 8);
  x.row(2) = x.row(0);
  Mat<double> h = encoder_forward<double>(x, p, false, nullptr, nullptr);
  CHECK((h.row(2) - h.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout: eval mode is deterministic, train mode matches its seed") {
  ModelConfig cfg = cfg_of(2, 8, 2, 16, 0.3);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(5, 8);

  Mat<double> e1 = encoder_forward<double>(x, p, false, nullptr, nullptr);
  Mat<double> e2 = encoder_forward<double>(x, p, false, nullptr, nullptr);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() == 0.0);

  CounterRng r1(CounterRng::derive_key({9, 9}));
  CounterRng r2(CounterRng::derive_key({9, 9}));
  CounterRng r3(CounterRng::derive_key({9, 10}));
  Mat<double> t1 = encoder_forward<double>(x, p, true, &r1, nullptr);
  Mat<double> t2 = encoder_forward<double>(x, p, true, &r2, nullptr);
  Mat<double> t3 = encoder_forward<double>(x, p, true, &r3, nullptr);
  CHECK((t1 - t2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t1 - t3).cwiseAbs().maxCoeff() > 0.0);
  CHECK((t1 - e1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("non-finite input is rejected with a position report") {
  ModelConfig cfg = cfg_of(1, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(3, 8);
  x(1, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(encoder_forward<double>(x, p, false, nullptr, nullptr), ValidationError);
}

TEST_CASE("prediction heads emit one distribution per segment attribute") {
  ModelConfig cfg = cfg_of(1, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(4, 8);
  Mat<double> h = encoder_forward<double>(x, p, false, nullptr, nullptr);
  MaskTarget targets;
  targets.positions.push_back({1, SegmentKind::LongTerm, {{1}, {2}}});
  targets.positions.push_back({2, SegmentKind::ShortTerm, {{3}}});
  auto per_pos = predict_masked_attributes(h, targets, p);
  REQUIRE(per_pos.size() == 2);
  REQUIRE(per_pos[0].size() == 2);  // long segment: two attributes
  CHECK(per_pos[0][0].size() == 3);
  CHECK(per_pos[0][1].size() == 5);
  REQUIRE(per_pos[1].size() == 1);  // short segment: one attribute
  CHECK(per_pos[1][0].size() == 4);
  for (const auto& pos : per_pos)
    for (const auto& d : pos) CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classification requires an attached head and normalizes") {
  ModelConfig cfg = cfg_of(1, 8, 2, 16);
  Parameters<double> p = make_params(cfg);
  Mat<double> x = random_input(4, 8);
  Mat<double> h = encoder_forward<double>(x, p, false, nullptr, nullptr);
  CHECK_THROWS_AS(classify_sequence(h, p), ValidationError);
  p.attach_classification_head(3);
  auto probs = classify_sequence(h, p);
  CHECK(probs.size() == 3);
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}
