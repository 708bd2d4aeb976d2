#include <gtest/gtest.h>

#include <cmath>

#include "spot/ad/ops.hpp"
#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"
#include "spot/model/spot_model.hpp"
#include "support/gradcheck.hpp"

using namespace spot;
using namespace spot::model;
using ad::Tensor;
using dataset::PromptVariant;

namespace {

ModelConfig mini_config(PromptVariant v = PromptVariant::kBbox) {
  ModelConfig c;
  c.d_model = 16;
  c.image_width = 32;
  c.image_height = 32;
  c.fusion_layers = 2;
  c.fusion_heads = 2;
  c.decoder_layers = 2;
  c.decoder_heads = 2;
  c.history = 2;
  c.horizon = 4;
  c.fourier_freqs = 3;
  c.mlp_ratio = 2;
  c.time_freqs = 4;
  c.diffusion_steps = 10;
  c.variant = v;
  return c;
}

std::shared_ptr<Raster> noise_raster(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  auto r = std::make_shared<Raster>(w, h);
  for (auto& b : r->rgb) b = static_cast<std::uint8_t>(rng() & 0xff);
  return r;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

ModelInput make_input(const ModelConfig& c, const pipeline::Box& obj = {2, 3, 10, 12},
                      const pipeline::Box& tgt = {15, 16, 30, 28}, std::uint64_t seed = 1) {
  ModelInput in;
  const int w = static_cast<int>(c.image_width), h = static_cast<int>(c.image_height);
  in.first_frame = noise_raster(w, h, seed);
  in.current_frame = noise_raster(w, h, seed + 100);
  in.prompt = dataset::prompt_payload(c.variant, obj, tgt, w, h, in.first_frame);
  in.history = gaussian(c.history * 10, seed + 200);
  return in;
}

bool same_values(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

Tensor rows(const Tensor& t, std::size_t begin, std::size_t end) { return ad::slice(t, 0, begin, end); }

}  // namespace

TEST(ModelConfig, DeskScaleConditionLengths) {
  ModelConfig c;
  EXPECT_EQ(c.num_patches(), 64u);
  EXPECT_EQ(c.condition_length(), 74u);
  c.variant = PromptVariant::kNone;
  EXPECT_EQ(c.condition_length(), 72u);
  c.variant = PromptVariant::kVisionBboxAndBbox;
  EXPECT_EQ(c.condition_length(), 74u);
  c.history = 0;
  EXPECT_EQ(c.condition_length(), 70u);
}

TEST(ModelConfig, KeyValueRoundTripAndValidation) {
  ModelConfig c = mini_config(PromptVariant::kPoint);
  c.head = HeadKind::kDiffusion;
  EXPECT_EQ(ModelConfig::from_kv(KvConfig::parse(c.to_kv().to_string())), c);
  EXPECT_THROW(ModelConfig::from_kv(KvConfig::parse("d_model = 30\nfusion_heads = 4\n")), ConfigError);
  EXPECT_THROW(ModelConfig::from_kv(KvConfig::parse("patch = 15\n")), ConfigError);
  EXPECT_THROW(ModelConfig::from_kv(KvConfig::parse("horizon = 0\n")), ConfigError);
  EXPECT_THROW(ModelConfig::from_kv(KvConfig::parse("heads = 4\n")), ConfigError);
  EXPECT_THROW(ModelConfig::from_kv(KvConfig::parse("head = gan\n")), ConfigError);
}

TEST(SpotModel, WeightsDeterministicInSeed) {
  const SpotModel a(mini_config(), 7), b(mini_config(), 7), c(mini_config(), 8);
  ASSERT_EQ(a.parameters().size(), b.parameters().size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_TRUE(same_values(a.parameters()[i].tensor, b.parameters()[i].tensor));
    any_diff |= !same_values(a.parameters()[i].tensor, c.parameters()[i].tensor);
  }
  EXPECT_TRUE(any_diff);
  const auto frozen = a.trainable_parameters(true);
  EXPECT_LT(frozen.size(), a.parameters().size());
  for (const auto& p : frozen) EXPECT_FALSE(SpotModel::is_tokenizer_parameter(p.name));
}

TEST(Tokenizer, PatchCountAndSizeCheck) {
  const ModelConfig c;
  const SpotModel m(c, 0);
  const auto img = noise_raster(128, 128, 3);
  const auto tok = m.tokenize_image(*img);
  EXPECT_EQ(tok.patches.shape(), (ad::Shape{64, 64}));
  EXPECT_EQ(tok.summary.shape(), (ad::Shape{1, 64}));
  EXPECT_THROW(m.tokenize_image(Raster(96, 128)), ConfigError);
  EXPECT_TRUE(same_values(tok.patches, m.tokenize_image(*noise_raster(128, 128, 3)).patches));
}

TEST(Tokenizer, PatchSwapMovesExactlyThoseProjections) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  const auto a = noise_raster(32, 32, 5);
  Raster b = *a;
  // Swap patch (0,0) with patch (1,1).
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const Rgb p = b.at(x, y);
      b.set(x, y, b.at(x + 16, y + 16));
      b.set(x + 16, y + 16, p);
    }
  }
  const Tensor pa = m.project_patches(*a), pb = m.project_patches(b);
  EXPECT_TRUE(same_values(rows(pa, 0, 1), rows(pb, 3, 4)));
  EXPECT_TRUE(same_values(rows(pa, 3, 4), rows(pb, 0, 1)));
  EXPECT_TRUE(same_values(rows(pa, 1, 3), rows(pb, 1, 3)));
  EXPECT_FALSE(same_values(rows(pa, 0, 1), rows(pb, 0, 1)));
}

TEST(Tokenizer, CachedProjectionMatchesDirect) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  const auto in = make_input(c);
  ProjectionCache cache;
  const auto direct = m.condition(in);
  const auto cached = m.condition(in, &cache);
  EXPECT_EQ(cache.size(), 2u);
  const auto again = m.condition(in, &cache);
  EXPECT_TRUE(same_values(direct.tokens, cached.tokens));
  EXPECT_TRUE(same_values(direct.tokens, again.tokens));
}

TEST(FourierFeatures, OriginAndDimension) {
  const auto f = fourier_features(0.0, 0.0, 8);
  ASSERT_EQ(f.size(), 32u);
  for (int i = 0; i < 8; ++i) {
    EXPECT_EQ(f[i], 0.0);
    EXPECT_EQ(f[8 + i], 1.0);
    EXPECT_EQ(f[16 + i], 0.0);
    EXPECT_EQ(f[24 + i], 1.0);
  }
  const auto g = fourier_features(0.25, 0.5, 2);
  EXPECT_NEAR(g[0], std::sin(std::numbers::pi * 0.25), 1e-15);
  EXPECT_NEAR(g[1], std::sin(2 * std::numbers::pi * 0.25), 1e-15);
  EXPECT_NEAR(g[3], std::cos(2 * std::numbers::pi * 0.25), 1e-15);
  EXPECT_NEAR(g[6], std::cos(std::numbers::pi * 0.5), 1e-15);
}

TEST(FourierFeatures, DistinctOnMilliGrid) {
  // Features factor into an x block and a y block, so distinct per-axis blocks imply distinct 2D features.
  std::vector<std::vector<double>> xs;
  for (int i = 0; i <= 1000; ++i) {
    const auto f = fourier_features(i * 1e-3, 0.0, 8);
    xs.emplace_back(f.begin(), f.begin() + 16);
  }
  double min_dist = 1e9;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      double s = 0;
      for (int k = 0; k < 16; ++k) s += (xs[i][k] - xs[j][k]) * (xs[i][k] - xs[j][k]);
      min_dist = std::min(min_dist, std::sqrt(s));
    }
  }
  EXPECT_GT(min_dist, 1e-4);
  for (int i = 0; i <= 1000; ++i) {
    const auto a = fourier_features(0.0, i * 1e-3, 8);
    const auto b = fourier_features(i * 1e-3, 0.0, 8);
    EXPECT_TRUE(std::equal(a.begin() + 16, a.end(), b.begin()));
  }
}

TEST(PromptEncoder, TokenCountsPerVariant) {
  for (auto [v, n] : {std::pair{PromptVariant::kBbox, 4u}, {PromptVariant::kPoint, 2u}, {PromptVariant::kNone, 2u},
                      {PromptVariant::kVisionBbox, 2u}, {PromptVariant::kVisionBboxAndBbox, 4u}}) {
    const ModelConfig c = mini_config(v);
    const SpotModel m(c, 0);
    const auto in = make_input(c);
    EXPECT_EQ(m.encode_prompts(in.prompt).shape(), (ad::Shape{n, 16})) << dataset::variant_name(v);
    EXPECT_EQ(m.condition(in).length(), c.condition_length());
  }
}

TEST(PromptEncoder, NoneIgnoresAnnotationContent) {
  const ModelConfig c = mini_config(PromptVariant::kNone);
  const SpotModel m(c, 0);
  const auto a = make_input(c, {1, 1, 5, 5}, {20, 20, 30, 30});
  auto b = a;
  b.prompt = dataset::prompt_payload(c.variant, {8, 2, 14, 9}, {3, 20, 12, 31}, 32, 32);
  const Tensor x = Tensor::from({4, 10}, gaussian(40, 9));
  EXPECT_TRUE(same_values(m.velocity_forward(x, 0.4, m.condition(a)), m.velocity_forward(x, 0.4, m.condition(b))));

  const ModelConfig cb = mini_config(PromptVariant::kBbox);
  const SpotModel mb(cb, 0);
  const auto pa = make_input(cb, {1, 1, 5, 5}, {20, 20, 30, 30});
  auto pb = pa;
  pb.prompt = dataset::prompt_payload(cb.variant, {8, 2, 14, 9}, {3, 20, 12, 31}, 32, 32);
  EXPECT_FALSE(
      same_values(mb.velocity_forward(x, 0.4, mb.condition(pa)), mb.velocity_forward(x, 0.4, mb.condition(pb))));
}

TEST(PromptEncoder, PayloadMismatchIsContractError) {
  const SpotModel m(mini_config(PromptVariant::kBbox), 0);
  auto p = dataset::prompt_payload(PromptVariant::kPoint, {1, 1, 5, 5}, {20, 20, 30, 30}, 32, 32);
  EXPECT_THROW(m.encode_prompts(p), ContractError);
  p.variant = PromptVariant::kBbox;
  EXPECT_THROW(m.encode_prompts(p), ContractError);
  const SpotModel mv(mini_config(PromptVariant::kVisionBbox), 0);
  auto in = make_input(mv.config());
  in.prompt.rendered_frame.reset();
  EXPECT_THROW(mv.encode_prompts(in.prompt), ContractError);
  EXPECT_THROW(mv.condition(in), ContractError);
}

TEST(PromptEncoder, VisionVariantReadsRenderedFrame) {
  const ModelConfig c = mini_config(PromptVariant::kVisionBbox);
  const SpotModel m(c, 0);
  const auto a = make_input(c, {1, 1, 5, 5}, {20, 20, 30, 30});
  const auto b = make_input(c, {8, 2, 14, 9}, {3, 20, 12, 31});
  EXPECT_EQ(&m.task_frame(a), a.prompt.rendered_frame.get());
  EXPECT_FALSE(same_values(m.condition(a).tokens, m.condition(b).tokens));
}

TEST(TaskEncoder, CountAndGradientFlow) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  const auto in = make_input(c);
  const auto first = m.tokenize_image(*in.first_frame);
  const Tensor z = m.task_encode(first, m.encode_prompts(in.prompt));
  EXPECT_EQ(z.dim(0), 5u);
  EXPECT_TRUE(same_values(rows(z, 0, 1), first.summary));
  const Tensor probe = Tensor::from(z.shape(), gaussian(z.numel(), 4));
  ad::backward(ad::mse_mean(z, probe));
  for (const char* name : {"prompt.mlp.fc1.w", "prompt.role", "prompt.type", "task.layer1.cross.v.w"}) {
    const Tensor& p = m.param(name);
    ASSERT_TRUE(p.has_grad()) << name;
    double norm = 0;
    for (double g : p.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << name;
  }
}

TEST(TaskEncoder, ZeroedOutputProjectionsAreIdentity) {
  const ModelConfig c = mini_config();
  SpotModel m(c, 0);
  for (const auto& p : m.parameters()) {
    const bool out_proj = p.name.rfind("task.", 0) == 0 &&
                          (p.name.find(".o.") != std::string::npos || p.name.find(".fc2.") != std::string::npos);
    if (out_proj) {
      auto t = p.tensor;
      std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
    }
  }
  const auto in = make_input(c);
  const Tensor prompts = m.encode_prompts(in.prompt);
  const Tensor z = m.task_encode(m.tokenize_image(*in.first_frame), prompts);
  EXPECT_TRUE(same_values(rows(z, 1, 5), prompts));
}

TEST(HistoryEncoder, ShapesAndPositionOffsets) {
  ModelConfig c = mini_config();
  c.history = 3;
  const SpotModel m(c, 0);
  std::vector<double> h;
  const auto one = gaussian(10, 2);
  for (int k = 0; k < 3; ++k) h.insert(h.end(), one.begin(), one.end());
  const Tensor e = m.encode_history(Tensor::from({3, 10}, h));
  EXPECT_EQ(e.shape(), (ad::Shape{3, 16}));
  const Tensor& pos = m.param("history.pos");
  for (std::size_t d = 0; d < 16; ++d) {
    EXPECT_NEAR(e.at(2, d) - e.at(0, d), pos.at(2, d) - pos.at(0, d), 1e-15);
  }
  EXPECT_THROW(m.encode_history(Tensor::from({2, 10}, std::vector<double>(20))), DimensionError);

  c.history = 0;
  const SpotModel m0(c, 0);
  EXPECT_FALSE(m0.encode_history(Tensor{}).defined());
  auto in = make_input(c);
  EXPECT_EQ(m0.condition(in).history, 0u);
  EXPECT_EQ(m0.condition(in).length(), 1u + 4u + 5u);
}

TEST(Condition, OrderIsTaskFrameHistory) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  const auto in = make_input(c);
  const auto first = m.tokenize_image(*in.first_frame);
  const auto current = m.tokenize_image(*in.current_frame);
  const Tensor task = m.task_encode(first, m.encode_prompts(in.prompt));
  const Tensor hist = m.encode_history(Tensor::from({2, 10}, in.history));
  const auto cond = m.assemble_condition(task, current, hist);
  EXPECT_EQ(cond.task, 5u);
  EXPECT_EQ(cond.frame, 5u);
  EXPECT_EQ(cond.history, 2u);
  const Tensor& types = m.param("condition.type");
  for (std::size_t d = 0; d < 16; ++d) {
    EXPECT_NEAR(cond.tokens.at(0, d), task.at(0, d) + types.at(0, d), 1e-15);
    EXPECT_NEAR(cond.tokens.at(5, d), current.summary.at(0, d) + types.at(1, d), 1e-15);
    EXPECT_NEAR(cond.tokens.at(6, d), current.patches.at(0, d) + types.at(1, d), 1e-15);
    EXPECT_EQ(cond.tokens.at(10, d), hist.at(0, d));
    EXPECT_EQ(cond.tokens.at(11, d), hist.at(1, d));
  }
  EXPECT_TRUE(same_values(cond.tokens, m.condition(in).tokens));
}

TEST(TimeEmbed, DeterministicAndDistinct) {
  const SpotModel m(ModelConfig{}, 0);
  const Tensor a = m.time_embed(0.1);
  EXPECT_EQ(a.shape(), (ad::Shape{1, 64}));
  EXPECT_TRUE(same_values(a, m.time_embed(0.1)));
  double diff = 0;
  const Tensor b = m.time_embed(0.9);
  for (std::size_t i = 0; i < 64; ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  EXPECT_GT(diff, 1e-3);
  const auto f = time_features(0.0, 16);
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(f[i], 0.0);
    EXPECT_EQ(f[16 + i], 1.0);
  }
  EXPECT_NEAR(time_features(1.0, 16)[15], std::sin(2 * std::numbers::pi / 4.0), 1e-15);
}

TEST(Decoder, ShapesDeterminismAndErrors) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  const auto cond = m.condition(make_input(c));
  const Tensor x = Tensor::from({4, 10}, gaussian(40, 3));
  const Tensor v = m.velocity_forward(x, 0.3, cond);
  EXPECT_EQ(v.shape(), (ad::Shape{4, 10}));
  EXPECT_TRUE(same_values(v, m.velocity_forward(x, 0.3, cond)));
  EXPECT_FALSE(same_values(v, m.velocity_forward(x, 0.7, cond)));
  EXPECT_EQ(m.diffusion_forward(x, 3, cond).shape(), (ad::Shape{4, 10}));
  EXPECT_FALSE(same_values(m.diffusion_forward(x, 3, cond), m.diffusion_forward(x, 4, cond)));
  EXPECT_THROW(m.diffusion_forward(x, 10, cond), ContractError);
  EXPECT_THROW(m.velocity_forward(Tensor::from({3, 10}, gaussian(30, 3)), 0.3, cond), DimensionError);
  auto bad = gaussian(40, 3);
  bad[7] = std::nan("");
  EXPECT_THROW(m.velocity_forward(Tensor::from({4, 10}, bad), 0.3, cond), NumericError);
}

TEST(Decoder, AttentionMapsRowStochastic) {
  const ModelConfig c = mini_config();
  const SpotModel m(c, 0);
  AttentionTrace trace;
  const auto cond = m.condition(make_input(c), nullptr, &trace);
  m.velocity_forward(Tensor::from({4, 10}, gaussian(40, 3)), 0.3, cond, &trace);
  // 2 summary + fusion (self + cross) x layers x heads + decoder (self + cross) x layers x heads
  EXPECT_EQ(trace.maps.size(), 2u + 2 * 2 * 2 + 2 * 2 * 2);
  for (const auto& p : trace.maps) {
    for (std::size_t r = 0; r < p.dim(0); ++r) {
      double s = 0;
      for (std::size_t j = 0; j < p.dim(1); ++j) {
        EXPECT_GE(p.at(r, j), 0.0);
        s += p.at(r, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(GradCheck, FullFlowLossOnMiniModel) {
  ModelConfig c = mini_config();
  const SpotModel m(c, 11);
  const auto in = make_input(c);
  const auto x0 = gaussian(40, 20), eps = gaussian(40, 21);
  const double t = 0.37;
  std::vector<double> xt(40), target(40);
  for (int i = 0; i < 40; ++i) {
    xt[i] = (1 - t) * x0[i] + t * eps[i];
    target[i] = eps[i] - x0[i];
  }
  auto loss = [&] {
    const auto cond = m.condition(in);
    return ad::mse_mean(m.velocity_forward(Tensor::from({4, 10}, xt), t, cond), Tensor::from({4, 10}, target));
  };
  std::vector<Tensor> leaves;
  for (const auto& p : m.parameters()) leaves.push_back(p.tensor);
  const auto res = spot::testing::grad_check(loss, leaves, 1e-5, 24);
  EXPECT_GT(res.checked, 1000u);
  EXPECT_LT(res.max_rel_error, 1e-4) << "analytic " << res.worst_analytic << " numeric " << res.worst_numeric << " loss " << res.loss;
}
