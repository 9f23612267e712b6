#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "selftrack/autoencoder.hpp"
#include "support/reference_forward.hpp"

using namespace selftrack;

namespace {

ArchConfig small_conv(bool batchnorm = false) {
  ArchConfig a;
  a.channels = 2;
  a.height = 8;
  a.width = 8;
  a.filters = {3, 4};
  a.latent_dim = 5;
  a.batchnorm = batchnorm;
  return a;
}

ImagePatch random_patch(const ArchConfig& a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImagePatch p(a.channels, a.height, a.width);
  for (auto& v : p.pixels) v = u(rng);
  return p;
}

std::vector<ImagePatch> random_patches(const ArchConfig& a, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ImagePatch> out;
  for (int i = 0; i < n; ++i) out.push_back(random_patch(a, rng));
  return out;
}

ParameterView find(AutoEncoderModel& m, const std::string& name) {
  for (auto& v : m.parameters()) {
    if (v.name == name) return v;
  }
  throw std::out_of_range(name);
}

}  // namespace

TEST(ArchConfig, Validation) {
  EXPECT_NO_THROW(ArchConfig::desk_default().validate());
  EXPECT_NO_THROW(ArchConfig::full_scale().validate());
  ArchConfig a;
  a.height = 30;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = ArchConfig{};
  a.kernel = 4;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a = ArchConfig{};
  a.latent_dim = 0;
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(AutoEncoder, ShapesFollowArchitecture) {
  for (const ArchConfig& arch : {ArchConfig::desk_default(), small_conv(), small_conv(true),
                                 ArchConfig::linear(Shape{1, 4, 4}, 3)}) {
    AutoEncoderModel m(arch, 1);
    std::mt19937_64 rng(2);
    const ImagePatch x = random_patch(arch, rng);
    const LatentVector z = m.encode(x);
    EXPECT_EQ(z.size(), static_cast<std::size_t>(arch.latent_dim));
    const ImagePatch r = m.decode(z);
    EXPECT_TRUE(r.same_shape(x));
  }
}

TEST(AutoEncoder, FullScaleHalvesAndDoubles) {
  AutoEncoderModel m(ArchConfig::full_scale(), 0);
  EXPECT_EQ(m.encoder().output_shape(Shape{3, 64, 64}), (Shape{32, 1, 1}));
  // last encoder stage before the dense layer has 256 channels at 2x2
  const Layer& pool = m.encoder().layer(m.encoder().size() - 2);
  EXPECT_EQ(pool.kind(), LayerKind::MaxPool);
}

TEST(AutoEncoder, ZeroImageGivesBiasImage) {
  const ArchConfig arch = small_conv();
  AutoEncoderModel m(arch, 3);
  const ImagePatch zero(arch.channels, arch.height, arch.width);
  for (double v : m.encode(zero).values) EXPECT_EQ(v, 0.0);

  auto bias = find(m, "encoder.6.bias");
  for (std::size_t i = 0; i < bias.values.size(); ++i) bias.values[i] = 0.25 * static_cast<double>(i) - 0.5;
  const LatentVector z = m.encode(zero);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z.values[i], bias.values[i]);
}

TEST(AutoEncoder, ConvFeedingBatchnormHasNoBias) {
  AutoEncoderModel plain(small_conv(false), 1);
  AutoEncoderModel normed(small_conv(true), 1);
  auto bias_count = [](AutoEncoderModel& m) {
    int n = 0;
    for (const auto& v : m.parameters()) {
      if (v.layer_kind == LayerKind::Conv && v.name.ends_with(".bias")) ++n;
    }
    return n;
  };
  EXPECT_EQ(bias_count(plain), 4);
  // only the output convolution keeps its bias
  EXPECT_EQ(bias_count(normed), 1);
}

TEST(AutoEncoder, ShapeMismatchThrows) {
  AutoEncoderModel m(small_conv(), 0);
  EXPECT_THROW(m.encode(ImagePatch(3, 8, 8)), std::invalid_argument);
  EXPECT_THROW(m.decode(LatentVector{{1.0, 2.0}}), std::invalid_argument);
}

TEST(AutoEncoder, SeedDeterminesWeightsBitwise) {
  const auto x = random_patches(small_conv(), 1, 4).front();
  AutoEncoderModel a(small_conv(), 11);
  AutoEncoderModel b(small_conv(), 11);
  AutoEncoderModel c(small_conv(), 12);
  EXPECT_EQ(a.encode(x), b.encode(x));
  EXPECT_NE(a.encode(x), c.encode(x));
}

TEST(AutoEncoder, CopiesAreDeep) {
  AutoEncoderModel a(small_conv(), 1);
  AutoEncoderModel b = a;
  find(b, "encoder.0.weight").values[0] += 1.0;
  EXPECT_NE(find(a, "encoder.0.weight").values[0], find(b, "encoder.0.weight").values[0]);
}

TEST(AutoEncoder, MatchesReferenceForward) {
  const ArchConfig arch = small_conv();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AutoEncoderModel m(arch, seed);
    // non-zero biases so every bias path is exercised
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> n(0.0, 0.1);
    for (auto& v : m.parameters()) {
      if (v.name.ends_with("bias")) {
        for (auto& b : v.values) b = n(rng);
      }
    }
    const auto batch = random_patches(arch, 3, seed);
    double expected = 0.0;
    for (const auto& x : batch) {
      const auto ref = selftrack::testing::reference_forward(m, x);
      const auto z = m.encode(x);
      ASSERT_EQ(z.size(), ref.latent.size());
      for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z.values[i], ref.latent[i], 1e-12);
      for (std::size_t i = 0; i < x.size(); ++i) expected += std::pow(ref.reconstruction[i] - x.pixels[i], 2);
    }
    expected /= static_cast<double>(batch.size());
    EXPECT_NEAR(reconstruction_loss(m, batch), expected, 1e-10 * expected);
  }
}

TEST(ReconstructionLoss, IdentityModelIsZero) {
  const Shape s{1, 2, 2};
  AutoEncoderModel m(ArchConfig::linear(s, 4), 0);
  for (const char* name : {"encoder.0.weight", "decoder.0.weight"}) {
    auto w = find(m, name);
    std::fill(w.values.begin(), w.values.end(), 0.0);
    for (int i = 0; i < 4; ++i) w.values[i * 4 + i] = 1.0;
  }
  std::vector<ImagePatch> batch = random_patches(ArchConfig::linear(s, 4), 6, 9);
  EXPECT_EQ(reconstruction_loss(m, batch), 0.0);
}

TEST(ReconstructionLoss, ZeroDecoderGivesSquaredNorm) {
  const Shape s{1, 3, 3};
  AutoEncoderModel m(ArchConfig::linear(s, 2), 0);
  auto w = find(m, "decoder.0.weight");
  std::fill(w.values.begin(), w.values.end(), 0.0);
  auto batch = random_patches(ArchConfig::linear(s, 2), 5, 1);
  for (auto& x : batch) {
    double norm = 0.0;
    for (double v : x.pixels) norm += v * v;
    for (double& v : x.pixels) v /= std::sqrt(norm);
  }
  EXPECT_NEAR(reconstruction_loss(m, batch), 1.0, 1e-12);
}

TEST(ReconstructionLoss, EmptyBatchThrows) {
  AutoEncoderModel m(small_conv(), 0);
  EXPECT_THROW(reconstruction_loss(m, {}), std::invalid_argument);
}

TEST(CombinedLoss, LambdaZeroEqualsReconstruction) {
  AutoEncoderModel m(small_conv(), 2);
  const auto batch = random_patches(small_conv(), 4, 3);
  const std::vector<long> labels{0, 1, 0, 2};
  const auto centroids = compute_centroids(m, batch, labels);
  EXPECT_EQ(combined_loss(m, batch, labels, centroids, 0.0), reconstruction_loss(m, batch));
}

TEST(CombinedLoss, LambdaOneWithOwnLatentsIsZero) {
  AutoEncoderModel m(small_conv(), 2);
  const auto batch = random_patches(small_conv(), 4, 3);
  const std::vector<long> labels{0, 1, 2, 3};
  const auto centroids = compute_centroids(m, batch, labels);
  EXPECT_EQ(combined_loss(m, batch, labels, centroids, 1.0), 0.0);
}

TEST(CombinedLoss, HalfLambdaIsMeanOfTerms) {
  AutoEncoderModel m(small_conv(), 2);
  const auto batch = random_patches(small_conv(), 4, 3);
  const std::vector<long> labels{0, 0, 1, 1};
  const auto centroids = compute_centroids(m, batch, labels);
  const double rec = reconstruction_loss(m, batch);
  const double cl = combined_loss(m, batch, labels, centroids, 1.0);
  EXPECT_GT(cl, 0.0);
  EXPECT_NEAR(combined_loss(m, batch, labels, centroids, 0.5), 0.5 * (rec + cl), 1e-12);

  double by_hand = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = euclidean_distance(m.encode(batch[i]), centroids.at(labels[i]));
    by_hand += d * d;
  }
  EXPECT_NEAR(cl, by_hand / 4.0, 1e-12);
}

TEST(CombinedLoss, MissingCentroidThrows) {
  AutoEncoderModel m(small_conv(), 2);
  const auto batch = random_patches(small_conv(), 2, 3);
  const std::vector<long> labels{0, 7};
  const auto centroids = compute_centroids(m, std::span(batch).first(1), std::span(labels).first(1));
  EXPECT_THROW(combined_loss(m, batch, labels, centroids, 0.5), std::out_of_range);
  EXPECT_THROW(combined_loss(m, batch, labels, centroids, 1.5), std::invalid_argument);
}

TEST(Centroids, SingleMemberEqualsLatent) {
  AutoEncoderModel m(small_conv(), 5);
  const auto batch = random_patches(small_conv(), 1, 3);
  const std::vector<long> labels{4};
  EXPECT_EQ(compute_centroids(m, batch, labels).at(4), m.encode(batch[0]));
}

TEST(Centroids, OppositeVectorsAverageToZero) {
  const std::vector<LatentVector> z{{{1.5, -2.0, 0.25}}, {{-1.5, 2.0, -0.25}}};
  const std::vector<long> labels{3, 3};
  const auto table = compute_centroids(z, labels);
  for (double v : table.at(3).values) EXPECT_EQ(v, 0.0);
}

TEST(Centroids, ThreeMembersByHand) {
  const std::vector<LatentVector> z{{{1.0, 2.0}}, {{4.0, -1.0}}, {{1.0, 5.0}}, {{9.0, 9.0}}};
  const std::vector<long> labels{0, 0, 0, 1};
  const auto table = compute_centroids(z, labels);
  EXPECT_DOUBLE_EQ(table.at(0).values[0], 2.0);
  EXPECT_DOUBLE_EQ(table.at(0).values[1], 2.0);
  EXPECT_EQ(table.at(1), z[3]);
  EXPECT_FALSE(table.contains(2));
  EXPECT_THROW(table.at(2), std::out_of_range);
}

TEST(Centroids, PermutationInvariant) {
  AutoEncoderModel m(small_conv(), 5);
  auto batch = random_patches(small_conv(), 8, 1);
  std::vector<long> labels{0, 1, 2, 0, 1, 2, 0, 1};
  const auto a = compute_centroids(m, batch, labels);
  std::vector<std::size_t> order{7, 3, 5, 0, 2, 6, 1, 4};
  std::vector<ImagePatch> pb;
  std::vector<long> pl;
  for (auto i : order) {
    pb.push_back(batch[i]);
    pl.push_back(labels[i]);
  }
  const auto b = compute_centroids(m, pb, pl);
  for (long label : {0L, 1L, 2L}) {
    for (std::size_t k = 0; k < a.at(label).size(); ++k) {
      EXPECT_NEAR(a.at(label).values[k], b.at(label).values[k], 1e-12);
    }
  }
}

TEST(Centroids, EmptyDatasetThrows) {
  EXPECT_THROW(compute_centroids(std::span<const LatentVector>{}, std::span<const long>{}), std::invalid_argument);
}

TEST(LatentDistance, MetricProperties) {
  AutoEncoderModel m(small_conv(), 8);
  const auto xs = random_patches(small_conv(), 12, 4);
  EXPECT_EQ(latent_distance(m, xs[0], xs[0]), 0.0);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  for (int t = 0; t < 50; ++t) {
    const auto& a = xs[pick(rng)];
    const auto& b = xs[pick(rng)];
    const auto& c = xs[pick(rng)];
    const double ab = latent_distance(m, a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(ab, latent_distance(m, b, a));
    EXPECT_LE(latent_distance(m, a, c), ab + latent_distance(m, b, c) + 1e-12);
  }
}

TEST(LatentDistance, ConcurrentEncodeMatchesSerial) {
  AutoEncoderModel m(small_conv(true), 8);
  const auto xs = random_patches(small_conv(), 16, 4);
  const auto serial = m.encode_all(xs);
  std::vector<std::vector<LatentVector>> out(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (const auto& x : xs) out[t].push_back(m.encode(x));
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& o : out) EXPECT_EQ(o, serial);
}

TEST(Initialization, XavierVariancePerLayer) {
  const ArchConfig arch = ArchConfig::desk_default();
  std::map<std::string, std::pair<double, std::size_t>> sums;
  std::map<std::string, double> expected;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AutoEncoderModel m(arch, seed);
    for (std::size_t i = 0; i < m.encoder().size() + m.decoder().size(); ++i) {
      const bool enc = i < m.encoder().size();
      Layer& layer = enc ? m.encoder().layer(i) : m.decoder().layer(i - m.encoder().size());
      double fan_in = 0.0;
      double fan_out = 0.0;
      if (auto* conv = dynamic_cast<Conv2d*>(&layer)) {
        const double kk = conv->kernel() * conv->kernel();
        fan_in = conv->in_channels() * kk;
        fan_out = conv->out_channels() * kk;
      } else if (auto* d = dynamic_cast<Dense*>(&layer)) {
        fan_in = d->inputs();
        fan_out = d->outputs();
      } else {
        continue;
      }
      const std::string key = (enc ? "e" : "d") + std::to_string(i);
      expected[key] = 2.0 / (fan_in + fan_out);
      auto& [sq, count] = sums[key];
      const auto params = layer.parameters();
      for (double w : params[0]) sq += w * w;
      count += params[0].size();
      for (double b : params[1]) EXPECT_EQ(b, 0.0);
    }
  }
  ASSERT_EQ(sums.size(), 8u);
  for (const auto& [key, acc] : sums) {
    const double variance = acc.first / static_cast<double>(acc.second);
    EXPECT_NEAR(variance / expected[key], 1.0, 0.2) << key;
  }
}
