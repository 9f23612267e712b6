#include <gtest/gtest.h>

#include <random>

#include "selftrack/training.hpp"

using namespace selftrack;

namespace {

ArchConfig tiny_conv(bool batchnorm) {
  ArchConfig a;
  a.channels = 2;
  a.height = 8;
  a.width = 8;
  a.filters = {3, 4};
  a.latent_dim = 4;
  a.batchnorm = batchnorm;
  return a;
}

std::vector<ImagePatch> random_patches(const ArchConfig& a, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ImagePatch> out;
  for (int i = 0; i < n; ++i) {
    ImagePatch p(a.channels, a.height, a.width);
    for (auto& v : p.pixels) v = u(rng);
    out.push_back(std::move(p));
  }
  return out;
}

// Patches of a few identities: per-identity base texture plus noise.
struct ToyDataset {
  std::vector<ImagePatch> images;
  std::vector<int> frames;
  std::vector<long> labels;
};

ToyDataset toy_dataset(const ArchConfig& a, int identities, int frames, std::uint64_t seed) {
  const auto bases = random_patches(a, identities, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> noise(0.0, 0.08);
  ToyDataset d;
  for (int f = 0; f < frames; ++f) {
    for (int id = 0; id < identities; ++id) {
      ImagePatch p = bases[id];
      for (auto& v : p.pixels) v += noise(rng);
      d.images.push_back(std::move(p));
      d.frames.push_back(f);
      d.labels.push_back(id);
    }
  }
  return d;
}

}  // namespace

TEST(TrainingConfig, ScheduleLookup) {
  TrainingConfig c = TrainingConfig::two_phase(10, 4, 0.95, 1);
  EXPECT_EQ(c.lambda_at(0), 0.0);
  EXPECT_EQ(c.lambda_at(3), 0.0);
  EXPECT_EQ(c.lambda_at(4), 0.95);
  EXPECT_EQ(c.lambda_at(9), 0.95);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(0), 0.001);
  EXPECT_DOUBLE_EQ(c.learning_rate_at(10), 0.0001);
  EXPECT_NEAR(c.learning_rate_at(5), 0.001 / std::sqrt(10.0), 1e-15);
  c.exponential_decay = false;
  EXPECT_EQ(c.learning_rate_at(7), 0.001);
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.lambda_schedule = {{0, 1.2}};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.lambda_schedule = {{0, 0.0}, {0, 0.5}};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainingConfig{};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Training, ReconstructionDescends) {
  const ArchConfig arch = tiny_conv(false);
  AutoEncoderModel m(arch, 4);
  const auto images = random_patches(arch, 4, 5);
  const std::vector<int> frames{1, 1, 2, 2};
  const std::vector<long> labels{0, 1, 2, 3};
  TrainingConfig c;
  c.epochs = 200;
  c.learning_rate = 0.01;
  const double before = reconstruction_loss(m, images);
  const auto result = train(m, images, frames, labels, c);
  ASSERT_EQ(result.trace.size(), 200u);
  EXPECT_LT(result.trace.back().loss.reconstruction, result.trace.front().loss.reconstruction);
  EXPECT_LT(reconstruction_loss(m, images), before);
  EXPECT_EQ(m.epoch(), 200);
}

TEST(Training, SameSeedSameTrace) {
  const ArchConfig arch = tiny_conv(true);
  const auto d = toy_dataset(arch, 3, 6, 2);
  const TrainingConfig c = TrainingConfig::two_phase(6, 3, 0.95, 77);
  AutoEncoderModel a(arch, 1);
  AutoEncoderModel b(arch, 1);
  const auto ra = train(a, d.images, d.frames, d.labels, c);
  const auto rb = train(b, d.images, d.frames, d.labels, c);
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_EQ(ra.trace[i].loss.total, rb.trace[i].loss.total);
    EXPECT_EQ(ra.trace[i].mean_centroid_distance, rb.trace[i].mean_centroid_distance);
  }
  EXPECT_EQ(a.encode(d.images[0]), b.encode(d.images[0]));
}

TEST(Training, ClusteringTermPullsTowardCentroids) {
  const ArchConfig arch = tiny_conv(false);
  const auto d = toy_dataset(arch, 4, 10, 3);
  AutoEncoderModel m(arch, 2);
  AutoEncoderModel control(arch, 2);
  const auto result = train(m, d.images, d.frames, d.labels, TrainingConfig::two_phase(30, 10, 0.95, 5));
  const auto baseline = train(control, d.images, d.frames, d.labels, TrainingConfig::two_phase(30, 10, 0.0, 5));
  const double at_switch = result.trace[9].mean_centroid_distance;
  EXPECT_EQ(at_switch, baseline.trace[9].mean_centroid_distance);
  EXPECT_LT(result.trace.back().mean_centroid_distance, at_switch);
  EXPECT_LT(result.trace.back().mean_centroid_distance, baseline.trace.back().mean_centroid_distance);
  EXPECT_EQ(result.trace[9].lambda, 0.0);
  EXPECT_EQ(result.trace[10].lambda, 0.95);
  EXPECT_GT(result.trace[10].loss.clustering, 0.0);
}

TEST(Training, DivergenceIsReported) {
  const ArchConfig arch = tiny_conv(false);
  const auto d = toy_dataset(arch, 2, 3, 3);
  AutoEncoderModel m(arch, 2);
  TrainingConfig c;
  c.epochs = 50;
  c.learning_rate = 1e6;
  EXPECT_THROW(train(m, d.images, d.frames, d.labels, c), TrainingDiverged);
}

TEST(Training, PlateauStopsEarly) {
  const ArchConfig arch = tiny_conv(false);
  const auto d = toy_dataset(arch, 2, 3, 3);
  AutoEncoderModel m(arch, 2);
  TrainingConfig c;
  c.epochs = 500;
  c.learning_rate = 1e-9;
  c.exponential_decay = false;
  c.plateau_patience = 3;
  const auto r = train(m, d.images, d.frames, d.labels, c);
  EXPECT_TRUE(r.stopped_on_plateau);
  EXPECT_LT(r.trace.size(), 10u);
}

TEST(Training, MisalignedInputsThrow) {
  const ArchConfig arch = tiny_conv(false);
  AutoEncoderModel m(arch, 2);
  const auto images = random_patches(arch, 2, 1);
  const std::vector<int> frames{1};
  const std::vector<long> labels{0, 1};
  EXPECT_THROW(train(m, images, frames, labels, TrainingConfig{}), std::invalid_argument);
}

TEST(GradientCheck, LinearModel) {
  const ArchConfig arch = ArchConfig::linear(Shape{1, 4, 4}, 3);
  AutoEncoderModel m(arch, 6);
  const auto batch = random_patches(arch, 3, 7);
  const std::vector<long> labels{0, 0, 1};
  const auto centroids = compute_centroids(m, batch, labels);
  for (double lambda : {0.0, 0.5, 0.95}) {
    const auto r = gradient_check(m, batch, labels, centroids, lambda);
    EXPECT_LT(r.max_relative_error, 1e-6) << lambda;
    EXPECT_GT(r.checked, 0u);
  }
}

class ConvGradientCheck : public ::testing::TestWithParam<std::tuple<bool, double>> {};

TEST_P(ConvGradientCheck, MatchesFiniteDifferences) {
  const auto [batchnorm, lambda] = GetParam();
  const ArchConfig arch = tiny_conv(batchnorm);
  AutoEncoderModel m(arch, 9);
  ASSERT_LE(m.parameter_count(), 5000u);
  const auto batch = random_patches(arch, 3, 10);
  const std::vector<long> labels{0, 1, 0};
  // centroids away from the current latents so the clustering gradient is non-trivial
  auto centroids = compute_centroids(m, batch, labels);
  for (auto& [label, c] : centroids.centroid) {
    for (auto& v : c.values) v += 0.3;
  }
  GradientCheckOptions options;
  options.samples_per_tensor = 12;
  const auto r = gradient_check(m, batch, labels, centroids, lambda, options);
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_GT(r.checked, 50u);
  EXPECT_TRUE(r.max_error_by_layer.contains(LayerKind::Conv));
  EXPECT_TRUE(r.max_error_by_layer.contains(LayerKind::Dense));
  if (batchnorm) EXPECT_TRUE(r.max_error_by_layer.contains(LayerKind::BatchNorm));
}

INSTANTIATE_TEST_SUITE_P(Variants, ConvGradientCheck,
                         ::testing::Combine(::testing::Bool(), ::testing::Values(0.0, 0.5, 0.95)));
