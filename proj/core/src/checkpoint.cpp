#include "selftrack/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <optional>
#include <fstream>
#include <istream>
#include <ostream>

namespace selftrack {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'T', 'A', 'E', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  return value;
}

}  // namespace

void save_checkpoint(const AutoEncoderModel& model, std::ostream& out) {
  const ArchConfig& a = model.architecture();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::int32_t>(out, a.channels);
  put<std::int32_t>(out, a.height);
  put<std::int32_t>(out, a.width);
  put<std::int32_t>(out, a.kernel);
  put<std::int32_t>(out, a.latent_dim);
  put<std::uint8_t>(out, a.batchnorm ? 1 : 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.filters.size()));
  for (int f : a.filters) put<std::int32_t>(out, f);
  put<std::uint64_t>(out, model.seed());
  put<std::int32_t>(out, model.epoch());

  // parameters() only hands out views; nothing is modified here
  const auto views = const_cast<AutoEncoderModel&>(model).parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(views.size()));
  for (const auto& view : views) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(view.name.size()));
    out.write(view.name.data(), static_cast<std::streamsize>(view.name.size()));
    put<std::uint64_t>(out, view.values.size());
    out.write(reinterpret_cast<const char*>(view.values.data()),
              static_cast<std::streamsize>(view.values.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

void save_checkpoint_file(const AutoEncoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

AutoEncoderModel load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a model checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  ArchConfig a;
  a.channels = get<std::int32_t>(in, "channels");
  a.height = get<std::int32_t>(in, "height");
  a.width = get<std::int32_t>(in, "width");
  a.kernel = get<std::int32_t>(in, "kernel");
  a.latent_dim = get<std::int32_t>(in, "latent_dim");
  a.batchnorm = get<std::uint8_t>(in, "batchnorm") != 0;
  const auto stages = get<std::uint32_t>(in, "filter count");
  if (stages > 16) throw CheckpointError("implausible filter count " + std::to_string(stages));
  a.filters.resize(stages);
  for (auto& f : a.filters) f = get<std::int32_t>(in, "filters");
  const auto seed = get<std::uint64_t>(in, "seed");
  const auto epoch = get<std::int32_t>(in, "epoch");

  std::optional<AutoEncoderModel> model;
  try {
    model.emplace(a, seed);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  model->set_epoch(epoch);

  auto views = model->parameters();
  const auto count = get<std::uint32_t>(in, "tensor count");
  if (count != views.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, architecture expects " +
                          std::to_string(views.size()));
  }
  for (auto& view : views) {
    const auto name_len = get<std::uint32_t>(in, "tensor name");
    if (name_len > 256) throw CheckpointError("implausible tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw CheckpointError("checkpoint truncated while reading tensor name");
    if (name != view.name) throw CheckpointError("expected tensor " + view.name + ", found " + name);
    const auto size = get<std::uint64_t>(in, "tensor size");
    if (size != view.values.size()) {
      throw CheckpointError("tensor " + name + " has " + std::to_string(size) + " values, expected " +
                            std::to_string(view.values.size()));
    }
    if (!in.read(reinterpret_cast<char*>(view.values.data()), static_cast<std::streamsize>(size * sizeof(double)))) {
      throw CheckpointError("checkpoint truncated in tensor " + name);
    }
  }
  return std::move(*model);
}

AutoEncoderModel load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace selftrack
