#include "leea/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "leea/errors.hpp"

namespace leea {

NetworkSpec NetworkSpec::mnist() { return NetworkSpec{}; }

std::size_t NetworkSpec::input_features() const {
  return pool2x2 ? (input_rows / 2) * (input_cols / 2) : input_rows * input_cols;
}

std::size_t NetworkSpec::fan_in(std::size_t layer) const {
  return layer == 0 ? input_features() : layer_units.at(layer - 1);
}

std::size_t NetworkSpec::weight_offset(std::size_t layer) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) offset += fan_in(l) * fan_out(l) + fan_out(l);
  return offset;
}

std::size_t NetworkSpec::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + fan_in(layer) * fan_out(layer);
}

void NetworkSpec::validate() const {
  if (layer_units.empty()) throw ConfigError("network needs at least one layer");
  if (input_rows == 0 || input_cols == 0) throw ConfigError("network input extents must be positive");
  if (pool2x2 && (input_rows % 2 != 0 || input_cols % 2 != 0)) {
    throw ConfigError("2x2 pooling needs even input extents");
  }
  for (auto u : layer_units) {
    if (u == 0) throw ConfigError("layer widths must be positive");
  }
}

std::size_t param_count(const NetworkSpec& spec) {
  return spec.weight_offset(spec.num_layers());
}

PopulationParams::PopulationParams(NetworkSpec spec, std::size_t population)
    : spec_(std::move(spec)), population_(population) {
  spec_.validate();
  genome_length_ = param_count(spec_);
  genomes_.assign(population_ * genome_length_, 0.0f);
}

std::span<float> PopulationParams::genome(std::size_t k) {
  return std::span<float>(genomes_).subspan(k * genome_length_, genome_length_);
}

std::span<const float> PopulationParams::genome(std::size_t k) const {
  return std::span<const float>(genomes_).subspan(k * genome_length_, genome_length_);
}

MatrixStack PopulationParams::layer_weights(std::size_t layer) const {
  return {genomes_.data() + spec_.weight_offset(layer), population_, spec_.fan_out(layer),
          spec_.fan_in(layer), genome_length_};
}

VectorStack PopulationParams::layer_biases(std::size_t layer) const {
  return {genomes_.data() + spec_.bias_offset(layer), population_, spec_.fan_out(layer),
          genome_length_};
}

PopulationParams PopulationParams::select(std::span<const std::size_t> individuals) const {
  PopulationParams out(spec_, individuals.size());
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    auto src = genome(individuals[i]);
    std::copy(src.begin(), src.end(), out.genome(i).begin());
  }
  if (sigma_genes_) {
    std::vector<float> sig(individuals.size());
    for (std::size_t i = 0; i < individuals.size(); ++i) sig[i] = (*sigma_genes_)[individuals[i]];
    out.sigma_genes_ = std::move(sig);
  }
  return out;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

PopulationParams glorot_uniform_init(const NetworkSpec& spec, std::size_t population,
                                     std::uint64_t seed) {
  PopulationParams params(spec, population);
  for (std::size_t k = 0; k < population; ++k) {
    Rng rng(derive_seed(seed, k));
    auto genome = params.genome(k);
    for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
      const auto limit = static_cast<float>(glorot_limit(spec.fan_in(layer), spec.fan_out(layer)));
      std::uniform_real_distribution<float> dist(-limit, limit);
      const std::size_t begin = spec.weight_offset(layer);
      const std::size_t end = spec.bias_offset(layer);
      for (std::size_t i = begin; i < end; ++i) genome[i] = dist(rng);
    }
  }
  return params;
}

std::vector<float> flatten_params(const PopulationParams& params, std::size_t k) {
  if (k >= params.size()) {
    throw std::out_of_range("individual " + std::to_string(k) + " out of range for population of " +
                            std::to_string(params.size()));
  }
  auto g = params.genome(k);
  return {g.begin(), g.end()};
}

std::vector<LayerTensors> unflatten_params(std::span<const float> genome, const NetworkSpec& spec) {
  if (genome.size() != param_count(spec)) {
    throw DimensionError("genome", "genome has " + std::to_string(genome.size()) +
                                       " values, architecture needs " +
                                       std::to_string(param_count(spec)));
  }
  std::vector<LayerTensors> layers;
  layers.reserve(spec.num_layers());
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t out = spec.fan_out(l), in = spec.fan_in(l);
    auto w = genome.subspan(spec.weight_offset(l), out * in);
    auto b = genome.subspan(spec.bias_offset(l), out);
    layers.push_back({Tensor({1, out, in}, std::vector<float>(w.begin(), w.end())),
                      Tensor({1, out}, std::vector<float>(b.begin(), b.end()))});
  }
  return layers;
}

PopulationParams from_genome(const NetworkSpec& spec, std::span<const float> genome) {
  if (genome.size() != param_count(spec)) {
    throw DimensionError("genome", "genome has " + std::to_string(genome.size()) +
                                       " values, architecture needs " +
                                       std::to_string(param_count(spec)));
  }
  PopulationParams params(spec, 1);
  std::copy(genome.begin(), genome.end(), params.genome(0).begin());
  return params;
}

Tensor prepare_inputs(const NetworkSpec& spec, const Tensor& images) {
  if (images.rank() != 3 || images.dim(1) != spec.input_rows || images.dim(2) != spec.input_cols) {
    throw DimensionError("image", "expected images [b," + std::to_string(spec.input_rows) + "," +
                                      std::to_string(spec.input_cols) + "], got " +
                                      to_string(images.shape()));
  }
  const std::size_t b = images.dim(0);
  if (spec.pool2x2) return maxpool2x2(images).reshaped({b, spec.input_features()});
  return images.reshaped({b, spec.input_features()});
}

void forward_range(const PopulationParams& params, std::size_t first, std::size_t count,
                   const Tensor& features, std::span<float> out) {
  const NetworkSpec& spec = params.spec();
  if (features.rank() != 2 || features.dim(1) != spec.input_features()) {
    throw DimensionError("features", "expected features [b," +
                                         std::to_string(spec.input_features()) + "], got " +
                                         to_string(features.shape()));
  }
  if (first + count > params.size()) {
    throw DimensionError("population", "individual range exceeds population");
  }
  const std::size_t b = features.dim(0);
  const std::size_t classes = spec.num_classes();
  if (out.size() != count * b * classes) {
    throw DimensionError("output", "output buffer holds " + std::to_string(out.size()) +
                                       " floats, need " + std::to_string(count * b * classes));
  }
  if (count == 0 || b == 0) return;

  const std::size_t widest = *std::max_element(spec.layer_units.begin(), spec.layer_units.end());
  std::vector<float> ping(count * b * widest);
  std::vector<float> pong(count * b * widest);

  // The image batch is stored once and broadcast along the population axis.
  MatrixStack input{features.data(), count, b, features.dim(1), 0};
  const std::size_t offset = first * params.genome_length();

  for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
    MatrixStack w = params.layer_weights(layer);
    VectorStack bias = params.layer_biases(layer);
    w.data += offset;
    w.count = count;
    bias.data += offset;
    bias.count = count;

    const std::size_t units = spec.fan_out(layer);
    const bool last = layer + 1 == spec.num_layers();
    std::span<float> dst = last ? out : std::span<float>(ping).first(count * b * units);
    pop_linear_into(w, bias, input, dst);
    if (last) {
      softmax_rows_inplace(dst, units);
    } else {
      relu_inplace(dst);
      input = MatrixStack{dst.data(), count, b, units, b * units};
      std::swap(ping, pong);
    }
  }
}

Tensor forward(const PopulationParams& params, const Tensor& images) {
  const Tensor features = prepare_inputs(params.spec(), images);
  Tensor out({params.size(), features.dim(0), params.spec().num_classes()});
  forward_range(params, 0, params.size(), features, out.values());
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'L', 'E', 'E', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto* c = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t position() const noexcept { return pos_; }

  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw ParseError(pos_, std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const PopulationParams& params) {
  const NetworkSpec& spec = params.spec();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(spec.input_rows));
  w.u32(static_cast<std::uint32_t>(spec.input_cols));
  w.u8(spec.pool2x2 ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(spec.num_layers()));
  for (auto u : spec.layer_units) w.u32(static_cast<std::uint32_t>(u));
  w.u64(params.size());
  w.u8(params.sigma_genes() ? 1 : 0);
  for (float v : params.all_genomes()) w.f32(v);
  if (params.sigma_genes()) {
    for (float v : *params.sigma_genes()) w.f32(v);
  }
  return w.take();
}

PopulationParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof kMagic, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw ParseError(0, "not a checkpoint file (bad magic)");
  }
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8("magic");
  const auto version_pos = r.position();
  if (const auto version = r.u8("version"); version != kVersion) {
    throw ParseError(version_pos, "unsupported checkpoint version " + std::to_string(version));
  }
  NetworkSpec spec;
  spec.input_rows = r.u32("input rows");
  spec.input_cols = r.u32("input cols");
  spec.pool2x2 = r.u8("pooling flag") != 0;
  const auto layers_pos = r.position();
  const std::uint32_t layers = r.u32("layer count");
  if (layers == 0 || layers > 64) {
    throw ParseError(layers_pos, "implausible layer count " + std::to_string(layers));
  }
  spec.layer_units.clear();
  for (std::uint32_t l = 0; l < layers; ++l) spec.layer_units.push_back(r.u32("layer units"));
  const auto spec_end = r.position();
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ParseError(spec_end, std::string("invalid architecture: ") + e.what());
  }
  const std::uint64_t population = r.u64("population size");
  const bool has_sigma = r.u8("sigma flag") != 0;
  const std::size_t c = param_count(spec);
  const std::size_t remaining = bytes.size() - r.position();
  const std::size_t expected = 4 * (population * c + (has_sigma ? population : 0));
  if (remaining != expected) {
    throw ParseError(r.position(), "checkpoint payload has " + std::to_string(remaining) +
                                       " bytes, expected " + std::to_string(expected));
  }
  PopulationParams params(spec, population);
  for (auto& v : params.all_genomes()) v = r.f32("parameters");
  if (has_sigma) {
    std::vector<float> sigma(population);
    for (auto& v : sigma) {
      const auto pos = r.position();
      v = r.f32("sigma genes");
      if (!(v > 0.0f) || !std::isfinite(v)) throw ParseError(pos, "sigma gene must be positive");
    }
    params.sigma_genes() = std::move(sigma);
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const PopulationParams& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

PopulationParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace leea
