#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "leea/rng.hpp"
#include "leea/tensor.hpp"

namespace leea {

/// Fixed feed-forward architecture: optional 2x2 max-pooling of the input
/// image, then fully connected layers with ReLU on all but the last, then softmax.
///
/// Flat genome layout, stable across versions: for each layer in order, its
/// weight matrix [units, fan_in] row-major, followed by its bias vector [units].
/// Pooled pixels enter the first layer in row-major order.
struct NetworkSpec {
  std::size_t input_rows = 28;
  std::size_t input_cols = 28;
  bool pool2x2 = true;
  std::vector<std::size_t> layer_units = {256, 128, 64, 10};

  /// 28x28 input, 2x2 pooling, 256-128-64-10.
  static NetworkSpec mnist();

  std::size_t input_features() const;
  std::size_t num_layers() const noexcept { return layer_units.size(); }
  std::size_t num_classes() const { return layer_units.back(); }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const { return layer_units.at(layer); }

  /// Offset of the layer's weights within the flat genome; its biases follow
  /// immediately after fan_in*fan_out weights.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  /// Throws ConfigError on empty layers, zero extents or odd extents with pooling.
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

std::size_t param_count(const NetworkSpec& spec);

/// One layer of a population: weights [p, units, fan_in] and biases [p, units].
struct LayerTensors {
  Tensor weights;
  Tensor biases;
};

/// Parameters of p networks sharing one NetworkSpec.
///
/// Stored genome-major: individual k's flat genome is the contiguous row k of
/// a [p, param_count] matrix, so the population axis is the slowest-varying
/// one and genome-level operators work on contiguous spans. Per-layer access
/// goes through strided MatrixStack/VectorStack views.
class PopulationParams {
 public:
  PopulationParams() = default;
  PopulationParams(NetworkSpec spec, std::size_t population);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return population_; }
  std::size_t genome_length() const noexcept { return genome_length_; }

  std::span<float> genome(std::size_t k);
  std::span<const float> genome(std::size_t k) const;
  std::span<float> all_genomes() noexcept { return genomes_; }
  std::span<const float> all_genomes() const noexcept { return genomes_; }

  MatrixStack layer_weights(std::size_t layer) const;
  VectorStack layer_biases(std::size_t layer) const;

  /// Present only under self-adaptive mutation strength control.
  const std::optional<std::vector<float>>& sigma_genes() const noexcept { return sigma_genes_; }
  std::optional<std::vector<float>>& sigma_genes() noexcept { return sigma_genes_; }

  /// Copies the given individuals, in order, into a new population.
  PopulationParams select(std::span<const std::size_t> individuals) const;

  bool operator==(const PopulationParams&) const = default;

 private:
  NetworkSpec spec_;
  std::size_t population_ = 0;
  std::size_t genome_length_ = 0;
  std::vector<float> genomes_;
  std::optional<std::vector<float>> sigma_genes_;
};

/// Weights i.i.d. uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)) per
/// layer; biases zero. Individual k draws from its own stream derived from
/// `seed`, so the result does not depend on p for the first individuals.
PopulationParams glorot_uniform_init(const NetworkSpec& spec, std::size_t population,
                                     std::uint64_t seed);

double glorot_limit(std::size_t fan_in, std::size_t fan_out);

/// Flat genome of individual k in the documented layout.
std::vector<float> flatten_params(const PopulationParams& params, std::size_t k);

/// Per-layer tensors (population extent 1) from a flat genome.
std::vector<LayerTensors> unflatten_params(std::span<const float> genome, const NetworkSpec& spec);

/// Single-individual population holding `genome`.
PopulationParams from_genome(const NetworkSpec& spec, std::span<const float> genome);

/// Image batch [b, rows, cols] -> network input features [b, input_features].
/// Applies pooling when the spec asks for it.
Tensor prepare_inputs(const NetworkSpec& spec, const Tensor& images);

/// Class probabilities [p, b, classes] for every individual on a shared image batch.
Tensor forward(const PopulationParams& params, const Tensor& images);

/// Forward pass for individuals [first, first+count) on already prepared
/// features [b, input_features]. Writes softmax outputs into `out` (count*b*classes floats).
void forward_range(const PopulationParams& params, std::size_t first, std::size_t count,
                   const Tensor& features, std::span<float> out);

/// Binary checkpoint: magic "LEEACKPT", version byte, architecture,
/// population size, little-endian float32 genomes and optional sigma genes.
void save_checkpoint(const std::filesystem::path& path, const PopulationParams& params);
PopulationParams load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const PopulationParams& params);
PopulationParams decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace leea
