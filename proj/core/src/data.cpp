#include "leea/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "leea/errors.hpp"

namespace leea {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t pixels = rows() * cols();
  Dataset out;
  out.name = name;
  out.num_classes = num_classes;
  out.images = Tensor({indices.size(), rows(), cols()});
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw std::out_of_range("dataset index " + std::to_string(src) + " out of range");
    std::copy_n(images.data() + src * pixels, pixels, out.images.data() + i * pixels);
    out.labels[i] = labels[src];
  }
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (bytes.size() < offset + 4) {
    throw ParseError(offset, std::string("IDX file truncated while reading ") + what);
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes) {
  if (const auto magic = read_be32(image_bytes, 0, "image magic"); magic != kIdxImageMagic) {
    throw ParseError(0, "bad IDX image magic " + std::to_string(magic));
  }
  const std::size_t count = read_be32(image_bytes, 4, "image count");
  const std::size_t rows = read_be32(image_bytes, 8, "row count");
  const std::size_t cols = read_be32(image_bytes, 12, "column count");
  const std::size_t header = 16;
  const std::size_t pixels = count * rows * cols;
  if (image_bytes.size() != header + pixels) {
    throw ParseError(std::min(image_bytes.size(), header + pixels),
                     "IDX image payload has " + std::to_string(image_bytes.size() - header) +
                         " bytes, header declares " + std::to_string(pixels));
  }

  if (const auto magic = read_be32(label_bytes, 0, "label magic"); magic != kIdxLabelMagic) {
    throw ParseError(0, "bad IDX label magic " + std::to_string(magic));
  }
  const std::size_t label_count = read_be32(label_bytes, 4, "label count");
  if (label_count != count) {
    throw ParseError(4, "label count " + std::to_string(label_count) +
                            " does not match image count " + std::to_string(count));
  }
  if (label_bytes.size() != 8 + label_count) {
    throw ParseError(std::min(label_bytes.size(), 8 + label_count),
                     "IDX label payload has " + std::to_string(label_bytes.size() - 8) +
                         " bytes, header declares " + std::to_string(label_count));
  }

  Dataset data;
  data.name = "idx";
  data.images = Tensor({count, rows, cols});
  for (std::size_t i = 0; i < pixels; ++i) {
    data.images[i] = static_cast<float>(image_bytes[header + i]) / 255.0f;
  }
  data.labels.assign(label_bytes.begin() + 8, label_bytes.end());
  for (std::size_t i = 0; i < count; ++i) {
    if (data.labels[i] >= data.num_classes) {
      throw ParseError(8 + i, "label " + std::to_string(data.labels[i]) + " out of range");
    }
  }
  return data;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  auto images = read_file(images_path);
  auto labels = read_file(labels_path);
  Dataset data = parse_idx(images, labels);
  data.name = images_path.filename().string();
  return data;
}

std::vector<std::uint8_t> encode_idx_images(const Dataset& data) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + data.images.size());
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  put_be32(out, static_cast<std::uint32_t>(data.rows()));
  put_be32(out, static_cast<std::uint32_t>(data.cols()));
  for (float v : data.images.values()) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Dataset& data) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + data.size());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  out.insert(out.end(), data.labels.begin(), data.labels.end());
  return out;
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  auto write = [](const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
  };
  write(images_path, encode_idx_images(data));
  write(labels_path, encode_idx_labels(data));
}

DataSplit split(const Dataset& data, std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
  if (n_train + n_val > data.size()) {
    throw ConfigError("split of " + std::to_string(n_train) + " + " + std::to_string(n_val) +
                      " exceeds dataset size " + std::to_string(data.size()));
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::span<const std::size_t> all(order);
  DataSplit out{data.subset(all.first(n_train)), data.subset(all.subspan(n_train, n_val))};
  out.train.name = data.name + ":train";
  out.validation.name = data.name + ":val";
  return out;
}

Tensor one_hot(std::span<const std::uint8_t> labels, std::size_t classes) {
  Tensor out({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ValidationError("label out of range for one-hot encoding");
    out(i, labels[i]) = 1.0f;
  }
  return out;
}

Batch make_batch(const Dataset& data, std::vector<std::size_t> indices) {
  Dataset picked = data.subset(indices);
  Batch batch;
  batch.one_hot = one_hot(picked.labels, data.num_classes);
  batch.images = std::move(picked.images);
  batch.labels = std::move(picked.labels);
  batch.indices = std::move(indices);
  return batch;
}

Batch sample_batch(const Dataset& data, std::size_t n, Rng& rng, bool with_replacement) {
  const std::size_t total = data.size();
  if (total == 0) throw ConfigError("cannot sample a batch from an empty dataset");
  std::vector<std::size_t> indices;
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    indices.resize(n);
    for (auto& i : indices) i = pick(rng);
  } else {
    if (n > total) {
      throw ConfigError("batch size " + std::to_string(n) + " exceeds dataset size " +
                        std::to_string(total));
    }
    // Partial Fisher-Yates.
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(n);
    indices = std::move(pool);
  }
  return make_batch(data, std::move(indices));
}

Dataset synthetic_blobs(const BlobSpec& spec, std::uint64_t seed) {
  const std::size_t dims = spec.rows * spec.cols;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(dims));
  for (auto& c : centers) {
    double norm = 0.0;
    for (auto& v : c) {
      v = normal(rng);
      norm += v * v;
    }
    const double scale = norm > 0.0 ? spec.separation / std::sqrt(2.0 * norm) : 0.0;
    for (auto& v : c) v *= scale;
  }

  Dataset data;
  data.name = "blobs";
  data.num_classes = spec.classes;
  const std::size_t total = spec.classes * spec.per_class;
  data.images = Tensor({total, spec.rows, spec.cols});
  data.labels.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t k = i % spec.classes;
    data.labels[i] = static_cast<std::uint8_t>(k);
    float* img = data.images.data() + i * dims;
    for (std::size_t d = 0; d < dims; ++d) img[d] = static_cast<float>(centers[k][d] + normal(rng));
  }
  return data;
}

}  // namespace leea
