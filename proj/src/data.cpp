#include "pepkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "pepkit/rng.hpp"

namespace pepkit {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t value) {
  const char buf[4] = {char(value >> 24), char(value >> 16), char(value >> 8), char(value)};
  out.write(buf, 4);
}

// IDX header: 0x00 0x00 <dtype> <ndim>, then ndim big-endian u32 dims.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::size_t data_offset = 0;
};

IdxTensor parse_idx_header(const std::vector<std::uint8_t>& bytes,
                           const std::filesystem::path& path) {
  if (bytes.size() < 4 || bytes[0] != 0 || bytes[1] != 0) {
    throw data_error(path.string() + ": not an IDX file");
  }
  if (bytes[2] != 0x08) {
    throw data_error(path.string() + ": only unsigned-byte IDX payloads are supported");
  }
  const std::size_t ndim = bytes[3];
  if (ndim == 0 || bytes.size() < 4 + 4 * ndim) {
    throw data_error(path.string() + ": truncated IDX header");
  }
  IdxTensor t;
  t.dims.resize(ndim);
  for (std::size_t d = 0; d < ndim; ++d) t.dims[d] = read_be32(bytes, 4 + 4 * d);
  t.data_offset = 4 + 4 * ndim;
  std::size_t total = 1;
  for (auto d : t.dims) total *= d;
  if (bytes.size() != t.data_offset + total) {
    throw data_error(path.string() + ": payload size does not match declared dims");
  }
  return t;
}

}  // namespace

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    default: return "none";
  }
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  if (name == "none") return Split::none;
  throw config_error("unknown split '" + name + "'");
}

void Dataset::validate() const {
  if (n() == 0) throw data_error("dataset is empty");
  if (class_count < 2) throw data_error("dataset needs at least 2 classes");
  if (static_cast<Index>(labels.size()) != n()) {
    throw shape_error("label count != feature rows");
  }
  if (static_cast<Index>(splits.size()) != n()) {
    throw shape_error("split tag count != feature rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw data_error("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(class_count) + ")");
    }
  }
  if (!features.allFinite()) throw data_error("features contain non-finite values");
}

std::vector<Index> Dataset::rows_in(Split split) const {
  std::vector<Index> rows;
  for (Index i = 0; i < n(); ++i) {
    if (splits[static_cast<std::size_t>(i)] == split) rows.push_back(i);
  }
  return rows;
}

Dataset Dataset::subset(Split split) const { return subset(rows_in(split)); }

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.class_count = class_count;
  out.features.resize(static_cast<Index>(rows.size()), dim());
  out.labels.reserve(rows.size());
  out.splits.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= n()) throw shape_error("subset row index out of range");
    out.features.row(static_cast<Index>(i)) = features.row(r);
    out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    out.splits.push_back(splits[static_cast<std::size_t>(r)]);
  }
  return out;
}

Dataset Dataset::filter_classes(const std::vector<int>& keep) const {
  if (keep.size() < 2) throw config_error("class filter must keep at least 2 classes");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= class_count) {
      throw config_error("class filter entry " + std::to_string(keep[i]) + " out of range");
    }
    if (i > 0 && keep[i] <= keep[i - 1]) {
      throw config_error("class filter must be ascending and distinct");
    }
  }
  std::vector<int> relabel(static_cast<std::size_t>(class_count), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    relabel[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
  }
  std::vector<Index> rows;
  for (Index i = 0; i < n(); ++i) {
    if (relabel[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] >= 0) {
      rows.push_back(i);
    }
  }
  Dataset out = subset(rows);
  for (auto& y : out.labels) y = relabel[static_cast<std::size_t>(y)];
  out.class_count = static_cast<Index>(keep.size());
  return out;
}

void SplitSpec::validate() const {
  if (train_fraction <= 0 || validation_fraction <= 0 || test_fraction <= 0) {
    throw config_error("split fractions must be positive");
  }
  const double sum = train_fraction + validation_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw config_error("split fractions sum to " + std::to_string(sum) + ", expected 1");
  }
}

void assign_splits(Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  dataset.validate();
  const Index n = dataset.n();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng::Xoshiro256pp gen(rng::derive_seed(spec.seed, "split"));
  rng::shuffle(order, gen);
  // validation and test get their floors; the remainder stays in train
  const auto n_val = static_cast<Index>(std::floor(double(n) * spec.validation_fraction));
  const auto n_test = static_cast<Index>(std::floor(double(n) * spec.test_fraction));
  const Index n_train = n - n_val - n_test;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    throw config_error("dataset too small for the requested split fractions");
  }
  for (Index i = 0; i < n; ++i) {
    Split tag = Split::test;
    if (i < n_train) {
      tag = Split::train;
    } else if (i < n_train + n_val) {
      tag = Split::validation;
    }
    dataset.splits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = tag;
  }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto ibytes = read_file(images);
  const auto lbytes = read_file(labels);
  const IdxTensor itens = parse_idx_header(ibytes, images);
  const IdxTensor ltens = parse_idx_header(lbytes, labels);
  // image magic 0x00000803 (u8, 3 dims), label magic 0x00000801
  if (itens.dims.size() != 3) {
    throw data_error(images.string() + ": image magic must be 0x00000803 (u8 tensor, 3 dims)");
  }
  if (ltens.dims.size() != 1) {
    throw data_error(labels.string() + ": label magic must be 0x00000801 (u8 vector)");
  }
  const auto n = static_cast<Index>(itens.dims[0]);
  if (n == 0) throw data_error(images.string() + ": file declares zero images");
  if (static_cast<Index>(ltens.dims[0]) != n) {
    throw data_error("image count != label count");
  }
  std::size_t dim = 1;
  for (std::size_t d = 1; d < itens.dims.size(); ++d) dim *= itens.dims[d];

  Dataset out;
  out.features.resize(n, static_cast<Index>(dim));
  out.labels.resize(static_cast<std::size_t>(n));
  out.splits.assign(static_cast<std::size_t>(n), Split::none);
  int max_label = 0;
  for (Index i = 0; i < n; ++i) {
    const std::size_t base = itens.data_offset + static_cast<std::size_t>(i) * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      out.features(i, static_cast<Index>(j)) = double(ibytes[base + j]) / 255.0;
    }
    const int y = lbytes[ltens.data_offset + static_cast<std::size_t>(i)];
    out.labels[static_cast<std::size_t>(i)] = y;
    max_label = std::max(max_label, y);
  }
  out.class_count = max_label + 1;
  out.validate();
  return out;
}

void save_idx(const Dataset& dataset, const std::filesystem::path& images,
              const std::filesystem::path& labels) {
  dataset.validate();
  {
    std::ofstream out(images, std::ios::binary);
    if (!out) throw data_error("cannot write " + images.string());
    // rows x 1 x dim keeps the standard 3-dim image magic
    const char magic[4] = {0, 0, 0x08, 3};
    out.write(magic, 4);
    write_be32(out, static_cast<std::uint32_t>(dataset.n()));
    write_be32(out, 1);
    write_be32(out, static_cast<std::uint32_t>(dataset.dim()));
    for (Index i = 0; i < dataset.n(); ++i) {
      for (Index j = 0; j < dataset.dim(); ++j) {
        const double v = std::clamp(dataset.features(i, j), 0.0, 1.0);
        const char byte = static_cast<char>(std::lround(v * 255.0));
        out.write(&byte, 1);
      }
    }
    if (!out) throw data_error("write failed: " + images.string());
  }
  {
    std::ofstream out(labels, std::ios::binary);
    if (!out) throw data_error("cannot write " + labels.string());
    const char magic[4] = {0, 0, 0x08, 1};
    out.write(magic, 4);
    write_be32(out, static_cast<std::uint32_t>(dataset.n()));
    for (int y : dataset.labels) {
      const char byte = static_cast<char>(y);
      out.write(&byte, 1);
    }
    if (!out) throw data_error("write failed: " + labels.string());
  }
}

Dataset synth_blobs(Index class_count, Index per_class, Index dim, double spread,
                    std::uint64_t seed) {
  if (class_count < 2) throw config_error("synth_blobs needs at least 2 classes");
  if (per_class < 1) throw config_error("synth_blobs needs per_class >= 1");
  if (dim < 1) throw config_error("synth_blobs needs dim >= 1");
  if (!(spread > 0)) throw config_error("synth_blobs needs spread > 0");

  // Class means: random unit directions scaled to radius 3*spread.
  rng::Xoshiro256pp mean_gen(rng::derive_seed(seed, "blobs.means"));
  Eigen::MatrixXd means(class_count, dim);
  for (Index c = 0; c < class_count; ++c) {
    Eigen::VectorXd dir(dim);
    double norm = 0.0;
    do {
      for (Index j = 0; j < dim; ++j) dir[j] = mean_gen.gaussian();
      norm = dir.norm();
    } while (norm < 1e-12);
    means.row(c) = (3.0 * spread / norm) * dir.transpose();
  }

  const double noise_std = spread * spread;
  rng::Xoshiro256pp noise_gen(rng::derive_seed(seed, "blobs.noise"));
  Dataset out;
  const Index n = class_count * per_class;
  out.class_count = class_count;
  out.features.resize(n, dim);
  out.labels.resize(static_cast<std::size_t>(n));
  out.splits.assign(static_cast<std::size_t>(n), Split::none);
  Index row = 0;
  for (Index c = 0; c < class_count; ++c) {
    for (Index s = 0; s < per_class; ++s, ++row) {
      for (Index j = 0; j < dim; ++j) {
        out.features(row, j) = means(c, j) + noise_std * noise_gen.gaussian();
      }
      out.labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
    }
  }
  out.validate();
  return out;
}

}  // namespace pepkit
