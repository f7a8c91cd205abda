#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pepkit/nn.hpp"

namespace pepkit {

enum class Split : std::uint8_t { none = 0, train = 1, validation = 2, test = 3 };

const char* split_name(Split split);
Split split_from_name(const std::string& name);

// Labeled classification data. `splits` tags each row; untagged rows are
// Split::none until assign_splits runs.
struct Dataset {
  FeatureMatrix features;   // n x dim
  std::vector<int> labels;  // values in [0, class_count)
  Index class_count = 0;
  std::vector<Split> splits;

  Index n() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  void validate() const;

  std::vector<Index> rows_in(Split split) const;
  Dataset subset(Split split) const;
  Dataset subset(const std::vector<Index>& rows) const;

  // Keeps rows whose label is in `keep` (ascending, distinct), relabels
  // them 0..keep.size()-1 in that order. Split tags carry over.
  Dataset filter_classes(const std::vector<int>& keep) const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;  // fractions positive, sum to 1 within 1e-9
};

// Shuffles row indices with the split seed and tags them train /
// validation / test. Counts are floor(n*f) for validation and test;
// train takes the remainder.
void assign_splits(Dataset& dataset, const SplitSpec& spec);

// IDX (the MNIST container format): u8 image tensor + u8 label vector.
// Pixels land in [0,1] as value/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void save_idx(const Dataset& dataset, const std::filesystem::path& images,
              const std::filesystem::path& labels);

// Gaussian class blobs: class means sit on a sphere of radius 3*spread
// (random directions), per-class noise std is spread^2. Noise shrinks
// faster than separation, so small spread means well-separated classes.
Dataset synth_blobs(Index class_count, Index per_class, Index dim, double spread,
                    std::uint64_t seed);

}  // namespace pepkit
