#pragma once

#include <cstdint>
#include <vector>

#include "dip/matrix.hpp"

namespace dip {

struct Sample {
  Matrix patches;  // n_patches x d_vis
  int label = 0;
};

/// Synthetic classification task: one unit prototype per class in patch
/// space, samples are per-entry Gaussian perturbations of the prototype
/// repeated over all patches of an image. Regeneration from the same
/// seed reproduces every sample bit-identically.
struct SyntheticDataset {
  int c_total = 0;
  Matrix prototypes;  // c_total x d_vis, unit rows
  double noise_sigma = 0.0;
  int per_class = 0;
  std::vector<Sample> samples;  // class-major order
  std::uint64_t seed = 0;

  std::size_t d_vis() const { return prototypes.cols(); }
  /// Indices (into samples) of every sample whose label is in classes.
  std::vector<std::size_t> indices_of(const std::vector<int>& classes) const;
};

/// Disjoint equal split of the class ids; sizes differ by at most one
/// (base takes the extra class when c_total is odd).
struct SplitSpec {
  std::vector<int> base_classes;
  std::vector<int> new_classes;
};

SyntheticDataset generate(int c_total, int per_class, double noise_sigma,
                          std::uint64_t seed, int n_patches = 9,
                          std::size_t d_vis = 64);

SplitSpec split_base_new(const SyntheticDataset& dataset, std::uint64_t seed);

/// Exactly `shots` sample indices per listed class, drawn without
/// replacement by a seeded generator.
std::vector<std::size_t> sample_shots(const SyntheticDataset& dataset,
                                      const std::vector<int>& classes,
                                      int shots, std::uint64_t seed);

}  // namespace dip
