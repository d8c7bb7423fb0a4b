#include "dip/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dip/rng.hpp"

namespace dip {

namespace {

constexpr std::uint64_t kPrototypeTag = 0xDA7A;
constexpr std::uint64_t kNoiseTag = 0xDA7B;
constexpr std::uint64_t kSplitTag = 0x5917;
constexpr std::uint64_t kShotTag = 0x5807;

}  // namespace

std::vector<std::size_t> SyntheticDataset::indices_of(
    const std::vector<int>& classes) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), samples[i].label) !=
        classes.end()) {
      out.push_back(i);
    }
  }
  return out;
}

SyntheticDataset generate(int c_total, int per_class, double noise_sigma,
                          std::uint64_t seed, int n_patches,
                          std::size_t d_vis) {
  if (c_total < 2) {
    throw RangeError("generate: c_total must be >= 2");
  }
  if (per_class < 1) {
    throw RangeError("generate: per_class must be >= 1");
  }
  if (noise_sigma < 0.0) {
    throw RangeError("generate: noise_sigma must be >= 0");
  }
  if (n_patches < 1 || d_vis < 1) {
    throw RangeError("generate: invalid patch geometry");
  }

  SyntheticDataset ds;
  ds.c_total = c_total;
  ds.noise_sigma = noise_sigma;
  ds.per_class = per_class;
  ds.seed = seed;

  Rng proto_rng = Rng(seed).child(kPrototypeTag);
  ds.prototypes = Matrix(static_cast<std::size_t>(c_total), d_vis);
  for (int c = 0; c < c_total; ++c) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d_vis; ++j) {
      const double x = proto_rng.gaussian();
      ds.prototypes(static_cast<std::size_t>(c), j) = x;
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < d_vis; ++j) {
      ds.prototypes(static_cast<std::size_t>(c), j) *= inv;
    }
  }

  Rng noise_rng = Rng(seed).child(kNoiseTag);
  ds.samples.reserve(static_cast<std::size_t>(c_total) *
                     static_cast<std::size_t>(per_class));
  for (int c = 0; c < c_total; ++c) {
    for (int s = 0; s < per_class; ++s) {
      Sample sample;
      sample.label = c;
      sample.patches = Matrix(static_cast<std::size_t>(n_patches), d_vis);
      for (std::size_t p = 0; p < sample.patches.rows(); ++p) {
        for (std::size_t j = 0; j < d_vis; ++j) {
          sample.patches(p, j) = ds.prototypes(static_cast<std::size_t>(c), j) +
                                 noise_rng.gaussian(0.0, noise_sigma);
        }
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

SplitSpec split_base_new(const SyntheticDataset& dataset, std::uint64_t seed) {
  std::vector<int> ids(static_cast<std::size_t>(dataset.c_total));
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng = Rng(seed).child(kSplitTag);
  rng.shuffle(ids);

  const std::size_t base_count =
      (static_cast<std::size_t>(dataset.c_total) + 1) / 2;
  SplitSpec split;
  split.base_classes.assign(ids.begin(),
                            ids.begin() + static_cast<std::ptrdiff_t>(base_count));
  split.new_classes.assign(ids.begin() + static_cast<std::ptrdiff_t>(base_count),
                           ids.end());
  std::sort(split.base_classes.begin(), split.base_classes.end());
  std::sort(split.new_classes.begin(), split.new_classes.end());
  return split;
}

std::vector<std::size_t> sample_shots(const SyntheticDataset& dataset,
                                      const std::vector<int>& classes,
                                      int shots, std::uint64_t seed) {
  if (shots < 1) {
    throw RangeError("sample_shots: shots must be >= 1");
  }
  Rng rng = Rng(seed).child(kShotTag);
  std::vector<std::size_t> picked;
  for (int c : classes) {
    std::vector<std::size_t> pool = dataset.indices_of({c});
    if (static_cast<std::size_t>(shots) > pool.size()) {
      throw RangeError("sample_shots: " + std::to_string(shots) +
                       " shots requested but class " + std::to_string(c) +
                       " has only " + std::to_string(pool.size()) +
                       " samples");
    }
    rng.shuffle(pool);
    picked.insert(picked.end(), pool.begin(),
                  pool.begin() + static_cast<std::ptrdiff_t>(shots));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace dip
