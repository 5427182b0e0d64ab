#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace outpaint {

// Reproducible train/validation split of an image directory.
struct DatasetManifest {
  std::vector<std::string> train_paths;
  std::vector<std::string> val_paths;
  int target_height = 128;
  int target_width = 128;
  std::uint64_t seed = 0;
  // Files that looked like images but failed to decode.
  std::vector<std::string> skipped;

  // Line-oriented text form; see save().
  std::string serialize() const;
  static DatasetManifest parse(std::string_view text);

  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);

  // FNV-1a of the serialized form.
  std::uint64_t hash() const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Scans `root` recursively for PNG/JPEG files, drops undecodable ones, and
// holds out `val_count` images chosen by a seeded shuffle of the sorted list.
DatasetManifest build_manifest(const std::filesystem::path& root, std::size_t val_count,
                               std::uint64_t seed, int target_height = 128,
                               int target_width = 128);

// Training-set indices for one minibatch. Steps walk through consecutive
// seeded permutations ("epochs") of the training set, so a batch is a pure
// function of (seed, step) and each epoch visits every image once.
std::vector<std::size_t> batch_indices(std::size_t train_count, std::uint64_t seed,
                                       std::size_t batch_size, std::int64_t step);

// Seeded permutation of [0, n) used for epoch `epoch`.
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::int64_t epoch);

// Loads minibatches for a manifest, caching decoded images in memory up to
// `cache_limit` images.
class BatchLoader {
 public:
  explicit BatchLoader(DatasetManifest manifest, std::size_t cache_limit = 4096);

  const DatasetManifest& manifest() const { return manifest_; }

  std::vector<ImageTensor> sample(std::size_t batch_size, std::int64_t step);
  PixelImage train_image(std::size_t index);
  std::vector<PixelImage> validation_images() const;

 private:
  PixelImage load(const std::string& path) const;

  DatasetManifest manifest_;
  std::size_t cache_limit_;
  std::unordered_map<std::size_t, PixelImage> cache_;
  bool warned_replacement_ = false;
};

std::vector<ImageTensor> sample_minibatch(const DatasetManifest& manifest,
                                          std::size_t batch_size, std::int64_t step);

}  // namespace outpaint
