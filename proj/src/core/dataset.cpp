#include "dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "image_io.hpp"
#include "log.hpp"
#include "preprocess.hpp"

namespace outpaint {
namespace {

constexpr std::string_view kManifestHeader = "outpaint-manifest 1";

bool looks_like_image(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t value) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (value + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void shuffle_in_place(std::vector<std::size_t>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

std::string DatasetManifest::serialize() const {
  std::ostringstream os;
  os << kManifestHeader << "\n";
  os << "seed " << seed << "\n";
  os << "target " << target_height << " " << target_width << "\n";
  os << "[train] " << train_paths.size() << "\n";
  for (const auto& p : train_paths) os << p << "\n";
  os << "[val] " << val_paths.size() << "\n";
  for (const auto& p : val_paths) os << p << "\n";
  os << "[skipped] " << skipped.size() << "\n";
  for (const auto& p : skipped) os << p << "\n";
  return os.str();
}

DatasetManifest DatasetManifest::parse(std::string_view text) {
  DatasetManifest m;
  std::istringstream is{std::string(text)};
  std::string line;
  auto bad = [](const std::string& why) { fail(ErrorKind::kFormat, "malformed manifest: " + why); };
  if (!std::getline(is, line) || line != kManifestHeader) bad("missing header");

  auto keyed = [&](std::string_view key) {
    if (!std::getline(is, line) || line.rfind(std::string(key) + " ", 0) != 0)
      bad("expected '" + std::string(key) + "'");
    return std::istringstream(line.substr(key.size() + 1));
  };
  if (!(keyed("seed") >> m.seed)) bad("bad seed");
  {
    auto ls = keyed("target");
    if (!(ls >> m.target_height >> m.target_width) || m.target_height <= 0 ||
        m.target_width <= 0)
      bad("bad target size");
  }
  auto section = [&](std::string_view key, std::vector<std::string>& out) {
    std::size_t n = 0;
    if (!(keyed(key) >> n)) bad("bad count for " + std::string(key));
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(is, line)) bad("truncated " + std::string(key) + " section");
      out.push_back(line);
    }
  };
  section("[train]", m.train_paths);
  section("[val]", m.val_paths);
  section("[skipped]", m.skipped);
  return m;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  for (const auto* list : {&train_paths, &val_paths, &skipped})
    for (const auto& p : *list)
      require(p.find('\n') == std::string::npos, "manifest paths may not contain newlines");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << serialize();
  if (!out.flush()) fail(ErrorKind::kIo, "failed writing '" + path.string() + "'");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::uint64_t DatasetManifest::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

DatasetManifest build_manifest(const std::filesystem::path& root, std::size_t val_count,
                               std::uint64_t seed, int target_height, int target_width) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    fail(ErrorKind::kConfig, "dataset root '" + root.string() + "' is not a directory");
  require(target_height > 0 && target_width > 0, "target size must be positive");

  std::vector<std::string> candidates;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file() && looks_like_image(it->path()))
      candidates.push_back(it->path().string());
  }
  if (ec) fail(ErrorKind::kIo, "failed listing '" + root.string() + "': " + ec.message());
  std::sort(candidates.begin(), candidates.end());

  DatasetManifest m;
  m.seed = seed;
  m.target_height = target_height;
  m.target_width = target_width;
  std::vector<std::string> usable;
  for (const auto& path : candidates) {
    try {
      (void)load_image(path);
      usable.push_back(path);
    } catch (const Error& e) {
      log_warning("skipping undecodable file: " + std::string(e.what()));
      m.skipped.push_back(path);
    }
  }
  if (usable.empty())
    fail(ErrorKind::kConfig, "dataset root '" + root.string() + "' contains no decodable images");
  if (usable.size() < val_count + 1) {
    fail(ErrorKind::kConfig, "dataset has " + std::to_string(usable.size()) +
                                 " images; need at least " + std::to_string(val_count + 1) +
                                 " for a " + std::to_string(val_count) + "-image holdout");
  }

  std::vector<std::size_t> order(usable.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle_in_place(order, rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < val_count ? m.val_paths : m.train_paths).push_back(usable[order[i]]);
  }
  std::sort(m.train_paths.begin(), m.train_paths.end());
  std::sort(m.val_paths.begin(), m.val_paths.end());
  return m;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::int64_t epoch) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(epoch)));
  shuffle_in_place(perm, rng);
  return perm;
}

std::vector<std::size_t> batch_indices(std::size_t train_count, std::uint64_t seed,
                                       std::size_t batch_size, std::int64_t step) {
  require(batch_size >= 1, "batch size must be >= 1");
  require(train_count >= 1, "cannot sample from an empty training set");
  require(step >= 0, "step must be non-negative");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  const auto n = static_cast<std::uint64_t>(train_count);
  std::uint64_t pos = static_cast<std::uint64_t>(step) * batch_size;
  std::int64_t cached_epoch = -1;
  std::vector<std::size_t> perm;
  for (std::size_t j = 0; j < batch_size; ++j, ++pos) {
    const auto epoch = static_cast<std::int64_t>(pos / n);
    if (epoch != cached_epoch) {
      perm = epoch_permutation(train_count, seed, epoch);
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

BatchLoader::BatchLoader(DatasetManifest manifest, std::size_t cache_limit)
    : manifest_(std::move(manifest)), cache_limit_(cache_limit) {
  require(!manifest_.train_paths.empty(), "manifest has no training images");
}

PixelImage BatchLoader::load(const std::string& path) const {
  return load_and_downsample(path, manifest_.target_height, manifest_.target_width);
}

PixelImage BatchLoader::train_image(std::size_t index) {
  require(index < manifest_.train_paths.size(), "training index out of range");
  if (auto it = cache_.find(index); it != cache_.end()) return it->second;
  PixelImage img = load(manifest_.train_paths[index]);
  if (cache_.size() < cache_limit_) cache_.emplace(index, img);
  return img;
}

std::vector<ImageTensor> BatchLoader::sample(std::size_t batch_size, std::int64_t step) {
  if (batch_size > manifest_.train_paths.size() && !warned_replacement_) {
    log_warning("batch size " + std::to_string(batch_size) + " exceeds the " +
                std::to_string(manifest_.train_paths.size()) +
                " training images; batches will repeat images");
    warned_replacement_ = true;
  }
  std::vector<ImageTensor> batch;
  for (std::size_t idx : batch_indices(manifest_.train_paths.size(), manifest_.seed, batch_size, step))
    batch.push_back(normalize(train_image(idx)));
  return batch;
}

std::vector<PixelImage> BatchLoader::validation_images() const {
  std::vector<PixelImage> out;
  out.reserve(manifest_.val_paths.size());
  for (const auto& p : manifest_.val_paths) out.push_back(load(p));
  return out;
}

std::vector<ImageTensor> sample_minibatch(const DatasetManifest& manifest,
                                          std::size_t batch_size, std::int64_t step) {
  BatchLoader loader(manifest, 0);
  return loader.sample(batch_size, step);
}

}  // namespace outpaint
