#include "checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "config.hpp"

namespace outpaint {
namespace {

constexpr char kMagic[8] = {'O', 'U', 'T', 'P', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  template <typename V>
  void vec(const V& v) {
    using T = typename V::value_type;
    pod(static_cast<std::uint64_t>(v.size()));
    bytes(v.data(), v.size() * sizeof(T));
  }
  void params(const Params<float>& p) {
    pod(static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
      vec(l.weight_shape);
      vec(l.weight);
      vec(l.bias);
    }
  }
  void adam(const AdamState<float>& s) {
    params(s.first);
    params(s.second);
    pod(s.steps);
  }
  std::vector<char>& buffer() { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string source)
      : data_(data), size_(size), source_(std::move(source)) {}

  template <typename T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  template <typename T>
  Buffer<T> vec() {
    const auto n = pod<std::uint64_t>();
    if (n > (size_ - pos_) / sizeof(T)) corrupt("array length exceeds file size");
    Buffer<T> v(static_cast<std::size_t>(n));
    take(v.data(), v.size() * sizeof(T));
    return v;
  }
  Params<float> params() {
    Params<float> p;
    const auto layers = pod<std::uint32_t>();
    if (layers > 4096) corrupt("implausible layer count");
    for (std::uint32_t i = 0; i < layers; ++i) {
      LayerParams<float> l;
      const auto shape = vec<int>();
      l.weight_shape.assign(shape.begin(), shape.end());
      l.weight = vec<float>();
      l.bias = vec<float>();
      p.layers.push_back(std::move(l));
    }
    return p;
  }
  AdamState<float> adam() {
    AdamState<float> s;
    s.first = params();
    s.second = params();
    s.steps = pod<std::int64_t>();
    return s;
  }
  std::string string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == size_; }
  [[noreturn]] void corrupt(const std::string& why) const {
    fail(ErrorKind::kFormat, "checkpoint '" + source_ + "' is corrupt: " + why);
  }

 private:
  void take(void* out, std::size_t n) {
    if (n > size_ - pos_) corrupt("unexpected end of data");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string source_;
};

Json metadata(const Checkpoint& s) {
  return Json{{"format_version", kCheckpointFormatVersion},
              {"iteration", s.iteration},
              {"data_seed", s.data_seed},
              {"model", to_json(s.model)},
              {"schedule", to_json(s.schedule)}};
}

void write_atomically(const std::filesystem::path& path, const char* data, std::size_t n) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot open '" + tmp.string() + "' for writing");
    out.write(data, static_cast<std::streamsize>(n));
    out.flush();
    if (!out) fail(ErrorKind::kIo, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::kIo, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

void check_shapes(const Params<float>& expected, const Params<float>& actual, const char* what) {
  bool ok = expected.layers.size() == actual.layers.size();
  for (std::size_t i = 0; ok && i < expected.layers.size(); ++i) {
    ok = expected.layers[i].weight_shape == actual.layers[i].weight_shape &&
         expected.layers[i].weight.size() == actual.layers[i].weight.size() &&
         expected.layers[i].bias.size() == actual.layers[i].bias.size();
  }
  if (!ok)
    fail(ErrorKind::kFormat, std::string("checkpoint ") + what + " does not match its model config");
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return path.string() + ".json";
}

void save_checkpoint(const Checkpoint& s, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.pod(kCheckpointFormatVersion);
  const std::string meta = metadata(s).dump();
  w.pod(static_cast<std::uint64_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  w.params(s.generator);
  w.params(s.discriminator.global);
  w.params(s.discriminator.local);
  w.params(s.discriminator.concat);
  w.adam(s.generator_optimizer);
  w.adam(s.discriminator_optimizer.global);
  w.adam(s.discriminator_optimizer.local);
  w.adam(s.discriminator_optimizer.concat);
  const std::uint64_t hash = fnv1a(w.buffer().data(), w.buffer().size());
  w.pod(hash);

  write_atomically(path, w.buffer().data(), w.buffer().size());

  Json side = metadata(s);
  side["checkpoint"] = path.filename().string();
  side["fnv1a"] = hash;
  const std::string text = side.dump(2) + "\n";
  write_atomically(sidecar_path(path), text.data(), text.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> data((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (data.size() < sizeof(kMagic) + sizeof(std::uint32_t) + 2 * sizeof(std::uint64_t) ||
      std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorKind::kFormat, "'" + name + "' is not an outpaint checkpoint");
  }
  std::uint32_t version;
  std::memcpy(&version, data.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointFormatVersion) {
    fail(ErrorKind::kFormat, "checkpoint '" + name + "' has format version " +
                                 std::to_string(version) + "; this build reads version " +
                                 std::to_string(kCheckpointFormatVersion));
  }
  const std::size_t body = data.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + body, sizeof(stored));
  if (stored != fnv1a(data.data(), body))
    fail(ErrorKind::kFormat, "checkpoint '" + name + "' is truncated or corrupt (checksum mismatch)");

  Reader r(data.data(), body, name);
  r.string(sizeof(kMagic));
  r.pod<std::uint32_t>();
  const auto meta_len = r.pod<std::uint64_t>();
  if (meta_len > body) r.corrupt("metadata length exceeds file size");
  Json meta;
  try {
    meta = Json::parse(r.string(static_cast<std::size_t>(meta_len)));
  } catch (const Json::exception& e) {
    r.corrupt(std::string("bad metadata: ") + e.what());
  }

  Checkpoint s;
  try {
    s.model = model_from_json(meta.at("model"));
    s.schedule = schedule_from_json(meta.at("schedule"));
    s.iteration = meta.at("iteration").get<std::int64_t>();
    s.data_seed = meta.at("data_seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    r.corrupt(std::string("bad metadata: ") + e.what());
  } catch (const Error& e) {
    r.corrupt(e.what());
  }
  s.generator = r.params();
  s.discriminator.global = r.params();
  s.discriminator.local = r.params();
  s.discriminator.concat = r.params();
  s.generator_optimizer = r.adam();
  s.discriminator_optimizer.global = r.adam();
  s.discriminator_optimizer.local = r.adam();
  s.discriminator_optimizer.concat = r.adam();
  if (!r.done()) r.corrupt("trailing bytes");

  const Checkpoint fresh = initialize_training(s.model, s.schedule, s.data_seed);
  check_shapes(fresh.generator, s.generator, "generator");
  check_shapes(fresh.discriminator.global, s.discriminator.global, "global discriminator");
  check_shapes(fresh.discriminator.local, s.discriminator.local, "local discriminator");
  check_shapes(fresh.discriminator.concat, s.discriminator.concat, "concatenator");
  if (s.iteration < 0 || s.iteration > s.schedule.total())
    r.corrupt("iteration outside its schedule");
  return s;
}

}  // namespace outpaint
