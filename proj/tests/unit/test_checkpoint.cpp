#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "checkpoint.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace outpaint;
using testutil::error_kind;
using testutil::TempDir;

namespace {

Checkpoint trained_state() {
  ModelConfig m;
  m.geometry = {16, 8, 4};
  m.local_discriminator = true;
  TrainingSchedule s;
  s.t1 = 1;
  s.t2 = 1;
  s.t3 = 2;
  s.batch_size = 1;
  s.seed = 5;
  Trainer t(initialize_training(m, s, 77));
  const std::vector<ImageTensor> batch{normalize(oracle::random_image(16, 16, 1))};
  for (int i = 0; i < 3; ++i) t.step(batch);
  return t.state();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

}  // namespace

TEST_CASE("checkpoint round trip restores the complete state") {
  TempDir dir("ckpt");
  const Checkpoint state = trained_state();
  save_checkpoint(state, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back == state);
  CHECK(back.iteration == 3);
  CHECK(back.data_seed == 77);
  // P1, P2, P3: the generator moved twice.
  CHECK(back.generator_optimizer.steps == 2);
  // Saving the same state twice gives the same bytes.
  save_checkpoint(back, dir / "b.ckpt");
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
  CHECK_FALSE(std::filesystem::exists(dir / "a.ckpt.tmp"));
}

TEST_CASE("checkpoint sidecar records iteration, schedule and version") {
  TempDir dir("ckpt-side");
  const Checkpoint state = trained_state();
  save_checkpoint(state, dir / "a.ckpt");
  std::ifstream in(sidecar_path(dir / "a.ckpt"));
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("iteration").get<std::int64_t>() == 3);
  CHECK(j.at("format_version").get<std::uint32_t>() == kCheckpointFormatVersion);
  CHECK(j.at("schedule").at("t3").get<int>() == 2);
  CHECK(j.at("model").at("local_disc").get<bool>());
}

TEST_CASE("truncated or corrupted checkpoints are format errors") {
  TempDir dir("ckpt-bad");
  save_checkpoint(trained_state(), dir / "a.ckpt");
  const std::string bytes = slurp(dir / "a.ckpt");

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 1}) {
    CAPTURE(cut);
    spit(dir / "t.ckpt", bytes.substr(0, cut));
    CHECK(error_kind([&] { load_checkpoint(dir / "t.ckpt"); }) == ErrorKind::kFormat);
  }
  for (std::size_t pos : {std::size_t{9}, std::size_t{30}, bytes.size() / 3, bytes.size() - 3}) {
    CAPTURE(pos);
    std::string flipped = bytes;
    flipped[pos] = static_cast<char>(flipped[pos] ^ 0x40);
    spit(dir / "f.ckpt", flipped);
    CHECK(error_kind([&] { load_checkpoint(dir / "f.ckpt"); }) == ErrorKind::kFormat);
  }
  std::string version = bytes;
  version[8] = 9;
  spit(dir / "v.ckpt", version);
  try {
    load_checkpoint(dir / "v.ckpt");
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK(error_kind([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorKind::kIo);
}

TEST_CASE("saving into a missing directory is an I/O error") {
  CHECK(error_kind([] { save_checkpoint(trained_state(), "/nonexistent-dir/x.ckpt"); }) ==
        ErrorKind::kIo);
}
