#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "checkpoint.hpp"
#include "image_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "trainer.hpp"

using namespace outpaint;
using testutil::error_kind;
using testutil::TempDir;

namespace {

ModelConfig tiny_model(bool local = false) {
  ModelConfig m;
  m.geometry = {16, 8, 4};
  m.local_discriminator = local;
  return m;
}

TrainingSchedule tiny_schedule() {
  TrainingSchedule s;
  s.t1 = 3;
  s.t2 = 2;
  s.t3 = 3;
  s.batch_size = 2;
  s.seed = 11;
  s.eval_interval = 2;
  s.checkpoint_interval = 3;
  return s;
}

std::vector<ImageTensor> tiny_batch(std::uint64_t seed, int n = 2) {
  std::vector<ImageTensor> b;
  for (int i = 0; i < n; ++i) b.push_back(normalize(oracle::random_image(16, 16, seed + i)));
  return b;
}

std::uint64_t disc_hash(const Checkpoint& c) {
  return params_hash(c.discriminator.global) ^ (params_hash(c.discriminator.local) << 1) ^
         (params_hash(c.discriminator.concat) << 2);
}

DatasetManifest tiny_manifest(const TempDir& dir) {
  for (int i = 0; i < 5; ++i)
    save_png(oracle::random_image(32, 32, 900 + i), dir / ("img" + std::to_string(i) + ".png"));
  return build_manifest(dir.path(), 1, 4, 16, 16);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("phase boundaries for the global-discriminator schedule") {
  TrainingSchedule s;
  s.t1 = 40950;
  s.t2 = 4550;
  s.t3 = 182000;
  CHECK(s.total() == 227500);
  CHECK(phase_of(0, s) == Phase::kGeneratorMse);
  CHECK(phase_of(40949, s) == Phase::kGeneratorMse);
  CHECK(phase_of(40950, s) == Phase::kDiscriminator);
  CHECK(phase_of(45499, s) == Phase::kDiscriminator);
  CHECK(phase_of(45500, s) == Phase::kAdversarial);
  CHECK(phase_of(227499, s) == Phase::kAdversarial);
  CHECK(error_kind([&] { phase_of(227500, s); }) == ErrorKind::kArgument);
  CHECK(error_kind([&] { phase_of(-1, s); }) == ErrorKind::kArgument);
  // 18 / 2 / 80 percent of the total.
  CHECK(std::llround(0.18 * 227500) == 40950);
  CHECK(std::llround(0.02 * 227500) == 4550);
  CHECK(std::llround(0.80 * 227500) == 182000);
}

TEST_CASE("phase lengths of zero are skipped") {
  TrainingSchedule s;
  s.t1 = 2;
  s.t2 = 0;
  s.t3 = 1;
  CHECK(phase_of(1, s) == Phase::kGeneratorMse);
  CHECK(phase_of(2, s) == Phase::kAdversarial);
}

TEST_CASE("phase names round trip") {
  for (Phase p : {Phase::kGeneratorMse, Phase::kDiscriminator, Phase::kAdversarial})
    CHECK(parse_phase(phase_name(p)) == p);
  CHECK(error_kind([] { parse_phase("P4"); }) == ErrorKind::kFormat);
}

TEST_CASE("schedule validation") {
  auto bad = [](auto mutate) {
    TrainingSchedule s = tiny_schedule();
    mutate(s);
    return error_kind([&] { s.validate(); });
  };
  CHECK(bad([](TrainingSchedule& s) { s.t1 = -1; }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.batch_size = 0; }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.alpha = -0.1; }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.alpha = std::nan(""); }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.learning_rate = 0; }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.eval_interval = 0; }) == ErrorKind::kConfig);
  CHECK(bad([](TrainingSchedule& s) { s.checkpoint_interval = 0; }) == ErrorKind::kConfig);
  CHECK_FALSE(bad([](TrainingSchedule&) {}).has_value());
}

TEST_CASE("model config validation") {
  ModelConfig m = tiny_model();
  m.dilations = {1, 0, 2};
  CHECK(error_kind([&] { m.validate(); }) == ErrorKind::kConfig);
  m = tiny_model();
  m.geometry = {15, 8, 4};
  CHECK(error_kind([&] { m.validate(); }) == ErrorKind::kConfig);
}

TEST_CASE("loss rows round trip exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int i = 0; i < 50; ++i) {
    LossRecord r;
    r.iteration = i * 37;
    r.phase = static_cast<Phase>(i % 3);
    r.train_mse = u(rng);
    if (i % 2) r.dev_mse = u(rng);
    if (i % 3) r.disc_loss = u(rng) * 1e-9;
    if (i % 5) r.gen_loss = u(rng);
    CHECK(parse_csv_row(to_csv_row(r)) == r);
  }
  CHECK(loss_csv_header() == "iteration,phase,train_mse,dev_mse,disc_loss,gen_loss");
  CHECK(error_kind([] { parse_csv_row("1,P1,2"); }) == ErrorKind::kFormat);
  CHECK(error_kind([] { parse_csv_row("x,P1,2,,,"); }) == ErrorKind::kFormat);
}

TEST_CASE("phase 1 touches only the generator, phase 2 only the discriminator") {
  for (bool local : {false, true}) {
    CAPTURE(local);
    Trainer t(initialize_training(tiny_model(local), tiny_schedule(), 0));
    const auto batch = tiny_batch(1);
    for (int i = 0; i < 3; ++i) {
      const auto g0 = params_hash(t.state().generator);
      const auto d0 = disc_hash(t.state());
      const auto dopt0 = t.state().discriminator_optimizer;
      const LossRecord r = t.step(batch);
      CHECK(r.phase == Phase::kGeneratorMse);
      CHECK(params_hash(t.state().generator) != g0);
      CHECK(disc_hash(t.state()) == d0);
      CHECK(t.state().discriminator_optimizer == dopt0);
      CHECK_FALSE(r.disc_loss.has_value());
    }
    for (int i = 0; i < 2; ++i) {
      const auto g0 = params_hash(t.state().generator);
      const auto gopt0 = t.state().generator_optimizer;
      const auto d0 = disc_hash(t.state());
      const LossRecord r = t.step(batch);
      CHECK(r.phase == Phase::kDiscriminator);
      CHECK(params_hash(t.state().generator) == g0);
      CHECK(t.state().generator_optimizer == gopt0);
      CHECK(disc_hash(t.state()) != d0);
      CHECK(r.disc_loss.has_value());
    }
    const auto g0 = params_hash(t.state().generator);
    const auto d0 = disc_hash(t.state());
    const LossRecord r = t.step(batch);
    CHECK(r.phase == Phase::kAdversarial);
    CHECK(params_hash(t.state().generator) != g0);
    CHECK(disc_hash(t.state()) != d0);
    CHECK(r.gen_loss.has_value());
  }
}

TEST_CASE("local discriminator parameters stay empty when disabled") {
  const Checkpoint c = initialize_training(tiny_model(false), tiny_schedule(), 0);
  CHECK(c.discriminator.local.count() == 0);
  const Checkpoint l = initialize_training(tiny_model(true), tiny_schedule(), 0);
  CHECK(l.discriminator.local.count() > 0);
}

TEST_CASE("training steps are deterministic") {
  Trainer a(initialize_training(tiny_model(true), tiny_schedule(), 0));
  Trainer b(initialize_training(tiny_model(true), tiny_schedule(), 0));
  for (int i = 0; i < 8; ++i) {
    const auto batch = tiny_batch(10 * i);
    CHECK(a.step(batch) == b.step(batch));
  }
  CHECK(a.state() == b.state());
}

TEST_CASE("non-finite losses raise a numeric error") {
  Trainer t(initialize_training(tiny_model(), tiny_schedule(), 0));
  auto batch = tiny_batch(1);
  batch[0](0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK(error_kind([&] { t.step(batch); }) == ErrorKind::kNumeric);
}

TEST_CASE("batches must match the model geometry") {
  Trainer t(initialize_training(tiny_model(), tiny_schedule(), 0));
  std::vector<ImageTensor> wrong{ImageTensor(16, 20, 3)};
  CHECK(error_kind([&] { t.step(wrong); }) == ErrorKind::kArgument);
  CHECK(error_kind([&] { t.step({}); }) == ErrorKind::kArgument);
}

TEST_CASE("a full run writes the log, checkpoints and final state") {
  TempDir dir("run");
  const auto manifest = tiny_manifest(dir);
  TrainingOptions opt;
  opt.out_dir = dir / "out";
  const auto res = run_training(manifest, tiny_model(), tiny_schedule(), opt);
  CHECK(res.records.size() == 8);
  CHECK(res.final_state.iteration == 8);
  namespace fs = std::filesystem;
  for (int it : {3, 5, 6, 8}) CHECK(fs::exists(checkpoint_path(opt.out_dir, it)));
  CHECK_FALSE(fs::exists(checkpoint_path(opt.out_dir, 4)));
  CHECK(fs::exists(opt.out_dir / "final.ckpt"));
  CHECK(load_checkpoint(opt.out_dir / "final.ckpt") == res.final_state);

  std::ifstream log(opt.out_dir / "loss.csv");
  std::string line;
  std::getline(log, line);
  CHECK(line == loss_csv_header());
  int rows = 0;
  while (std::getline(log, line)) {
    const LossRecord r = parse_csv_row(line);
    CHECK(r == res.records[rows]);
    // dev MSE every eval_interval iterations and at the end.
    CHECK(r.dev_mse.has_value() == ((r.iteration + 1) % 2 == 0));
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("resuming from any checkpoint reproduces the uninterrupted run") {
  TempDir dir("resume");
  const auto manifest = tiny_manifest(dir);
  TrainingSchedule sched = tiny_schedule();
  sched.checkpoint_interval = 1;
  TrainingOptions full;
  full.out_dir = dir / "full";
  const auto ref = run_training(manifest, tiny_model(true), sched, full);
  const std::string ref_log = slurp(full.out_dir / "loss.csv");

  for (int at = 1; at < 8; ++at) {
    CAPTURE(at);
    TrainingOptions part;
    part.out_dir = dir / ("part" + std::to_string(at));
    part.stop_at = at;
    const auto first = run_training(manifest, tiny_model(true), sched, part);
    CHECK(first.final_state.iteration == at);
    CHECK_FALSE(std::filesystem::exists(part.out_dir / "final.ckpt"));

    TrainingOptions rest;
    rest.out_dir = part.out_dir;
    rest.resume_from = checkpoint_path(part.out_dir, at);
    const auto second = run_training(manifest, tiny_model(true), sched, rest);
    CHECK(second.final_state == ref.final_state);
    CHECK(slurp(part.out_dir / "loss.csv") == ref_log);
    CHECK(slurp(part.out_dir / "final.ckpt") == slurp(full.out_dir / "final.ckpt"));
  }
}

TEST_CASE("resume refuses a checkpoint from a different configuration") {
  TempDir dir("resume-bad");
  const auto manifest = tiny_manifest(dir);
  TrainingOptions opt;
  opt.out_dir = dir / "a";
  opt.stop_at = 3;
  run_training(manifest, tiny_model(), tiny_schedule(), opt);

  TrainingSchedule other = tiny_schedule();
  other.seed = 99;
  TrainingOptions resume;
  resume.out_dir = dir / "a";
  resume.resume_from = checkpoint_path(opt.out_dir, 3);
  CHECK(error_kind([&] { run_training(manifest, tiny_model(), other, resume); }) ==
        ErrorKind::kConfig);
  CHECK(error_kind([&] { run_training(manifest, tiny_model(true), tiny_schedule(), resume); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("manifest target size must match the geometry") {
  TempDir dir("mismatch");
  auto manifest = tiny_manifest(dir);
  manifest.target_width = 32;
  TrainingOptions opt;
  opt.out_dir = dir / "o";
  CHECK(error_kind([&] { run_training(manifest, tiny_model(), tiny_schedule(), opt); }) ==
        ErrorKind::kConfig);
}
