#include "trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "checkpoint.hpp"
#include "log.hpp"
#include "objectives.hpp"

namespace outpaint {
namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_finite(double value, const char* what, std::int64_t iteration) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::kNumeric, std::string("non-finite ") + what + " (" + format_double(value) +
                                  ") at iteration " + std::to_string(iteration));
  }
}

}  // namespace

void TrainingSchedule::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorKind::kConfig, m); };
  if (t1 < 0 || t2 < 0 || t3 < 0) bad("phase lengths T1, T2, T3 must be non-negative");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) bad("alpha must be a finite value >= 0");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be > 0");
  if (eval_interval < 1) bad("eval_interval must be >= 1");
  if (checkpoint_interval < 1) bad("checkpoint_interval must be >= 1");
}

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kGeneratorMse: return "P1";
    case Phase::kDiscriminator: return "P2";
    case Phase::kAdversarial: return "P3";
  }
  return "?";
}

Phase parse_phase(std::string_view name) {
  if (name == "P1") return Phase::kGeneratorMse;
  if (name == "P2") return Phase::kDiscriminator;
  if (name == "P3") return Phase::kAdversarial;
  fail(ErrorKind::kFormat, "unknown phase '" + std::string(name) + "'");
}

Phase phase_of(std::int64_t iteration, const TrainingSchedule& schedule) {
  require(iteration >= 0 && iteration < schedule.total(),
          "iteration " + std::to_string(iteration) + " outside schedule of " +
              std::to_string(schedule.total()) + " iterations");
  if (iteration < schedule.t1) return Phase::kGeneratorMse;
  if (iteration < schedule.t1 + schedule.t2) return Phase::kDiscriminator;
  return Phase::kAdversarial;
}

void ModelConfig::validate() const {
  try {
    geometry.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  for (int d : dilations)
    if (d < 1) fail(ErrorKind::kConfig, "dilations must be positive");
  if (geometry.total_width() % 2 != 0 || geometry.height % 2 != 0)
    fail(ErrorKind::kConfig, "image height and width must be even for the generator");
}

std::string loss_csv_header() { return "iteration,phase,train_mse,dev_mse,disc_loss,gen_loss"; }

std::string to_csv_row(const LossRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return std::to_string(r.iteration) + "," + phase_name(r.phase) + "," +
         format_double(r.train_mse) + "," + opt(r.dev_mse) + "," + opt(r.disc_loss) + "," +
         opt(r.gen_loss);
}

LossRecord parse_csv_row(const std::string& row) {
  std::vector<std::string> fields;
  std::stringstream ss(row);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!row.empty() && row.back() == ',') fields.emplace_back();
  if (fields.size() != 6) fail(ErrorKind::kFormat, "loss row needs 6 fields: '" + row + "'");
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) fail(ErrorKind::kFormat, "bad number in loss row: '" + row + "'");
    return v;
  };
  auto opt = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return num(s);
  };
  LossRecord r;
  const double it = num(fields[0]);
  if (it != std::floor(it) || it < 0) fail(ErrorKind::kFormat, "bad iteration in loss row: '" + row + "'");
  r.iteration = static_cast<std::int64_t>(it);
  r.phase = parse_phase(fields[1]);
  r.train_mse = num(fields[2]);
  r.dev_mse = opt(fields[3]);
  r.disc_loss = opt(fields[4]);
  r.gen_loss = opt(fields[5]);
  return r;
}

Checkpoint initialize_training(const ModelConfig& model, const TrainingSchedule& schedule,
                               std::uint64_t data_seed) {
  model.validate();
  schedule.validate();
  Checkpoint state;
  state.model = model;
  state.schedule = schedule;
  state.data_seed = data_seed;
  state.generator = init_params<float>(generator_spec(model.dilations),
                                       Shape{model.geometry.height, model.geometry.total_width(), 4},
                                       schedule.seed);
  Discriminator disc(model.image_shape(), model.local_discriminator);
  state.discriminator = disc.init<float>(schedule.seed + 1);
  state.generator_optimizer = AdamState<float>::like(state.generator);
  state.discriminator_optimizer = DiscriminatorOptimizer<float>::like(state.discriminator);
  return state;
}

Trainer::Trainer(Checkpoint state)
    : state_(std::move(state)),
      generator_spec_(generator_spec(state_.model.dilations)),
      discriminator_(state_.model.image_shape(), state_.model.local_discriminator),
      mask_(build_mask(state_.model.geometry)) {
  state_.model.validate();
  state_.schedule.validate();
  adam_.learning_rate = state_.schedule.learning_rate;
}

void Trainer::set_learning_rate(double lr) {
  require(lr > 0.0 && std::isfinite(lr), "learning rate must be positive");
  adam_.learning_rate = lr;
}

ImageTensor Trainer::generate(const ImageTensor& image) const {
  PreprocessedPair pair = assemble_input(image, mask_);
  return forward(generator_spec_, state_.generator, pair.generator_input);
}

double Trainer::evaluate_mse(std::span<const ImageTensor> images) const {
  require(!images.empty(), "evaluate_mse needs at least one image");
  double total = 0.0;
  for (const auto& img : images) total += mse_loss(generate(img), img, mask_);
  return total / static_cast<double>(images.size());
}

void Trainer::discriminator_step(std::span<const ImageTensor> real,
                                 std::span<const ImageTensor> fake, LossRecord& record) {
  const double scale = 1.0 / static_cast<double>(real.size());
  DiscriminatorBundle<float> grads = state_.discriminator.zeros_like();
  double loss = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    DiscriminatorTrace<float> real_trace;
    DiscriminatorTrace<float> fake_trace;
    const double p_real = discriminator_.forward(state_.discriminator, real[i], &real_trace);
    const double p_fake = discriminator_.forward(state_.discriminator, fake[i], &fake_trace);
    loss += disc_loss(p_real, p_fake) * scale;
    discriminator_.backward(state_.discriminator, real_trace,
                            static_cast<float>(disc_loss_grad_real(p_real) * scale), grads, false);
    discriminator_.backward(state_.discriminator, fake_trace,
                            static_cast<float>(disc_loss_grad_fake(p_fake) * scale), grads, false);
  }
  check_finite(loss, "discriminator loss", state_.iteration);
  record.disc_loss = loss;
  auto& opt = state_.discriminator_optimizer;
  adam_step(state_.discriminator.global, grads.global, opt.global, adam_);
  if (discriminator_.use_local())
    adam_step(state_.discriminator.local, grads.local, opt.local, adam_);
  adam_step(state_.discriminator.concat, grads.concat, opt.concat, adam_);
}

LossRecord Trainer::step(std::span<const ImageTensor> batch) {
  require(!batch.empty(), "training batch is empty");
  const Shape expected = state_.model.image_shape();
  for (const auto& img : batch)
    require(img.shape() == expected, "batch image shape does not match the model geometry");

  const Phase phase = phase_of(state_.iteration, state_.schedule);
  LossRecord record;
  record.iteration = state_.iteration;
  record.phase = phase;
  const bool train_generator = phase != Phase::kDiscriminator;
  const double scale = 1.0 / static_cast<double>(batch.size());

  std::vector<Trace<float>> traces(batch.size());
  std::vector<ImageTensor> outputs;
  outputs.reserve(batch.size());
  double mse = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    PreprocessedPair pair = assemble_input(batch[i], mask_);
    outputs.push_back(forward(generator_spec_, state_.generator, pair.generator_input,
                              train_generator ? &traces[i] : nullptr));
    mse += mse_loss(outputs.back(), batch[i], mask_) * scale;
  }
  check_finite(mse, "MSE loss", state_.iteration);
  record.train_mse = mse;

  if (phase != Phase::kGeneratorMse) discriminator_step(batch, outputs, record);

  if (train_generator) {
    const double alpha = phase == Phase::kAdversarial ? state_.schedule.alpha : 0.0;
    Params<float> grads = state_.generator.zeros_like();
    double gen_total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Tensor<float> grad_out = mse_loss_grad(outputs[i], batch[i], mask_, scale);
      if (phase == Phase::kAdversarial) {
        DiscriminatorTrace<float> trace;
        const double p_fake = discriminator_.forward(state_.discriminator, outputs[i], &trace);
        gen_total += gen_loss(mse_loss(outputs[i], batch[i], mask_), p_fake, alpha) * scale;
        DiscriminatorBundle<float> unused = state_.discriminator.zeros_like();
        Tensor<float> adv = discriminator_.backward(
            state_.discriminator, trace, static_cast<float>(gen_loss_grad_fake(p_fake, alpha) * scale),
            unused, true);
        for (std::size_t k = 0; k < grad_out.size(); ++k) grad_out[k] += adv[k];
      }
      backward(generator_spec_, state_.generator, traces[i], grad_out, grads, false);
    }
    if (phase == Phase::kAdversarial) {
      check_finite(gen_total, "generator loss", state_.iteration);
      record.gen_loss = gen_total;
    }
    adam_step(state_.generator, grads, state_.generator_optimizer, adam_);
  }

  ++state_.iteration;
  return record;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir,
                                      std::int64_t iteration) {
  char name[64];
  std::snprintf(name, sizeof(name), "ckpt-%08lld.ckpt", static_cast<long long>(iteration));
  return out_dir / "checkpoints" / name;
}

TrainingResult run_training(const DatasetManifest& manifest, const ModelConfig& model,
                            const TrainingSchedule& schedule, const TrainingOptions& options) {
  namespace fs = std::filesystem;
  model.validate();
  schedule.validate();
  if (manifest.target_height != model.geometry.height ||
      manifest.target_width != model.geometry.total_width()) {
    fail(ErrorKind::kConfig, "manifest target size " + std::to_string(manifest.target_height) +
                                 "x" + std::to_string(manifest.target_width) +
                                 " does not match the model geometry");
  }

  Checkpoint initial;
  if (options.resume_from) {
    initial = load_checkpoint(*options.resume_from);
    if (!(initial.model == model) || !(initial.schedule == schedule))
      fail(ErrorKind::kConfig, "checkpoint '" + options.resume_from->string() +
                                   "' was written for a different model or schedule");
    if (initial.data_seed != manifest.seed)
      fail(ErrorKind::kConfig, "checkpoint data seed does not match the manifest seed");
  } else {
    initial = initialize_training(model, schedule, manifest.seed);
  }

  std::error_code ec;
  fs::create_directories(options.out_dir / "checkpoints", ec);
  if (ec) fail(ErrorKind::kIo, "cannot create '" + options.out_dir.string() + "': " + ec.message());

  // Keep only rows before the resume point so the log continues seamlessly.
  const fs::path log_path = options.out_dir / "loss.csv";
  std::vector<std::string> kept;
  if (options.resume_from && fs::exists(log_path)) {
    std::ifstream in(log_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty() && parse_csv_row(line).iteration < initial.iteration) kept.push_back(line);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) fail(ErrorKind::kIo, "cannot open '" + log_path.string() + "'");
  log << loss_csv_header() << "\n";
  for (const auto& line : kept) log << line << "\n";
  log.flush();

  BatchLoader loader(manifest);
  std::vector<ImageTensor> validation;
  for (const auto& img : loader.validation_images()) validation.push_back(normalize(img));

  Trainer trainer(std::move(initial));
  TrainingResult result;
  std::string last_durable = options.resume_from ? options.resume_from->string() : "none";
  const std::int64_t end =
      std::min(schedule.total(), options.stop_at.value_or(schedule.total()));

  auto save = [&](const fs::path& path) {
    try {
      save_checkpoint(trainer.state(), path);
    } catch (const Error& e) {
      fail(e.kind(), std::string(e.what()) + " (last durable checkpoint: " + last_durable + ")");
    }
    last_durable = path.string();
  };

  while (trainer.state().iteration < end) {
    const std::int64_t it = trainer.state().iteration;
    std::vector<ImageTensor> batch =
        loader.sample(static_cast<std::size_t>(schedule.batch_size), it);
    LossRecord record = trainer.step(batch);
    const std::int64_t done = it + 1;
    if (!validation.empty() && (done % schedule.eval_interval == 0 || done == schedule.total()))
      record.dev_mse = trainer.evaluate_mse(validation);

    log << to_csv_row(record) << "\n";
    log.flush();
    if (!log)
      fail(ErrorKind::kIo, "failed writing '" + log_path.string() +
                               "' (last durable checkpoint: " + last_durable + ")");
    if (options.on_record) options.on_record(record);
    result.records.push_back(record);

    const bool boundary = (done == schedule.t1 || done == schedule.t1 + schedule.t2);
    if (done % schedule.checkpoint_interval == 0 || boundary || done == end)
      save(checkpoint_path(options.out_dir, done));
  }

  result.final_checkpoint = options.out_dir / "final.ckpt";
  if (trainer.state().iteration == schedule.total()) save(result.final_checkpoint);
  result.final_state = trainer.state();
  return result;
}

}  // namespace outpaint
