#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "network.hpp"
#include "optimizer.hpp"
#include "preprocess.hpp"

namespace outpaint {

struct TrainingSchedule {
  std::int64_t t1 = 0;  // generator-only iterations on the masked MSE
  std::int64_t t2 = 0;  // discriminator-only iterations
  std::int64_t t3 = 0;  // adversarial iterations
  double alpha = 0.0004;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::int64_t eval_interval = 500;
  std::int64_t checkpoint_interval = 5000;

  std::int64_t total() const { return t1 + t2 + t3; }
  void validate() const;
  friend bool operator==(const TrainingSchedule&, const TrainingSchedule&) = default;
};

enum class Phase { kGeneratorMse, kDiscriminator, kAdversarial };

const char* phase_name(Phase phase);  // "P1", "P2", "P3"
Phase parse_phase(std::string_view name);

Phase phase_of(std::int64_t iteration, const TrainingSchedule& schedule);

struct ModelConfig {
  OutpaintGeometry geometry = kDefaultGeometry;
  Dilations dilations = kDefaultDilations;
  bool local_discriminator = false;

  void validate() const;
  Shape image_shape() const { return {geometry.height, geometry.total_width(), 3}; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct DiscriminatorOptimizer {
  AdamState<T> global;
  AdamState<T> local;
  AdamState<T> concat;

  static DiscriminatorOptimizer like(const DiscriminatorBundle<T>& b) {
    return {AdamState<T>::like(b.global), AdamState<T>::like(b.local),
            AdamState<T>::like(b.concat)};
  }
  friend bool operator==(const DiscriminatorOptimizer&, const DiscriminatorOptimizer&) = default;
};

// Complete resumable training state.
struct Checkpoint {
  ModelConfig model;
  TrainingSchedule schedule;
  Params<float> generator;
  DiscriminatorBundle<float> discriminator;
  AdamState<float> generator_optimizer;
  DiscriminatorOptimizer<float> discriminator_optimizer;
  std::int64_t iteration = 0;
  // Minibatches are a pure function of (data_seed, iteration), so these two
  // values are the whole sampler state.
  std::uint64_t data_seed = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct LossRecord {
  std::int64_t iteration = 0;
  Phase phase = Phase::kGeneratorMse;
  double train_mse = 0.0;
  std::optional<double> dev_mse;
  std::optional<double> disc_loss;
  std::optional<double> gen_loss;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

std::string loss_csv_header();
std::string to_csv_row(const LossRecord& record);
LossRecord parse_csv_row(const std::string& row);

// Fresh state: generator and discriminator initialized from schedule.seed.
Checkpoint initialize_training(const ModelConfig& model, const TrainingSchedule& schedule,
                               std::uint64_t data_seed);

// Executes one iteration of the three-phase schedule on a minibatch.
class Trainer {
 public:
  explicit Trainer(Checkpoint state);

  // Phase 1: one generator step on the masked MSE. Phase 2: one
  // discriminator step, generator frozen. Phase 3: a discriminator step and
  // then a generator step on MSE - alpha * log D(G(x)), same batch.
  LossRecord step(std::span<const ImageTensor> batch);

  // Batch-mean masked MSE of the current generator, no updates.
  double evaluate_mse(std::span<const ImageTensor> images) const;

  // Generator output (in [0,1]) for one normalized image.
  ImageTensor generate(const ImageTensor& image) const;

  // Overrides the schedule's Adam step size for subsequent steps. Not saved
  // in checkpoints.
  void set_learning_rate(double lr);

  const Checkpoint& state() const { return state_; }
  Checkpoint& mutable_state() { return state_; }
  const Mask& mask() const { return mask_; }

 private:
  void discriminator_step(std::span<const ImageTensor> real, std::span<const ImageTensor> fake,
                          LossRecord& record);

  Checkpoint state_;
  NetworkSpec generator_spec_;
  Discriminator discriminator_;
  Mask mask_;
  AdamConfig adam_;
};

struct TrainingOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  // Stop early once this iteration is reached (still writes a checkpoint).
  std::optional<std::int64_t> stop_at;
  std::function<void(const LossRecord&)> on_record;
};

struct TrainingResult {
  Checkpoint final_state;
  std::vector<LossRecord> records;  // records produced by this invocation
  std::filesystem::path final_checkpoint;
};

// Runs the schedule to completion, writing loss.csv, periodic checkpoints
// (every checkpoint_interval iterations and at phase boundaries) and
// final.ckpt into out_dir.
TrainingResult run_training(const DatasetManifest& manifest, const ModelConfig& model,
                            const TrainingSchedule& schedule, const TrainingOptions& options);

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t iteration);

}  // namespace outpaint
