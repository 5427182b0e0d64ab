#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trainer.hpp"

namespace outpaint {

using Json = nlohmann::json;

Json to_json(const ModelConfig& model);
Json to_json(const TrainingSchedule& schedule);
ModelConfig model_from_json(const Json& j);
TrainingSchedule schedule_from_json(const Json& j);

// Everything a training run needs, merged from a profile, a config file and
// command-line overrides.
struct RunConfig {
  std::string profile;
  std::string dataset_root;
  std::string manifest;
  std::size_t val_count = 100;
  ModelConfig model;
  TrainingSchedule schedule;
  std::string out_dir;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

Json to_json(const RunConfig& config);
// Validates types, ranges and unknown keys; throws ErrorKind::kConfig.
RunConfig run_config_from_json(const Json& j);

// "paper-global", "paper-local" or "desk".
std::vector<std::string> profile_names();
Json profile_config(std::string_view name);

}  // namespace outpaint
