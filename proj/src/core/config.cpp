#include "config.hpp"

#include <set>

namespace outpaint {
namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  if (!j.is_object()) fail(ErrorKind::kConfig, std::string(where) + " must be a JSON object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key))
      fail(ErrorKind::kConfig, "unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::kConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const ModelConfig& m) {
  return Json{{"geometry",
               {{"height", m.geometry.height},
                {"center_width", m.geometry.center_width},
                {"strip_width", m.geometry.strip_width}}},
              {"dilations", m.dilations},
              {"local_disc", m.local_discriminator}};
}

ModelConfig model_from_json(const Json& j) {
  reject_unknown(j, {"geometry", "dilations", "local_disc"}, "model");
  ModelConfig m;
  if (j.contains("geometry")) {
    const Json& g = j.at("geometry");
    reject_unknown(g, {"height", "center_width", "strip_width"}, "geometry");
    read(g, "height", m.geometry.height);
    read(g, "center_width", m.geometry.center_width);
    read(g, "strip_width", m.geometry.strip_width);
  }
  if (j.contains("dilations")) {
    std::vector<int> d;
    read(j, "dilations", d);
    if (d.size() != 3) fail(ErrorKind::kConfig, "dilations must list exactly three values");
    m.dilations = {d[0], d[1], d[2]};
  }
  read(j, "local_disc", m.local_discriminator);
  m.validate();
  return m;
}

Json to_json(const TrainingSchedule& s) {
  return Json{{"t1", s.t1},
              {"t2", s.t2},
              {"t3", s.t3},
              {"alpha", s.alpha},
              {"batch_size", s.batch_size},
              {"learning_rate", s.learning_rate},
              {"seed", s.seed},
              {"eval_interval", s.eval_interval},
              {"checkpoint_interval", s.checkpoint_interval}};
}

TrainingSchedule schedule_from_json(const Json& j) {
  reject_unknown(j,
                 {"t1", "t2", "t3", "alpha", "batch_size", "learning_rate", "seed",
                  "eval_interval", "checkpoint_interval"},
                 "schedule");
  TrainingSchedule s;
  read(j, "t1", s.t1);
  read(j, "t2", s.t2);
  read(j, "t3", s.t3);
  read(j, "alpha", s.alpha);
  read(j, "batch_size", s.batch_size);
  read(j, "learning_rate", s.learning_rate);
  read(j, "seed", s.seed);
  read(j, "eval_interval", s.eval_interval);
  read(j, "checkpoint_interval", s.checkpoint_interval);
  s.validate();
  return s;
}

Json to_json(const RunConfig& c) {
  Json model = to_json(c.model);
  return Json{{"profile", c.profile},
              {"dataset", {{"root", c.dataset_root}, {"manifest", c.manifest},
                           {"val_count", c.val_count}}},
              {"geometry", model["geometry"]},
              {"dilations", model["dilations"]},
              {"local_disc", model["local_disc"]},
              {"schedule", to_json(c.schedule)},
              {"out_dir", c.out_dir}};
}

RunConfig run_config_from_json(const Json& j) {
  reject_unknown(j,
                 {"profile", "dataset", "geometry", "dilations", "local_disc", "schedule",
                  "out_dir"},
                 "run config");
  RunConfig c;
  read(j, "profile", c.profile);
  read(j, "out_dir", c.out_dir);
  if (j.contains("dataset")) {
    const Json& d = j.at("dataset");
    reject_unknown(d, {"root", "manifest", "val_count"}, "dataset");
    read(d, "root", c.dataset_root);
    read(d, "manifest", c.manifest);
    read(d, "val_count", c.val_count);
  }
  Json model = Json::object();
  for (const char* key : {"geometry", "dilations", "local_disc"})
    if (j.contains(key)) model[key] = j.at(key);
  c.model = model_from_json(model);
  c.schedule = schedule_from_json(j.value("schedule", Json::object()));
  return c;
}

std::vector<std::string> profile_names() { return {"paper-global", "paper-local", "desk"}; }

Json profile_config(std::string_view name) {
  RunConfig c;
  c.profile = std::string(name);
  c.val_count = 100;
  c.schedule.alpha = 0.0004;
  c.schedule.batch_size = 16;
  c.schedule.learning_rate = 1e-3;
  c.schedule.eval_interval = 500;
  c.schedule.checkpoint_interval = 5000;
  if (name == "paper-global") {
    c.schedule.t1 = 40950;
    c.schedule.t2 = 4550;
    c.schedule.t3 = 182000;
    c.model.local_discriminator = false;
  } else if (name == "paper-local") {
    c.schedule.t1 = 20000;
    c.schedule.t2 = 4000;
    c.schedule.t3 = 95000;
    c.model.local_discriminator = true;
  } else if (name == "desk") {
    c.val_count = 1;
    c.schedule.t1 = 200;
    c.schedule.t2 = 50;
    c.schedule.t3 = 250;
    c.schedule.batch_size = 4;
    c.schedule.eval_interval = 50;
    c.schedule.checkpoint_interval = 100;
    c.model.geometry = OutpaintGeometry{32, 16, 8};
  } else {
    fail(ErrorKind::kConfig, "unknown profile '" + std::string(name) +
                                 "' (expected paper-global, paper-local or desk)");
  }
  return to_json(c);
}

}  // namespace outpaint
