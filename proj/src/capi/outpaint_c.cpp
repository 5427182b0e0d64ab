#include "outpaint/outpaint.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "image_io.hpp"
#include "log.hpp"
#include "outpaint.hpp"
#include "sanity.hpp"
#include "trainer.hpp"

struct op_manifest {
  outpaint::DatasetManifest value;
};

struct op_image {
  outpaint::PixelImage value;
};

struct op_model {
  outpaint::ModelConfig config;
  outpaint::Generator generator;
};

namespace {

using outpaint::ErrorKind;
using outpaint::Json;

thread_local std::string g_last_error;

op_status to_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument: return OP_ERR_ARGUMENT;
    case ErrorKind::kConfig: return OP_ERR_CONFIG;
    case ErrorKind::kIo: return OP_ERR_IO;
    case ErrorKind::kFormat: return OP_ERR_FORMAT;
    case ErrorKind::kDecode: return OP_ERR_DECODE;
    case ErrorKind::kNumeric: return OP_ERR_NUMERIC;
  }
  return OP_ERR_INTERNAL;
}

template <typename F>
op_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return OP_OK;
  } catch (const outpaint::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const Json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return OP_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return OP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return OP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) outpaint::fail(ErrorKind::kArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json parse_json(const char* text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    outpaint::fail(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

op_model* make_model(const outpaint::ModelConfig& config, outpaint::Params<float> params) {
  auto* m = new op_model;
  m->config = config;
  m->generator = {outpaint::generator_spec(config.dilations), std::move(params)};
  return m;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

extern "C" {

const char* op_last_error(void) { return g_last_error.c_str(); }

const char* op_version(void) { return "0.1.0"; }

const char* op_status_name(op_status status) {
  switch (status) {
    case OP_OK: return "ok";
    case OP_ERR_ARGUMENT: return "argument error";
    case OP_ERR_CONFIG: return "config error";
    case OP_ERR_IO: return "I/O error";
    case OP_ERR_FORMAT: return "format error";
    case OP_ERR_DECODE: return "decode error";
    case OP_ERR_NUMERIC: return "numeric error";
    case OP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void op_string_free(char* s) { delete[] s; }

void op_set_log_level(int level) {
  outpaint::set_log_level(level <= 0   ? outpaint::LogLevel::kOff
                          : level == 1 ? outpaint::LogLevel::kWarning
                                       : outpaint::LogLevel::kInfo);
}

op_status op_profile_config(const char* profile, char** json_out) {
  return guard([&] {
    need(profile, "profile");
    need(json_out, "json_out");
    *json_out = dup_string(outpaint::profile_config(profile).dump(2));
  });
}

op_status op_config_validate(const char* json, char** normalized_out) {
  return guard([&] {
    need(json, "json");
    const auto config = outpaint::run_config_from_json(parse_json(json));
    if (normalized_out) *normalized_out = dup_string(outpaint::to_json(config).dump(2));
  });
}

op_status op_describe_model(const char* config_json, char** text_out) {
  return guard([&] {
    need(config_json, "config_json");
    need(text_out, "text_out");
    const auto config = outpaint::run_config_from_json(parse_json(config_json));
    const auto& model = config.model;
    const outpaint::Shape image = model.image_shape();
    std::ostringstream out;
    const auto g = outpaint::generator_spec(model.dilations);
    out << "generator (input " << image.height << "x" << image.width << "x4)\n"
        << outpaint::format_table(g);
    const auto shapes = outpaint::trace_shapes(g, {image.height, image.width, 4});
    const auto rf = outpaint::receptive_field(g);
    out << "layer  output           receptive field\n";
    for (std::size_t i = 0; i < rf.size(); ++i) {
      const std::string shape = std::to_string(shapes[i].height) + "x" +
                                std::to_string(shapes[i].width) + "x" +
                                std::to_string(shapes[i].channels);
      out << std::left << std::setw(7) << i + 1 << std::setw(17) << shape << rf[i] << " px\n";
    }
    const auto d = outpaint::discriminator_specs(model.local_discriminator);
    out << "global discriminator\n" << outpaint::format_table(d.global);
    if (model.local_discriminator) out << "local discriminator\n" << outpaint::format_table(d.local);
    out << "concatenator\n" << outpaint::format_table(d.concat);
    *text_out = dup_string(out.str());
  });
}

op_status op_manifest_build(const char* root, size_t val_count, uint64_t seed,
                            int target_height, int target_width, op_manifest** out) {
  return guard([&] {
    need(root, "root");
    need(out, "out");
    auto m = outpaint::build_manifest(root, val_count, seed, target_height, target_width);
    *out = new op_manifest{std::move(m)};
  });
}

op_status op_manifest_load(const char* path, op_manifest** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new op_manifest{outpaint::DatasetManifest::load(path)};
  });
}

op_status op_manifest_save(const op_manifest* manifest, const char* path) {
  return guard([&] {
    need(manifest, "manifest");
    need(path, "path");
    manifest->value.save(path);
  });
}

void op_manifest_free(op_manifest* manifest) { delete manifest; }

op_status op_manifest_counts(const op_manifest* manifest, size_t* train, size_t* val,
                             size_t* skipped) {
  return guard([&] {
    need(manifest, "manifest");
    if (train) *train = manifest->value.train_paths.size();
    if (val) *val = manifest->value.val_paths.size();
    if (skipped) *skipped = manifest->value.skipped.size();
  });
}

op_status op_manifest_val_path(const op_manifest* manifest, size_t index, const char** path_out) {
  return guard([&] {
    need(manifest, "manifest");
    need(path_out, "path_out");
    if (index >= manifest->value.val_paths.size())
      outpaint::fail(ErrorKind::kArgument, "validation index out of range");
    *path_out = manifest->value.val_paths[index].c_str();
  });
}

op_status op_image_load(const char* path, op_image** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new op_image{outpaint::load_image(path)};
  });
}

op_status op_image_load_resized(const char* path, int height, int width, op_image** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    if (height < 1 || width < 1) outpaint::fail(ErrorKind::kArgument, "size must be positive");
    *out = new op_image{outpaint::load_and_downsample(path, height, width)};
  });
}

op_status op_image_create(int height, int width, const uint8_t* rgb, op_image** out) {
  return guard([&] {
    need(out, "out");
    if (height < 1 || width < 1) outpaint::fail(ErrorKind::kArgument, "size must be positive");
    outpaint::PixelImage img(height, width, 3);
    if (rgb) std::memcpy(img.data(), rgb, img.size());
    *out = new op_image{std::move(img)};
  });
}

op_status op_image_save_png(const op_image* image, const char* path) {
  return guard([&] {
    need(image, "image");
    need(path, "path");
    outpaint::save_png(image->value, path);
  });
}

void op_image_free(op_image* image) { delete image; }

int op_image_height(const op_image* image) { return image ? image->value.height() : 0; }

int op_image_width(const op_image* image) { return image ? image->value.width() : 0; }

const uint8_t* op_image_data(const op_image* image) {
  return image ? image->value.data() : nullptr;
}

op_status op_image_side_by_side(const op_image* const* images, size_t count, op_image** out) {
  return guard([&] {
    need(images, "images");
    need(out, "out");
    if (count == 0 || !images[0]) outpaint::fail(ErrorKind::kArgument, "first image is required");
    std::vector<outpaint::PixelImage> parts;
    for (size_t i = 0; i < count; ++i)
      if (images[i]) parts.push_back(images[i]->value);
    *out = new op_image{outpaint::side_by_side(parts)};
  });
}

op_status op_model_create(const char* config_json, op_model** out) {
  return guard([&] {
    need(config_json, "config_json");
    need(out, "out");
    const auto config = outpaint::run_config_from_json(parse_json(config_json));
    auto state = outpaint::initialize_training(config.model, config.schedule, 0);
    *out = make_model(config.model, std::move(state.generator));
  });
}

op_status op_model_load_checkpoint(const char* path, op_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    if (!std::filesystem::exists(path))
      outpaint::fail(ErrorKind::kIo, std::string("checkpoint '") + path + "' does not exist");
    auto state = outpaint::load_checkpoint(path);
    *out = make_model(state.model, std::move(state.generator));
  });
}

void op_model_free(op_model* model) { delete model; }

op_status op_model_config(const op_model* model, char** json_out) {
  return guard([&] {
    need(model, "model");
    need(json_out, "json_out");
    *json_out = dup_string(outpaint::to_json(model->config).dump(2));
  });
}

op_status op_outpaint(const op_model* model, const op_image* image, const op_image* ground_truth,
                      op_blend_mode mode, op_image** out, double* rmse_out) {
  return guard([&] {
    need(model, "model");
    need(image, "image");
    need(out, "out");
    std::optional<outpaint::PixelImage> truth;
    if (ground_truth) truth = ground_truth->value;
    auto result = outpaint::outpaint_once(
        model->generator, image->value, model->config.geometry, truth,
        mode == OP_BLEND_LITERAL ? outpaint::BlendMode::kLiteral
                                 : outpaint::BlendMode::kPreserveCenter);
    if (rmse_out) *rmse_out = result.rmse.value_or(-1.0);
    *out = new op_image{std::move(result.output)};
  });
}

op_status op_outpaint_recursive(const op_model* model, const op_image* image, int iterations,
                                int strip, op_blend_mode mode, op_image** out) {
  return guard([&] {
    need(model, "model");
    need(image, "image");
    need(out, "out");
    const int k = strip > 0 ? strip : model->config.geometry.strip_width;
    auto result = outpaint::outpaint_recursive(
        model->generator, image->value, iterations, k,
        mode == OP_BLEND_LITERAL ? outpaint::BlendMode::kLiteral
                                 : outpaint::BlendMode::kPreserveCenter);
    *out = new op_image{std::move(result.output)};
  });
}

op_status op_evaluate(const op_model* model, const op_manifest* manifest, char** csv_out,
                      double* mean_rmse_out) {
  return guard([&] {
    need(model, "model");
    need(manifest, "manifest");
    const auto& g = model->config.geometry;
    const auto& paths = manifest->value.val_paths;
    if (paths.empty()) outpaint::fail(ErrorKind::kConfig, "manifest has no validation images");
    std::vector<outpaint::PixelImage> images;
    for (const auto& p : paths)
      images.push_back(outpaint::load_and_downsample(p, g.height, g.total_width()));
    const auto report = outpaint::evaluate_images(model->generator, g, paths, images);
    if (csv_out) *csv_out = dup_string(report.to_csv());
    if (mean_rmse_out) *mean_rmse_out = report.mean_rmse;
  });
}

op_status op_train_run(const char* config_json, const op_manifest* manifest, const char* out_dir,
                       const char* resume, op_train_callback callback, void* user,
                       op_train_summary* summary) {
  return guard([&] {
    need(config_json, "config_json");
    need(manifest, "manifest");
    auto config = outpaint::run_config_from_json(parse_json(config_json));
    if (out_dir) config.out_dir = out_dir;
    if (config.out_dir.empty())
      outpaint::fail(ErrorKind::kConfig, "no output directory given");

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) outpaint::fail(ErrorKind::kIo, "cannot create '" + config.out_dir + "': " + ec.message());
    Json meta = outpaint::to_json(config);
    meta["manifest_hash"] = manifest->value.hash();
    meta["data_seed"] = manifest->value.seed;
    {
      std::ofstream f(fs::path(config.out_dir) / "config.json", std::ios::trunc);
      f << meta.dump(2) << "\n";
      if (!f) outpaint::fail(ErrorKind::kIo, "cannot write config.json in '" + config.out_dir + "'");
    }

    outpaint::TrainingOptions options;
    options.out_dir = config.out_dir;
    if (resume) options.resume_from = fs::path(resume);
    if (callback) {
      options.on_record = [&](const outpaint::LossRecord& r) {
        const op_train_record rec{r.iteration,           outpaint::phase_name(r.phase),
                                  r.train_mse,           r.dev_mse.value_or(kNaN),
                                  r.disc_loss.value_or(kNaN), r.gen_loss.value_or(kNaN)};
        callback(&rec, user);
      };
    }
    const auto result =
        outpaint::run_training(manifest->value, config.model, config.schedule, options);
    if (summary) {
      summary->iterations_run = static_cast<int64_t>(result.records.size());
      summary->final_iteration = result.final_state.iteration;
      summary->last_train_mse = result.records.empty() ? kNaN : result.records.back().train_mse;
      summary->last_dev_mse = kNaN;
      for (auto it = result.records.rbegin(); it != result.records.rend(); ++it) {
        if (it->dev_mse) {
          summary->last_dev_mse = *it->dev_mse;
          break;
        }
      }
    }
  });
}

op_status op_overfit_sanity(const op_image* image, int64_t iterations, uint64_t seed,
                            double adversarial_fraction, op_overfit_callback callback, void* user,
                            char** report_json_out, op_image** output_out) {
  return guard([&] {
    need(image, "image");
    outpaint::OverfitOptions options;
    options.iterations = iterations;
    options.seed = seed;
    options.adversarial_fraction = adversarial_fraction;
    if (callback) options.on_mark = [&](int64_t it, double r) { callback(it, r, user); };
    auto report = outpaint::overfit_sanity(image->value, options);
    if (report_json_out) *report_json_out = dup_string(report.to_json());
    if (output_out) *output_out = new op_image{std::move(report.output)};
  });
}

}  // extern "C"
