// outpaint command-line tool. Talks to the library only through its C API.
#include <outpaint/outpaint.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown to unwind out of a subcommand with a specific exit code.
struct Exit {
  int code;
};

int exit_code(op_status s) {
  switch (s) {
    case OP_OK: return kExitOk;
    case OP_ERR_ARGUMENT:
    case OP_ERR_CONFIG: return kExitUsage;
    default: return kExitRuntime;
  }
}

void check(op_status s, const std::string& context) {
  if (s == OP_OK) return;
  std::cerr << "outpaint: " << context << ": " << op_last_error() << " (" << op_status_name(s)
            << ")\n";
  throw Exit{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "outpaint: " << msg << "\n";
  throw Exit{kExitUsage};
}

struct StringDeleter {
  void operator()(char* s) const { op_string_free(s); }
};
using CString = std::unique_ptr<char, StringDeleter>;

struct ImageDeleter {
  void operator()(op_image* p) const { op_image_free(p); }
};
using Image = std::unique_ptr<op_image, ImageDeleter>;

struct ModelDeleter {
  void operator()(op_model* p) const { op_model_free(p); }
};
using Model = std::unique_ptr<op_model, ModelDeleter>;

struct ManifestDeleter {
  void operator()(op_manifest* p) const { op_manifest_free(p); }
};
using Manifest = std::unique_ptr<op_manifest, ManifestDeleter>;

std::string take(char* s) {
  CString owned(s);
  return owned ? std::string(owned.get()) : std::string();
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot read config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    usage_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

Json profile(const std::string& name) {
  char* text = nullptr;
  check(op_profile_config(name.c_str(), &text), "profile");
  return Json::parse(take(text));
}

std::vector<int> parse_dilations(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      usage_error("--dilations expects three comma-separated integers, got '" + text + "'");
    }
  }
  if (out.size() != 3) usage_error("--dilations expects three comma-separated integers");
  return out;
}

Model load_model(const std::string& checkpoint) {
  if (checkpoint.empty()) usage_error("--checkpoint is required");
  if (!fs::exists(checkpoint)) usage_error("checkpoint '" + checkpoint + "' does not exist");
  op_model* m = nullptr;
  check(op_model_load_checkpoint(checkpoint.c_str(), &m), "loading checkpoint");
  return Model(m);
}

Json model_config(const op_model* model) {
  char* text = nullptr;
  check(op_model_config(model, &text), "model config");
  return Json::parse(take(text));
}

Image load_image(const std::string& path) {
  op_image* img = nullptr;
  check(op_image_load(path.c_str(), &img), "loading image");
  return Image(img);
}

Image load_resized(const std::string& path, int h, int w) {
  op_image* img = nullptr;
  check(op_image_load_resized(path.c_str(), h, w, &img), "loading image");
  return Image(img);
}

void save_png(const op_image* img, const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  check(op_image_save_png(img, path.c_str()), "writing '" + path + "'");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---- prepare-data ----

struct PrepareArgs {
  std::string data;
  std::string out = "manifest.txt";
  std::size_t val_count = 100;
  std::uint64_t seed = 0;
  int height = 128;
  int width = 128;
};

int cmd_prepare(const PrepareArgs& a) {
  op_manifest* m = nullptr;
  check(op_manifest_build(a.data.c_str(), a.val_count, a.seed, a.height, a.width, &m),
        "building manifest");
  Manifest manifest(m);
  check(op_manifest_save(manifest.get(), a.out.c_str()), "saving manifest");
  std::size_t train = 0, val = 0, skipped = 0;
  check(op_manifest_counts(manifest.get(), &train, &val, &skipped), "manifest");
  std::cout << "train " << train << "  val " << val << "  skipped " << skipped << "\n"
            << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string dilations;
  std::string local_disc;
  std::string out;
  std::string data;
  std::string manifest;
  std::string resume;
  bool dry_run = false;
};

Json merged_config(const TrainArgs& a) {
  Json file = a.config.empty() ? Json::object() : read_json_file(a.config);
  std::string name = a.profile;
  if (name.empty()) name = file.value("profile", std::string("paper-global"));
  Json cfg = profile(name);
  cfg.merge_patch(file);
  cfg["profile"] = name;
  if (a.seed) cfg["schedule"]["seed"] = *a.seed;
  if (!a.dilations.empty()) cfg["dilations"] = parse_dilations(a.dilations);
  if (!a.local_disc.empty()) cfg["local_disc"] = a.local_disc == "on";
  if (!a.out.empty()) cfg["out_dir"] = a.out;
  if (!a.data.empty()) cfg["dataset"]["root"] = a.data;
  if (!a.manifest.empty()) cfg["dataset"]["manifest"] = a.manifest;

  char* normalized = nullptr;
  check(op_config_validate(cfg.dump().c_str(), &normalized), "config");
  return Json::parse(take(normalized));
}

void on_record(const op_train_record* r, void* user) {
  const auto every = *static_cast<const std::int64_t*>(user);
  const std::int64_t done = r->iteration + 1;
  if (done % every != 0 && std::isnan(r->dev_mse)) return;
  std::cerr << "iter " << done << " " << r->phase << "  train_mse " << fmt(r->train_mse)
            << "  dev_mse " << fmt(r->dev_mse) << "  disc " << fmt(r->disc_loss) << "  gen "
            << fmt(r->gen_loss) << "\n";
}

int cmd_train(const TrainArgs& a) {
  const Json cfg = merged_config(a);
  if (a.dry_run) {
    std::cout << cfg.dump(2) << "\n";
    return kExitOk;
  }
  const std::string out_dir = cfg.value("out_dir", std::string());
  if (out_dir.empty()) usage_error("no output directory (use --out or set out_dir)");

  const Json& ds = cfg["dataset"];
  const std::string manifest_path = ds.value("manifest", std::string());
  const std::string root = ds.value("root", std::string());
  op_manifest* m = nullptr;
  if (!manifest_path.empty() && fs::exists(manifest_path)) {
    check(op_manifest_load(manifest_path.c_str(), &m), "loading manifest");
  } else if (!root.empty()) {
    const auto& g = cfg["geometry"];
    const int h = g["height"];
    const int w = g["center_width"].get<int>() + 2 * g["strip_width"].get<int>();
    check(op_manifest_build(root.c_str(), ds["val_count"].get<std::size_t>(),
                            cfg["schedule"]["seed"].get<std::uint64_t>(), h, w, &m),
          "building manifest");
    fs::create_directories(out_dir);
    const std::string saved = (fs::path(out_dir) / "manifest.txt").string();
    check(op_manifest_save(m, saved.c_str()), "saving manifest");
  } else {
    usage_error("no dataset: pass --data DIR or --manifest FILE");
  }
  Manifest manifest(m);

  if (!a.resume.empty() && !fs::exists(a.resume))
    usage_error("checkpoint '" + a.resume + "' does not exist");

  std::int64_t every = std::max<std::int64_t>(1, cfg["schedule"]["eval_interval"].get<std::int64_t>());
  op_train_summary summary{};
  check(op_train_run(cfg.dump().c_str(), manifest.get(), out_dir.c_str(),
                     a.resume.empty() ? nullptr : a.resume.c_str(), on_record, &every, &summary),
        "training");
  std::cout << "finished at iteration " << summary.final_iteration << " ("
            << summary.iterations_run << " this run), train_mse " << fmt(summary.last_train_mse)
            << ", dev_mse " << fmt(summary.last_dev_mse) << "\n"
            << "run directory " << out_dir << "\n";
  return kExitOk;
}

// ---- overfit-sanity ----

struct OverfitArgs {
  std::string image;
  std::int64_t iterations = 500;
  std::uint64_t seed = 0;
  double adversarial_fraction = 0.1;
  std::string out;
};

void on_mark(std::int64_t it, double rmse, void*) {
  std::cerr << "iter " << it << "  rmse " << fmt(rmse) << "\n";
}

int cmd_overfit(const OverfitArgs& a) {
  Image img = load_image(a.image);
  char* report = nullptr;
  op_image* output = nullptr;
  check(op_overfit_sanity(img.get(), a.iterations, a.seed, a.adversarial_fraction, on_mark,
                          nullptr, &report, &output),
        "overfit sanity");
  Image out_img(output);
  const std::string text = take(report);
  std::cout << text << "\n";
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream(fs::path(a.out) / "report.json") << text << "\n";
    save_png(out_img.get(), (fs::path(a.out) / "output.png").string());
  }
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string checkpoint;
  std::string manifest;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  Model model = load_model(a.checkpoint);
  op_manifest* m = nullptr;
  check(op_manifest_load(a.manifest.c_str(), &m), "loading manifest");
  Manifest manifest(m);
  char* csv = nullptr;
  double mean = 0.0;
  check(op_evaluate(model.get(), manifest.get(), &csv, &mean), "evaluation");
  const std::string table = take(csv);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    f << table;
    if (!f) usage_error("cannot write '" + a.out + "'");
  }
  std::cout << table;
  return kExitOk;
}

// ---- outpaint ----

struct OutpaintArgs {
  std::string checkpoint;
  std::string image;
  std::string out = "outpainted.png";
  int recursive = 0;
  std::string ground_truth;
  std::string compare;
  std::string blend = "preserve";
};

int cmd_outpaint(const OutpaintArgs& a) {
  Model model = load_model(a.checkpoint);
  const Json g = model_config(model.get())["geometry"];
  const int h = g["height"];
  const int w = g["center_width"].get<int>() + 2 * g["strip_width"].get<int>();
  const op_blend_mode mode = a.blend == "literal" ? OP_BLEND_LITERAL : OP_BLEND_PRESERVE_CENTER;

  Image input = load_resized(a.image, h, w);
  Image truth;
  if (!a.ground_truth.empty()) truth = load_resized(a.ground_truth, h, w);

  op_image* result = nullptr;
  double rmse = -1.0;
  if (a.recursive > 0) {
    check(op_outpaint_recursive(model.get(), input.get(), a.recursive, 0, mode, &result),
          "recursive outpainting");
  } else {
    check(op_outpaint(model.get(), input.get(), truth ? truth.get() : nullptr, mode, &result,
                      &rmse),
          "outpainting");
  }
  Image output(result);
  save_png(output.get(), a.out);
  std::cout << "wrote " << a.out << " (" << op_image_height(output.get()) << "x"
            << op_image_width(output.get()) << ")";
  if (rmse >= 0.0) std::cout << ", masked rmse " << fmt(rmse);
  std::cout << "\n";

  if (!a.compare.empty()) {
    const op_image* parts[3] = {input.get(), output.get(), truth ? truth.get() : nullptr};
    op_image* joined = nullptr;
    check(op_image_side_by_side(parts, 3, &joined), "comparison image");
    Image cmp(joined);
    save_png(cmp.get(), a.compare);
    std::cout << "wrote " << a.compare << "\n";
  }
  return kExitOk;
}

// ---- describe ----

int cmd_describe(const TrainArgs& a) {
  const Json cfg = merged_config(a);
  char* text = nullptr;
  check(op_describe_model(cfg.dump().c_str(), &text), "describe");
  std::cout << take(text);
  return kExitOk;
}

void add_model_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--config", a.config, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--profile", a.profile, "paper-global, paper-local or desk");
  cmd->add_option("--seed", a.seed, "Training seed");
  cmd->add_option("--dilations", a.dilations, "Generator dilations, e.g. 2,4,8");
  cmd->add_option("--local-disc", a.local_disc, "Local discriminator")
      ->check(CLI::IsMember({"on", "off"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image outpainting: training, evaluation and inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(op_version()));
  int verbosity = 2;
  app.add_flag_callback("-q,--quiet", [&] { verbosity = 1; }, "Only warnings and errors");

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare-data", "Scan an image folder into a manifest");
  prepare->add_option("--data", prep.data, "Image directory")->required();
  prepare->add_option("--out", prep.out, "Manifest path");
  prepare->add_option("--val-count", prep.val_count, "Held-out images");
  prepare->add_option("--seed", prep.seed, "Split seed");
  prepare->add_option("--height", prep.height, "Training image height");
  prepare->add_option("--width", prep.width, "Training image width");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Run the three-phase training schedule");
  add_model_flags(train, tr);
  train->add_option("--out", tr.out, "Run directory");
  train->add_option("--data", tr.data, "Image directory (builds a manifest)");
  train->add_option("--manifest", tr.manifest, "Existing manifest");
  train->add_option("--resume", tr.resume, "Checkpoint to continue from");
  train->add_flag("--dry-run", tr.dry_run, "Print the merged config and exit");

  OverfitArgs of;
  auto* overfit = app.add_subcommand("overfit-sanity", "Overfit a single image");
  overfit->add_option("--image", of.image, "Image (sides divisible by 4)")->required();
  overfit->add_option("--iterations", of.iterations, "Training iterations");
  overfit->add_option("--seed", of.seed, "Seed");
  overfit->add_option("--adversarial-fraction", of.adversarial_fraction,
                      "Share of iterations with the adversarial loss");
  overfit->add_option("--out", of.out, "Directory for report.json and output.png");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Masked RMSE over a validation set");
  evaluate->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->required();
  evaluate->add_option("--manifest", ev.manifest, "Manifest")->required();
  evaluate->add_option("--out", ev.out, "CSV output path");

  OutpaintArgs op;
  auto* outp = app.add_subcommand("outpaint", "Outpaint one image");
  outp->add_option("--checkpoint", op.checkpoint, "Checkpoint")->required();
  outp->add_option("--image", op.image, "Input image")->required();
  outp->add_option("--out", op.out, "Output PNG");
  outp->add_option("--recursive", op.recursive, "Recursive expansions")->check(CLI::NonNegativeNumber);
  outp->add_option("--ground-truth", op.ground_truth, "Ground truth for RMSE");
  outp->add_option("--compare", op.compare, "Side-by-side comparison PNG");
  outp->add_option("--blend", op.blend, "preserve or literal")
      ->check(CLI::IsMember({"preserve", "literal"}));

  TrainArgs desc;
  auto* describe = app.add_subcommand("describe", "Print layer tables and receptive fields");
  add_model_flags(describe, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  op_set_log_level(verbosity);

  try {
    if (*prepare) return cmd_prepare(prep);
    if (*train) return cmd_train(tr);
    if (*overfit) return cmd_overfit(of);
    if (*evaluate) return cmd_evaluate(ev);
    if (*outp) return cmd_outpaint(op);
    if (*describe) return cmd_describe(desc);
  } catch (const Exit& e) {
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "outpaint: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
