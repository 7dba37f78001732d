#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mvrec/config.hpp"
#include "mvrec/dataset.hpp"
#include "mvrec/errors.hpp"
#include "mvrec/evaluation.hpp"
#include "mvrec/feature_io.hpp"
#include "mvrec/features.hpp"
#include "mvrec/image.hpp"
#include "mvrec/recognition.hpp"
#include "mvrec/solver.hpp"
#include "mvrec/util.hpp"

namespace fs = std::filesystem;
using namespace mvrec;

namespace {

const std::vector<std::string> kConfigKeys = {
    "dataset_root", "output_dir", "seed", "jobs",
    "lambda1", "lambda2", "epsilon", "delta", "tol", "max_iter",
    "resize_edge", "color_bins", "hog_cell", "hog_block", "hog_bins",
    "lambda1_grid", "lambda2_grid", "view_amounts", "trials",
    "heatmap_views", "mi_views", "mi_trials", "mi_bins", "mi_max_rank",
    "scene_views", "scene_blocks", "scene_block_dim", "scene_sigma",
    "scene_occluded", "scene_categories", "scene_planted"};

void save_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string artifact_stem(const std::string& command, const RunConfig& cfg) {
  return command + "-" + cfg.hash() + "-" + std::to_string(cfg.seed);
}

void write_metadata(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& artifacts,
                    const std::string& manifest_json) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.hash();
  nlohmann::json conf = nlohmann::json::object();
  for (const auto& [k, v] : cfg.items()) conf[k] = v;
  j["config"] = conf;
  if (!manifest_json.empty())
    j["dataset_manifest_hash"] = hex64(fnv1a64(manifest_json));
  j["artifacts"] = artifacts;
  save_text(cfg.output_dir / (artifact_stem(command, cfg) + ".meta.json"), j.dump(2));
}

void ensure_output_dir(const RunConfig& cfg) {
  if (!fs::exists(cfg.output_dir)) fs::create_directories(cfg.output_dir);
}

// Referenced paths must exist at validation time; a missing dataset root is
// a configuration error, not a runtime one.
void require_dataset_root(const RunConfig& cfg) {
  if (cfg.dataset_root.empty())
    throw ConfigError("this command needs dataset_root (config key or --dataset_root)");
  if (!fs::is_directory(cfg.dataset_root))
    throw ConfigError("dataset_root does not exist: " + cfg.dataset_root.string());
}

bool is_feature_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 9 && name.substr(name.size() - 9) == ".feat.csv";
}

int cmd_extract(const RunConfig& cfg, const std::vector<std::string>& images) {
  ensure_output_dir(cfg);
  const ModalityLayout layout = default_layout(cfg.features);
  int failures = 0;
  for (const auto& path_str : images) {
    const fs::path path(path_str);
    try {
      const Image img = load_image(path);
      const FeatureVector fv = extract_feature_vector(img, cfg.features, layout);
      const fs::path out = cfg.output_dir / (path.stem().string() + ".feat.csv");
      write_feature_csv(out, fv.values, layout);
      std::cout << out.string() << "\n";
    } catch (const Error& e) {
      std::cerr << "extract: " << path.string() << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

ObjectLibrary library_from_feature_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("library path is not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_feature_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  if (files.empty()) throw ConfigError("no .feat.csv files in " + dir.string());

  std::vector<std::string> labels;
  Eigen::MatrixXd desc;
  ModalityLayout layout;
  for (std::size_t j = 0; j < files.size(); ++j) {
    LoadedFeature f = read_feature_csv(files[j]);
    if (j == 0) {
      layout = f.layout;
      desc.resize(layout.dim(), static_cast<Eigen::Index>(files.size()));
    } else if (!(f.layout == layout)) {
      throw ConfigError("library feature files disagree on layout: " + files[j].string());
    }
    desc.col(static_cast<Eigen::Index>(j)) = f.values;
    std::string stem = files[j].filename().string();
    stem = stem.substr(0, stem.size() - 9);  // drop ".feat.csv"
    labels.push_back(stem);
  }
  return ObjectLibrary(std::move(desc), std::move(labels), layout);
}

int cmd_recognize(const RunConfig& cfg, const std::vector<std::string>& inputs,
                  const std::string& library_dir) {
  ensure_output_dir(cfg);

  ObjectLibrary lib;
  std::string manifest;
  if (!library_dir.empty()) {
    lib = library_from_feature_dir(library_dir);
  } else {
    if (cfg.dataset_root.empty())
      throw ConfigError("recognize needs dataset_root or --library");
    require_dataset_root(cfg);
    const MultiViewDataset ds = load_dataset(cfg.dataset_root);
    SplitDataset split = split_reference(ds, cfg.features, default_layout(cfg.features));
    manifest = dataset_manifest_json(ds, split.references);
    lib = std::move(split.library);
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(inputs.size()), lib.dim());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path path(inputs[i]);
    if (is_feature_file(path)) {
      LoadedFeature f = read_feature_csv(path);
      if (!(f.layout == lib.layout))
        throw InvalidInputError("view '" + path.string() + "' layout does not match library");
      X.row(static_cast<Eigen::Index>(i)) = f.values.transpose();
    } else {
      const FeatureVector fv =
          extract_feature_vector(load_image(path), cfg.features, lib.layout);
      X.row(static_cast<Eigen::Index>(i)) = fv.values.transpose();
    }
    ids.push_back(path.filename().string());
  }

  const RecognitionResult result =
      recognize(ViewSet(std::move(X), std::move(ids)), lib, cfg.solver, cfg.jobs);
  const std::string json = recognition_result_to_json(result, lib);
  std::cout << json << "\n";
  const std::string stem = artifact_stem("recognize", cfg);
  save_text(cfg.output_dir / (stem + ".json"), json);
  write_metadata(cfg, "recognize", {stem + ".json"}, manifest);
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  require_dataset_root(cfg);
  const MultiViewDataset ds = load_dataset(cfg.dataset_root);
  const ModalityLayout layout = default_layout(cfg.features);
  const PreparedDataset prepared = prepare_dataset(ds, cfg.features, layout, cfg.jobs, true);

  ExperimentGrid grid;
  grid.lambda1_values = cfg.lambda1_grid;
  grid.lambda2_values = cfg.lambda2_grid;
  grid.view_amounts = cfg.view_amounts;
  grid.trials_per_cell = cfg.trials;
  grid.base_seed = cfg.seed;
  const AccuracyTable table = run_accuracy_experiment(prepared, grid, cfg.solver, cfg.jobs);

  const Eigen::MatrixXd heat =
      sweep_heatmap(prepared, cfg.lambda1_grid, cfg.lambda2_grid, cfg.heatmap_views,
                    cfg.trials, cfg.solver, cfg.seed, cfg.jobs);
  const MIRankingReport mi =
      mi_ranking_report(prepared, cfg.mi_views, cfg.mi_trials, cfg.solver, cfg.seed,
                        cfg.mi_max_rank, cfg.mi_bins, cfg.jobs);

  const std::string stem = artifact_stem("evaluate", cfg);
  save_text(cfg.output_dir / (stem + ".accuracy.csv"), accuracy_table_csv(table));
  save_text(cfg.output_dir / (stem + ".heatmap.csv"),
            heatmap_csv(cfg.lambda1_grid, cfg.lambda2_grid, heat));
  save_text(cfg.output_dir / (stem + ".mi.csv"), mi_report_csv(mi));
  save_text(cfg.output_dir / (stem + ".mi.json"), mi_report_json(mi));
  write_metadata(cfg, "evaluate",
                 {stem + ".accuracy.csv", stem + ".heatmap.csv", stem + ".mi.csv",
                  stem + ".mi.json"},
                 prepared.manifest_json);
  std::cout << (cfg.output_dir / (stem + ".accuracy.csv")).string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  require_dataset_root(cfg);
  const MultiViewDataset ds = load_dataset(cfg.dataset_root);
  const ModalityLayout layout = default_layout(cfg.features);
  const PreparedDataset prepared = prepare_dataset(ds, cfg.features, layout, cfg.jobs, false);

  const Eigen::MatrixXd heat =
      sweep_heatmap(prepared, cfg.lambda1_grid, cfg.lambda2_grid, cfg.heatmap_views,
                    cfg.trials, cfg.solver, cfg.seed, cfg.jobs);
  const std::string stem = artifact_stem("sweep", cfg);
  save_text(cfg.output_dir / (stem + ".csv"),
            heatmap_csv(cfg.lambda1_grid, cfg.lambda2_grid, heat));
  write_metadata(cfg, "sweep", {stem + ".csv"}, prepared.manifest_json);
  std::cout << (cfg.output_dir / (stem + ".csv")).string() << "\n";
  return 0;
}

int cmd_mi_rank(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  require_dataset_root(cfg);
  const MultiViewDataset ds = load_dataset(cfg.dataset_root);
  const ModalityLayout layout = default_layout(cfg.features);
  const PreparedDataset prepared = prepare_dataset(ds, cfg.features, layout, cfg.jobs, true);

  const MIRankingReport mi =
      mi_ranking_report(prepared, cfg.mi_views, cfg.mi_trials, cfg.solver, cfg.seed,
                        cfg.mi_max_rank, cfg.mi_bins, cfg.jobs);
  const std::string stem = artifact_stem("mi-rank", cfg);
  save_text(cfg.output_dir / (stem + ".csv"), mi_report_csv(mi));
  save_text(cfg.output_dir / (stem + ".json"), mi_report_json(mi));
  write_metadata(cfg, "mi-rank", {stem + ".csv", stem + ".json"}, prepared.manifest_json);
  std::cout << (cfg.output_dir / (stem + ".csv")).string() << "\n";
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  const SyntheticScene scene = generate_synthetic_scene(cfg.scene, cfg.seed);
  const std::string stem = artifact_stem("synth", cfg);
  const fs::path dir = cfg.output_dir / stem;
  fs::create_directories(dir / "library");
  fs::create_directories(dir / "views");

  for (Eigen::Index j = 0; j < scene.library.category_count(); ++j) {
    write_feature_csv(dir / "library" / (scene.library.labels[static_cast<std::size_t>(j)] +
                                         ".feat.csv"),
                      scene.library.descriptors.col(j), scene.library.layout);
  }
  char name[32];
  for (Eigen::Index i = 0; i < scene.views.X.rows(); ++i) {
    std::snprintf(name, sizeof(name), "view%03d.feat.csv", static_cast<int>(i));
    write_feature_csv(dir / "views" / name, scene.views.X.row(i).transpose(),
                      scene.library.layout);
  }

  nlohmann::json truth;
  truth["truth_label"] = scene.truth_label;
  truth["planted_view"] = scene.planted_view;
  truth["view_ids"] = scene.views.view_ids;
  truth["seed"] = cfg.seed;
  save_text(dir / "truth.json", truth.dump(2));
  write_metadata(cfg, "synth", {stem + "/truth.json"}, "");
  std::cout << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view object recognition with joint view and feature-modality weighting"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");
  std::map<std::string, std::string> overrides;
  for (const auto& key : kConfigKeys)
    app.add_option("--" + key, overrides[key], "config override");

  auto* sub_extract = app.add_subcommand("extract", "write one feature file per image");
  std::vector<std::string> extract_images;
  sub_extract->add_option("images", extract_images, "input images")->required();

  auto* sub_recognize =
      app.add_subcommand("recognize", "recognize an object from view images or feature files");
  std::vector<std::string> recognize_inputs;
  std::string library_dir;
  sub_recognize->add_option("views", recognize_inputs, "view images or .feat.csv files")
      ->required();
  sub_recognize->add_option("--library", library_dir,
                            "directory of .feat.csv library descriptors (instead of dataset_root)");

  auto* sub_evaluate =
      app.add_subcommand("evaluate", "accuracy table + heatmap + MI report for a dataset");
  auto* sub_sweep = app.add_subcommand("sweep", "lambda1 x lambda2 accuracy heatmap");
  auto* sub_mi = app.add_subcommand("mi-rank", "mean mutual information by view rank");
  auto* sub_synth = app.add_subcommand("synth", "write a synthetic scene fixture");

  for (auto* sub : {sub_extract, sub_recognize, sub_evaluate, sub_sweep, sub_mi, sub_synth})
    sub->fallthrough(true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) cfg.set(key, value);
    }
    cfg.validate();

    if (app.got_subcommand(sub_extract)) return cmd_extract(cfg, extract_images);
    if (app.got_subcommand(sub_recognize))
      return cmd_recognize(cfg, recognize_inputs, library_dir);
    if (app.got_subcommand(sub_evaluate)) return cmd_evaluate(cfg);
    if (app.got_subcommand(sub_sweep)) return cmd_sweep(cfg);
    if (app.got_subcommand(sub_mi)) return cmd_mi_rank(cfg);
    if (app.got_subcommand(sub_synth)) return cmd_synth(cfg);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
