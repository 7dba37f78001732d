#include "mvrec/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>

#include "mvrec/errors.hpp"
#include "mvrec/image.hpp"
#include "mvrec/rng.hpp"

namespace mvrec {

namespace fs = std::filesystem;

namespace {

void read_reference_overrides(MultiViewDataset& ds) {
  const fs::path manifest = ds.root / "manifest.json";
  if (!fs::exists(manifest)) return;
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot read " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed manifest.json: " + std::string(e.what()));
  }
  if (j.contains("references")) {
    for (auto& [cat, file] : j["references"].items())
      ds.reference_overrides[cat] = file.get<std::string>();
  }
}

std::vector<fs::path> image_files_in(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image_file(entry.path()))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

// Flat COIL-style naming: obj<k>__<angle>.<ext>, ordered by (k, angle).
bool try_flat_coil_layout(MultiViewDataset& ds) {
  static const std::regex pattern(R"(obj(\d+)__(\d+)\.(png|pgm|ppm|pnm))",
                                  std::regex::icase);
  std::map<long, std::vector<std::pair<long, fs::path>>> groups;
  for (const auto& entry : fs::directory_iterator(ds.root)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern))
      groups[std::stol(m[1])].emplace_back(std::stol(m[2]), entry.path());
  }
  if (groups.empty()) return false;
  for (auto& [k, views] : groups) {
    std::sort(views.begin(), views.end());
    CategoryViews cat;
    cat.label = "obj" + std::to_string(k);
    for (auto& [angle, path] : views) cat.views.push_back(path);
    ds.categories.push_back(std::move(cat));
  }
  return true;
}

}  // namespace

MultiViewDataset load_dataset(const fs::path& root) {
  if (!fs::exists(root) || !fs::is_directory(root))
    throw DatasetError("dataset root is not a directory: " + root.string());

  MultiViewDataset ds;
  ds.root = root;

  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });

  if (!subdirs.empty()) {
    for (const auto& dir : subdirs) {
      CategoryViews cat;
      cat.label = dir.filename().string();
      cat.views = image_files_in(dir);
      if (cat.views.empty())
        throw DatasetError("category '" + cat.label + "' contains no images");
      ds.categories.push_back(std::move(cat));
    }
  } else if (!try_flat_coil_layout(ds)) {
    throw DatasetError("no categories found under " + root.string());
  }

  for (const auto& cat : ds.categories) {
    if (cat.views.size() < 2)
      throw DatasetError("category '" + cat.label +
                         "' has fewer than 2 views (need reference + input)");
    for (const auto& path : cat.views) load_image(path);  // decode check
  }

  read_reference_overrides(ds);
  return ds;
}

SplitDataset split_reference(const MultiViewDataset& ds, const FeatureParams& params,
                             const ModalityLayout& layout) {
  if (ds.categories.empty()) throw DatasetError("split: dataset has no categories");

  SplitDataset out;
  Eigen::MatrixXd desc(layout.dim(), static_cast<Eigen::Index>(ds.categories.size()));
  std::vector<std::string> labels;

  for (std::size_t j = 0; j < ds.categories.size(); ++j) {
    const auto& cat = ds.categories[j];
    std::size_t ref_idx = 0;
    if (auto it = ds.reference_overrides.find(cat.label); it != ds.reference_overrides.end()) {
      auto match = std::find_if(cat.views.begin(), cat.views.end(), [&](const fs::path& p) {
        return p.filename().string() == it->second;
      });
      if (match == cat.views.end())
        throw DatasetError("manifest reference '" + it->second + "' not found in category '" +
                           cat.label + "'");
      ref_idx = static_cast<std::size_t>(match - cat.views.begin());
    }

    const fs::path& ref = cat.views[ref_idx];
    desc.col(static_cast<Eigen::Index>(j)) =
        extract_feature_vector(load_image(ref), params, layout).values;
    labels.push_back(cat.label);
    out.references[cat.label] = ref.filename().string();

    CategoryViews inputs;
    inputs.label = cat.label;
    for (std::size_t v = 0; v < cat.views.size(); ++v) {
      if (v != ref_idx) inputs.views.push_back(cat.views[v]);
    }
    out.inputs.push_back(std::move(inputs));
  }

  out.library = ObjectLibrary(std::move(desc), std::move(labels), layout);
  return out;
}

std::string dataset_manifest_json(const MultiViewDataset& ds,
                                  const std::map<std::string, std::string>& references) {
  nlohmann::json j;
  j["root"] = ds.root.string();
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& cat : ds.categories) {
    nlohmann::json c;
    c["label"] = cat.label;
    c["view_count"] = cat.views.size();
    if (auto it = references.find(cat.label); it != references.end())
      c["reference"] = it->second;
    cats.push_back(std::move(c));
  }
  j["categories"] = std::move(cats);
  return j.dump(2);
}

std::size_t resolve_view_count(const TrialSpec& spec, std::size_t available) {
  if (available == 0) throw InvalidInputError("sample_views: no views available");
  if (spec.count.has_value() == spec.fraction.has_value())
    throw InvalidInputError("trial spec: set exactly one of fraction or count");
  if (spec.count) {
    if (*spec.count < 1 || *spec.count > available)
      throw InvalidInputError("trial spec: count outside [1, available]");
    return *spec.count;
  }
  if (!(*spec.fraction > 0.0) || *spec.fraction > 1.0)
    throw InvalidInputError("trial spec: fraction outside (0, 1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(*spec.fraction * static_cast<double>(available)));
  return std::max<std::size_t>(1, std::min(k, available));
}

std::vector<std::size_t> sample_views(std::size_t available, const TrialSpec& spec,
                                      std::uint64_t trial_index) {
  const std::size_t k = resolve_view_count(spec, available);
  Rng rng(Rng::mix({spec.seed, 0x76696577ULL, trial_index}));
  auto idx = rng.sample_without_replacement(available, k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void SyntheticSceneParams::validate() const {
  if (views < 1) throw InvalidInputError("scene: views must be >= 1");
  if (blocks < 1 || block_dim < 1)
    throw InvalidInputError("scene: blocks and block_dim must be >= 1");
  if (noise_sigma < 0) throw InvalidInputError("scene: noise sigma must be >= 0");
  if (occluded_views < 0 || occluded_views >= views)
    throw InvalidInputError("scene: occluded view count must be in [0, views)");
  if (categories < 1) throw InvalidInputError("scene: categories must be >= 1");
  if (planted_category < 0 || planted_category >= categories)
    throw InvalidInputError("scene: planted category index out of range");
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneParams& params,
                                        std::uint64_t seed) {
  params.validate();
  Rng rng(Rng::mix({seed, 0x7363656eULL}));

  const Eigen::Index d = static_cast<Eigen::Index>(params.blocks) * params.block_dim;
  const Eigen::Index n = params.views;
  const Eigen::Index p = params.categories;

  std::vector<std::pair<std::string, Eigen::Index>> entries;
  for (int b = 0; b < params.blocks; ++b)
    entries.emplace_back("mod" + std::to_string(b), params.block_dim);
  const ModalityLayout layout(entries);

  auto random_unit = [&] {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    const double norm = v.norm();
    return norm > 0 ? Eigen::VectorXd(v / norm) : v;
  };

  Eigen::MatrixXd desc(d, p);
  std::vector<std::string> labels;
  char name[16];
  for (Eigen::Index j = 0; j < p; ++j) {
    desc.col(j) = random_unit();
    std::snprintf(name, sizeof(name), "cat%03d", static_cast<int>(j));
    labels.emplace_back(name);
  }
  const Eigen::VectorXd target = desc.col(params.planted_category);

  // Row roles: one planted view, `occluded_views` pure-noise views, the rest
  // scaled noisy copies of the target descriptor.
  const std::size_t planted = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    if (i != planted) others.push_back(i);
  }
  auto pick = rng.sample_without_replacement(others.size(),
                                             static_cast<std::size_t>(params.occluded_views));
  std::vector<bool> occluded(static_cast<std::size_t>(n), false);
  for (std::size_t k : pick) occluded[others[k]] = true;

  auto noise_vec = [&] {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    return v;
  };

  Eigen::MatrixXd X(n, d);
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    if (row == planted) {
      X.row(i) = (target + params.noise_sigma * noise_vec()).transpose();
      ids.push_back("view" + std::to_string(i) + ":planted");
    } else if (occluded[row]) {
      X.row(i) = random_unit().transpose();
      ids.push_back("view" + std::to_string(i) + ":occluded");
    } else {
      const double alpha = rng.uniform(0.2, 0.6);
      X.row(i) = (alpha * target + params.noise_sigma * noise_vec()).transpose();
      ids.push_back("view" + std::to_string(i) + ":copy");
    }
  }

  SyntheticScene scene;
  scene.views = ViewSet(std::move(X), std::move(ids));
  scene.library = ObjectLibrary(std::move(desc), std::move(labels), layout);
  scene.truth_label = scene.library.labels[static_cast<std::size_t>(params.planted_category)];
  scene.planted_view = planted;
  return scene;
}

}  // namespace mvrec
