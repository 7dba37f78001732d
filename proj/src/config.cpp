#include "mvrec/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mvrec/errors.hpp"
#include "mvrec/util.hpp"

namespace mvrec {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' expects a non-empty list");
  return out;
}

std::string list_str(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset_root") dataset_root = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "jobs") jobs = static_cast<int>(parse_long(key, value));
  else if (key == "lambda1") solver.lambda1 = parse_double(key, value);
  else if (key == "lambda2") solver.lambda2 = parse_double(key, value);
  else if (key == "epsilon") solver.epsilon = parse_double(key, value);
  else if (key == "delta") solver.delta = parse_double(key, value);
  else if (key == "tol") solver.tol = parse_double(key, value);
  else if (key == "max_iter") solver.max_iter = static_cast<int>(parse_long(key, value));
  else if (key == "resize_edge") features.resize_edge = static_cast<int>(parse_long(key, value));
  else if (key == "color_bins") features.color_bins = static_cast<int>(parse_long(key, value));
  else if (key == "hog_cell") features.hog_cell = static_cast<int>(parse_long(key, value));
  else if (key == "hog_block") features.hog_block = static_cast<int>(parse_long(key, value));
  else if (key == "hog_bins") features.hog_bins = static_cast<int>(parse_long(key, value));
  else if (key == "lambda1_grid") lambda1_grid = parse_list(key, value);
  else if (key == "lambda2_grid") lambda2_grid = parse_list(key, value);
  else if (key == "view_amounts") view_amounts = parse_list(key, value);
  else if (key == "trials") trials = static_cast<int>(parse_long(key, value));
  else if (key == "heatmap_views") heatmap_views = parse_double(key, value);
  else if (key == "mi_views") mi_views = parse_double(key, value);
  else if (key == "mi_trials") mi_trials = static_cast<int>(parse_long(key, value));
  else if (key == "mi_bins") mi_bins = static_cast<int>(parse_long(key, value));
  else if (key == "mi_max_rank") mi_max_rank = static_cast<int>(parse_long(key, value));
  else if (key == "scene_views") scene.views = static_cast<int>(parse_long(key, value));
  else if (key == "scene_blocks") scene.blocks = static_cast<int>(parse_long(key, value));
  else if (key == "scene_block_dim") scene.block_dim = static_cast<int>(parse_long(key, value));
  else if (key == "scene_sigma") scene.noise_sigma = parse_double(key, value);
  else if (key == "scene_occluded") scene.occluded_views = static_cast<int>(parse_long(key, value));
  else if (key == "scene_categories") scene.categories = static_cast<int>(parse_long(key, value));
  else if (key == "scene_planted") scene.planted_category = static_cast<int>(parse_long(key, value));
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
  return {
      {"dataset_root", dataset_root.string()},
      {"output_dir", output_dir.string()},
      {"seed", std::to_string(seed)},
      {"jobs", std::to_string(jobs)},
      {"lambda1", format_double(solver.lambda1)},
      {"lambda2", format_double(solver.lambda2)},
      {"epsilon", format_double(solver.epsilon)},
      {"delta", format_double(solver.delta)},
      {"tol", format_double(solver.tol)},
      {"max_iter", std::to_string(solver.max_iter)},
      {"resize_edge", std::to_string(features.resize_edge)},
      {"color_bins", std::to_string(features.color_bins)},
      {"hog_cell", std::to_string(features.hog_cell)},
      {"hog_block", std::to_string(features.hog_block)},
      {"hog_bins", std::to_string(features.hog_bins)},
      {"lambda1_grid", list_str(lambda1_grid)},
      {"lambda2_grid", list_str(lambda2_grid)},
      {"view_amounts", list_str(view_amounts)},
      {"trials", std::to_string(trials)},
      {"heatmap_views", format_double(heatmap_views)},
      {"mi_views", format_double(mi_views)},
      {"mi_trials", std::to_string(mi_trials)},
      {"mi_bins", std::to_string(mi_bins)},
      {"mi_max_rank", std::to_string(mi_max_rank)},
      {"scene_views", std::to_string(scene.views)},
      {"scene_blocks", std::to_string(scene.blocks)},
      {"scene_block_dim", std::to_string(scene.block_dim)},
      {"scene_sigma", format_double(scene.noise_sigma)},
      {"scene_occluded", std::to_string(scene.occluded_views)},
      {"scene_categories", std::to_string(scene.categories)},
      {"scene_planted", std::to_string(scene.planted_category)},
  };
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : items()) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical())); }

void RunConfig::validate() const {
  features.validate();
  solver.validate();
  try {
    scene.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  for (double v : lambda1_grid)
    if (v < 0) throw ConfigError("config: lambda1_grid values must be >= 0");
  for (double v : lambda2_grid)
    if (v < 0) throw ConfigError("config: lambda2_grid values must be >= 0");
  for (double v : view_amounts)
    if (!(v > 0)) throw ConfigError("config: view_amounts values must be positive");
  if (!(heatmap_views > 0) || !(mi_views > 0))
    throw ConfigError("config: view amounts must be positive");
  if (mi_trials < 1 || mi_bins < 2 || mi_max_rank < 1 || mi_max_rank > 10)
    throw ConfigError("config: invalid mutual-information settings");
}

}  // namespace mvrec
