#include "mvrec/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "mvrec/errors.hpp"
#include "mvrec/rng.hpp"
#include "mvrec/util.hpp"

namespace mvrec {

namespace {

constexpr int kThumbEdge = 64;

Image make_thumb(const Image& img) {
  return resize_bilinear(to_grayscale(img), kThumbEdge, kThumbEdge);
}

// Grid axis -box, -box+step, ..., box.
std::vector<double> grid_axis(double box, double step) {
  const int half = static_cast<int>(std::llround(box / step));
  std::vector<double> axis;
  axis.reserve(2 * half + 1);
  for (int k = -half; k <= half; ++k) axis.push_back(k * step);
  return axis;
}

struct TrialOutcome {
  bool correct = false;
  long iteration_sum = 0;
  int solve_count = 0;
};

TrialOutcome run_trial(const PreparedDataset& prepared, double lambda1, double lambda2,
                       double view_amount, std::uint64_t cell_seed, std::uint64_t trial,
                       const SolverConfig& solver_template) {
  const std::size_t p = prepared.view_features.size();
  const std::size_t category = trial % p;
  const auto available = static_cast<std::size_t>(prepared.view_features[category].rows());

  TrialSpec spec;
  if (view_amount <= 1.0)
    spec.fraction = view_amount;
  else
    spec.count = std::min(available, static_cast<std::size_t>(std::llround(view_amount)));
  spec.seed = cell_seed;
  const auto indices = sample_views(available, spec, trial);

  Eigen::MatrixXd X(static_cast<Eigen::Index>(indices.size()),
                    prepared.library.dim());
  for (std::size_t r = 0; r < indices.size(); ++r)
    X.row(static_cast<Eigen::Index>(r)) =
        prepared.view_features[category].row(static_cast<Eigen::Index>(indices[r]));

  SolverConfig cfg = solver_template;
  cfg.lambda1 = lambda1;
  cfg.lambda2 = lambda2;
  const RecognitionResult res = recognize(ViewSet(std::move(X)), prepared.library, cfg);

  TrialOutcome out;
  out.correct = res.predicted_index == category;
  for (int it : res.iterations) out.iteration_sum += it;
  out.solve_count = static_cast<int>(res.iterations.size());
  return out;
}

}  // namespace

double mutual_information(const Image& a, const Image& b, int bins) {
  if (bins < 2) throw InvalidInputError("mutual information: bins must be >= 2");
  const Image ga = to_grayscale(a);
  const Image gb = to_grayscale(b);
  if (ga.width != gb.width || ga.height != gb.height)
    throw InvalidInputError("mutual information: image sizes differ");
  if (ga.width <= 0 || ga.height <= 0)
    throw InvalidInputError("mutual information: empty image");

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, bins);
  const std::size_t n = ga.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const int ia = ga.data[i] * bins / 256;
    const int ib = gb.data[i] * bins / 256;
    joint(ia, ib) += 1.0;
  }
  joint /= static_cast<double>(n);
  const Eigen::VectorXd pa = joint.rowwise().sum();
  const Eigen::VectorXd pb = joint.colwise().sum();

  double mi = 0.0;
  for (int ia = 0; ia < bins; ++ia) {
    for (int ib = 0; ib < bins; ++ib) {
      const double pab = joint(ia, ib);
      if (pab > 0.0) mi += pab * std::log(pab / (pa[ia] * pb[ib]));
    }
  }
  return std::max(0.0, mi);  // the plug-in estimate is nonnegative; clip rounding
}

PreparedDataset prepare_dataset(const MultiViewDataset& ds, const FeatureParams& params,
                                const ModalityLayout& layout, int jobs, bool with_thumbs) {
  SplitDataset split = split_reference(ds, params, layout);

  PreparedDataset out;
  const std::size_t p = split.inputs.size();
  out.view_features.resize(p);
  out.view_paths.resize(p);
  out.view_thumbs.resize(p);
  if (with_thumbs) out.reference_thumbs.resize(p);

  // Reference thumbs come from the chosen reference view of each category.
  std::vector<std::filesystem::path> ref_paths(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& cat = ds.categories[j];
    const std::string ref_name = split.references.at(cat.label);
    for (const auto& v : cat.views) {
      if (v.filename().string() == ref_name) ref_paths[j] = v;
    }
  }

  parallel_for(p, jobs, [&](std::size_t j) {
    const auto& views = split.inputs[j].views;
    Eigen::MatrixXd feats(static_cast<Eigen::Index>(views.size()), layout.dim());
    std::vector<Image> thumbs;
    for (std::size_t v = 0; v < views.size(); ++v) {
      const Image img = load_image(views[v]);
      feats.row(static_cast<Eigen::Index>(v)) =
          extract_feature_vector(img, params, layout).values.transpose();
      if (with_thumbs) thumbs.push_back(make_thumb(img));
    }
    out.view_features[j] = std::move(feats);
    out.view_paths[j] = views;
    out.view_thumbs[j] = std::move(thumbs);
    if (with_thumbs) out.reference_thumbs[j] = make_thumb(load_image(ref_paths[j]));
  });

  out.library = std::move(split.library);
  out.manifest_json = dataset_manifest_json(ds, split.references);
  return out;
}

void ExperimentGrid::validate() const {
  if (lambda1_values.empty() || lambda2_values.empty() || view_amounts.empty())
    throw ConfigError("experiment grid: all value lists must be non-empty");
  if (trials_per_cell < 1) throw ConfigError("experiment grid: trials must be >= 1");
  for (double l : lambda1_values)
    if (l < 0) throw ConfigError("experiment grid: lambda1 values must be >= 0");
  for (double l : lambda2_values)
    if (l < 0) throw ConfigError("experiment grid: lambda2 values must be >= 0");
  for (double v : view_amounts)
    if (!(v > 0)) throw ConfigError("experiment grid: view amounts must be positive");
}

AccuracyTable run_accuracy_experiment(const PreparedDataset& prepared,
                                      const ExperimentGrid& grid,
                                      const SolverConfig& solver_template, int jobs) {
  grid.validate();
  if (prepared.view_features.empty())
    throw InvalidInputError("accuracy experiment: empty dataset");

  struct Cell {
    std::size_t i1, i2, iv;
  };
  std::vector<Cell> cells;
  for (std::size_t i1 = 0; i1 < grid.lambda1_values.size(); ++i1)
    for (std::size_t i2 = 0; i2 < grid.lambda2_values.size(); ++i2)
      for (std::size_t iv = 0; iv < grid.view_amounts.size(); ++iv)
        cells.push_back({i1, i2, iv});

  const std::size_t trials = static_cast<std::size_t>(grid.trials_per_cell);
  std::vector<TrialOutcome> outcomes(cells.size() * trials);
  std::vector<std::string> errors(cells.size() * trials);

  parallel_for(outcomes.size(), jobs, [&](std::size_t task) {
    const Cell& cell = cells[task / trials];
    const std::uint64_t trial = task % trials;
    const std::uint64_t cell_seed =
        Rng::mix({grid.base_seed, 0xACC0ULL, cell.i1, cell.i2, cell.iv});
    try {
      outcomes[task] = run_trial(prepared, grid.lambda1_values[cell.i1],
                                 grid.lambda2_values[cell.i2], grid.view_amounts[cell.iv],
                                 cell_seed, trial, solver_template);
    } catch (const Error& e) {
      errors[task] = e.what();
    }
  });

  for (std::size_t task = 0; task < outcomes.size(); ++task) {
    if (!errors[task].empty()) {
      const Cell& cell = cells[task / trials];
      throw Error("accuracy experiment failed at cell (lambda1=" +
                  format_double(grid.lambda1_values[cell.i1]) +
                  ", lambda2=" + format_double(grid.lambda2_values[cell.i2]) +
                  ", views=" + format_double(grid.view_amounts[cell.iv]) +
                  ", trial=" + std::to_string(task % trials) + "): " + errors[task]);
    }
  }

  AccuracyTable table;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    AccuracyRow row;
    row.lambda1 = grid.lambda1_values[cell.i1];
    row.lambda2 = grid.lambda2_values[cell.i2];
    row.views_amount = grid.view_amounts[cell.iv];
    row.trials = grid.trials_per_cell;
    long correct = 0;
    long iter_sum = 0;
    long solves = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[c * trials + t];
      correct += o.correct ? 1 : 0;
      iter_sum += o.iteration_sum;
      solves += o.solve_count;
    }
    row.accuracy = static_cast<double>(correct) / static_cast<double>(trials);
    row.mean_iterations =
        solves > 0 ? static_cast<double>(iter_sum) / static_cast<double>(solves) : 0.0;
    table.rows.push_back(row);
  }
  return table;
}

Eigen::MatrixXd sweep_heatmap(const PreparedDataset& prepared,
                              const std::vector<double>& lambda1_values,
                              const std::vector<double>& lambda2_values,
                              double view_amount, int trials_per_cell,
                              const SolverConfig& solver_template, std::uint64_t base_seed,
                              int jobs) {
  ExperimentGrid grid;
  grid.lambda1_values = lambda1_values;
  grid.lambda2_values = lambda2_values;
  grid.view_amounts = {view_amount};
  grid.trials_per_cell = trials_per_cell;
  grid.base_seed = base_seed;
  const AccuracyTable table = run_accuracy_experiment(prepared, grid, solver_template, jobs);

  Eigen::MatrixXd acc(lambda1_values.size(), lambda2_values.size());
  std::size_t r = 0;
  for (std::size_t i1 = 0; i1 < lambda1_values.size(); ++i1)
    for (std::size_t i2 = 0; i2 < lambda2_values.size(); ++i2)
      acc(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2)) =
          table.rows[r++].accuracy;
  return acc;
}

MIRankingReport mi_ranking_report(const PreparedDataset& prepared, double view_amount,
                                  int trials, const SolverConfig& solver_template,
                                  std::uint64_t base_seed, int max_rank, int mi_bins,
                                  int jobs) {
  if (trials < 1) throw InvalidInputError("mi ranking: trials must be >= 1");
  if (max_rank < 1 || max_rank > 10)
    throw InvalidInputError("mi ranking: max rank must be in [1, 10]");
  if (prepared.reference_thumbs.empty())
    throw InvalidInputError("mi ranking: dataset was prepared without thumbnails");

  const std::size_t p = prepared.view_features.size();
  struct TrialMi {
    std::vector<double> mi;  // per rank, may be shorter than max_rank
    bool used = false;
    std::string error;
  };
  std::vector<TrialMi> per_trial(static_cast<std::size_t>(trials));

  parallel_for(per_trial.size(), jobs, [&](std::size_t t) {
    try {
      const std::size_t category = t % p;
      const auto available =
          static_cast<std::size_t>(prepared.view_features[category].rows());
      TrialSpec spec;
      if (view_amount <= 1.0)
        spec.fraction = view_amount;
      else
        spec.count = std::min(available, static_cast<std::size_t>(std::llround(view_amount)));
      spec.seed = Rng::mix({base_seed, 0x4D49ULL});
      const auto indices = sample_views(available, spec, t);
      if (indices.size() < 2) return;  // no ranking beyond a single view

      Eigen::MatrixXd X(static_cast<Eigen::Index>(indices.size()), prepared.library.dim());
      for (std::size_t r = 0; r < indices.size(); ++r)
        X.row(static_cast<Eigen::Index>(r)) =
            prepared.view_features[category].row(static_cast<Eigen::Index>(indices[r]));

      const RecognitionResult res =
          recognize(ViewSet(std::move(X)), prepared.library, solver_template);
      const Image& ref = prepared.reference_thumbs[res.predicted_index];

      TrialMi out;
      const std::size_t ranks =
          std::min<std::size_t>(static_cast<std::size_t>(max_rank), indices.size());
      for (std::size_t r = 0; r < ranks; ++r) {
        const std::size_t original = indices[res.view_ranking[r]];
        out.mi.push_back(
            mutual_information(prepared.view_thumbs[category][original], ref, mi_bins));
      }
      out.used = true;
      per_trial[t] = std::move(out);
    } catch (const Error& e) {
      per_trial[t].error = e.what();
    }
  });

  MIRankingReport report;
  report.mean_mi.assign(static_cast<std::size_t>(max_rank), 0.0);
  report.counts.assign(static_cast<std::size_t>(max_rank), 0);
  report.mi_bins = mi_bins;
  for (const auto& t : per_trial) {
    if (!t.error.empty()) throw Error("mi ranking: " + t.error);
    if (!t.used) continue;
    ++report.trials_run;
    for (std::size_t r = 0; r < t.mi.size(); ++r) {
      report.mean_mi[r] += t.mi[r];
      report.counts[r] += 1;
    }
  }
  for (std::size_t r = 0; r < report.mean_mi.size(); ++r) {
    if (report.counts[r] > 0) report.mean_mi[r] /= report.counts[r];
  }
  return report;
}

OracleResult brute_force_oracle(const ProblemInstance& inst, double lambda1,
                                double lambda2, double box, double step, int jobs) {
  const Eigen::Index n = inst.views();
  const Eigen::Index d = inst.dim();
  if (n + d > 6)
    throw InvalidInputError(
        "oracle: refuses instances with more than 6 unknowns (n + d = " +
        std::to_string(n + d) + ")");
  if (!(box > 0) || !(step > 0)) throw InvalidInputError("oracle: box and step must be > 0");

  const std::vector<double> axis = grid_axis(box, step);
  const std::size_t points = axis.size();

  // Flatten the w-grid once: coordinates plus the u-independent part
  //   h(w) = |X^T w - o|^2 + |w|^2 + lambda1 |w|_1.
  std::size_t w_points = 1;
  for (Eigen::Index i = 0; i < n; ++i) w_points *= points;
  Eigen::MatrixXd W(w_points, n);
  Eigen::ArrayXd h(w_points);
  {
    Eigen::VectorXd w(n);
    std::vector<std::size_t> odo(static_cast<std::size_t>(n), 0);
    for (std::size_t j = 0; j < w_points; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) w[i] = axis[odo[static_cast<std::size_t>(i)]];
      W.row(static_cast<Eigen::Index>(j)) = w.transpose();
      h[static_cast<Eigen::Index>(j)] = (inst.X.transpose() * w - inst.o).squaredNorm() +
                                        w.squaredNorm() + lambda1 * w.lpNorm<1>();
      for (Eigen::Index i = n - 1; i >= 0; --i) {
        auto& digit = odo[static_cast<std::size_t>(i)];
        if (++digit < points) break;
        digit = 0;
      }
    }
  }

  std::size_t u_points = 1;
  for (Eigen::Index i = 0; i < d; ++i) u_points *= points;

  // Per u-point cost is one fused pass over the flattened w-grid; the small
  // view counts get dedicated expressions so nothing is materialized.
  const Eigen::ArrayXd harr = h;
  std::vector<Eigen::ArrayXd> wcols;
  for (Eigen::Index i = 0; i < n; ++i) wcols.push_back(W.col(i).array());
  auto envelope_min = [&](const Eigen::VectorXd& q) -> double {
    switch (n) {
      case 1:
        return (harr - (2.0 * q[0]) * wcols[0]).minCoeff();
      case 2:
        return (harr - (2.0 * q[0]) * wcols[0] - (2.0 * q[1]) * wcols[1]).minCoeff();
      default:
        return (harr - (2.0 * (W * q)).array()).minCoeff();
    }
  };

  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::size_t u_index = 0;
  };
  const std::size_t chunk_count = jobs > 1 ? static_cast<std::size_t>(4 * jobs) : 1;
  const std::size_t chunk_size = (u_points + chunk_count - 1) / chunk_count;
  std::vector<Best> chunk_best(chunk_count);

  parallel_for(chunk_count, jobs, [&](std::size_t chunk) {
    const std::size_t begin = chunk * chunk_size;
    const std::size_t end = std::min(u_points, begin + chunk_size);
    if (begin >= end) return;

    Eigen::VectorXd u(d);
    std::vector<std::size_t> odo(static_cast<std::size_t>(d), 0);
    // Seek the odometer to `begin`.
    std::size_t rem = begin;
    for (Eigen::Index i = d - 1; i >= 0; --i) {
      odo[static_cast<std::size_t>(i)] = rem % points;
      rem /= points;
    }
    Best best;
    for (std::size_t j = begin; j < end; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) u[i] = axis[odo[static_cast<std::size_t>(i)]];
      double cu = (inst.X * u).squaredNorm();
      for (std::size_t b = 0; b < inst.layout.block_count(); ++b)
        cu += lambda2 * inst.layout.block(u, b).norm();
      const double m = envelope_min(inst.X * u) + cu;
      if (m < best.value) {
        best.value = m;
        best.u_index = j;
      }
      for (Eigen::Index i = d - 1; i >= 0; --i) {
        auto& digit = odo[static_cast<std::size_t>(i)];
        if (++digit < points) break;
        digit = 0;
      }
    }
    chunk_best[chunk] = best;
  });

  Best best;
  for (const Best& b : chunk_best) {
    if (b.value < best.value || (b.value == best.value && b.u_index < best.u_index)) {
      if (b.value <= best.value) best = b;
    }
  }

  OracleResult result;
  result.u.resize(d);
  std::size_t rem = best.u_index;
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    result.u[i] = axis[rem % points];
    rem /= points;
  }
  // Recover the minimizing w-grid point for the winning u.
  Eigen::Index wi = 0;
  (harr - (2.0 * (W * (inst.X * result.u))).array()).minCoeff(&wi);
  result.w = W.row(wi).transpose();
  result.objective = objective(inst, result.w, result.u, lambda1, lambda2);
  if (std::abs(result.objective - best.value) >
      1e-6 * std::max(1.0, std::abs(best.value)))
    throw NumericalError("oracle: internal objective mismatch");
  return result;
}

std::string accuracy_table_csv(const AccuracyTable& table) {
  std::string out = "lambda1,lambda2,views,trials,accuracy,mean_iterations\r\n";
  for (const auto& row : table.rows) {
    out += format_double(row.lambda1) + "," + format_double(row.lambda2) + "," +
           format_double(row.views_amount) + "," + std::to_string(row.trials) + "," +
           format_double(row.accuracy) + "," + format_double(row.mean_iterations) + "\r\n";
  }
  return out;
}

std::string heatmap_csv(const std::vector<double>& lambda1_values,
                        const std::vector<double>& lambda2_values,
                        const Eigen::MatrixXd& accuracy) {
  std::string out = "lambda1";
  for (double l2 : lambda2_values) out += "," + format_double(l2);
  out += "\r\n";
  for (std::size_t i1 = 0; i1 < lambda1_values.size(); ++i1) {
    out += format_double(lambda1_values[i1]);
    for (std::size_t i2 = 0; i2 < lambda2_values.size(); ++i2)
      out += "," + format_double(accuracy(static_cast<Eigen::Index>(i1),
                                          static_cast<Eigen::Index>(i2)));
    out += "\r\n";
  }
  return out;
}

std::string mi_report_csv(const MIRankingReport& report) {
  std::string out = "rank,mean_mi,trials\r\n";
  for (std::size_t r = 0; r < report.mean_mi.size(); ++r) {
    out += std::to_string(r + 1) + "," + format_double(report.mean_mi[r]) + "," +
           std::to_string(report.counts[r]) + "\r\n";
  }
  return out;
}

std::string mi_report_json(const MIRankingReport& report) {
  nlohmann::json j;
  j["mean_mi_by_rank"] = report.mean_mi;
  j["counts_by_rank"] = report.counts;
  j["trials_run"] = report.trials_run;
  j["mi_bins"] = report.mi_bins;
  return j.dump(2);
}

}  // namespace mvrec
