#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvrec/dataset.hpp"
#include "mvrec/image.hpp"
#include "mvrec/recognition.hpp"
#include "mvrec/solver.hpp"

namespace mvrec {

// Mutual information (nats) of the joint intensity histogram of two
// equally-sized images, converted to grayscale and quantized to `bins`
// levels. Zero-probability cells contribute nothing.
double mutual_information(const Image& a, const Image& b, int bins);

// Dataset with all features extracted once so trials only index rows.
// Thumbnails are 64x64 grayscale and feed the MI computations.
struct PreparedDataset {
  ObjectLibrary library;
  std::vector<Eigen::MatrixXd> view_features;  // per category: n_views x d
  std::vector<std::vector<std::filesystem::path>> view_paths;
  std::vector<Image> reference_thumbs;
  std::vector<std::vector<Image>> view_thumbs;
  std::string manifest_json;
};

PreparedDataset prepare_dataset(const MultiViewDataset& ds, const FeatureParams& params,
                                const ModalityLayout& layout, int jobs = 1,
                                bool with_thumbs = true);

// Experiment grid. Entries of view_amounts <= 1 are fractions of the
// available views (rounded up); entries > 1 are absolute view counts.
struct ExperimentGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  std::vector<double> view_amounts;
  int trials_per_cell = 10;
  std::uint64_t base_seed = 0;

  void validate() const;
};

struct AccuracyRow {
  double lambda1 = 0;
  double lambda2 = 0;
  double views_amount = 0;
  int trials = 0;
  double accuracy = 0;
  double mean_iterations = 0;
};

struct AccuracyTable {
  std::vector<AccuracyRow> rows;
};

// For every grid cell, runs `trials_per_cell` recognitions. Each trial
// targets one category (cycling through them so categories stay balanced),
// samples a view subset of that category, and scores the prediction against
// the full library. Fully reproducible from the grid's base seed.
AccuracyTable run_accuracy_experiment(const PreparedDataset& prepared,
                                      const ExperimentGrid& grid,
                                      const SolverConfig& solver_template, int jobs = 1);

// One-amount slice of the grid as a |lambda1| x |lambda2| accuracy matrix.
Eigen::MatrixXd sweep_heatmap(const PreparedDataset& prepared,
                              const std::vector<double>& lambda1_values,
                              const std::vector<double>& lambda2_values,
                              double view_amount, int trials_per_cell,
                              const SolverConfig& solver_template, std::uint64_t base_seed,
                              int jobs = 1);

// Mean MI between the rank-r view and the predicted category's reference
// image, r = 1..max_rank, averaged over trials. Trials that resolve to a
// single view are skipped.
struct MIRankingReport {
  std::vector<double> mean_mi;  // index 0 holds rank 1
  std::vector<int> counts;
  int trials_run = 0;
  int mi_bins = 32;
};

MIRankingReport mi_ranking_report(const PreparedDataset& prepared, double view_amount,
                                  int trials, const SolverConfig& solver_template,
                                  std::uint64_t base_seed, int max_rank = 10,
                                  int mi_bins = 32, int jobs = 1);

// Exhaustive grid search of the exact objective over
// [-box, box]^(n + d) at the given resolution. Refuses instances with more
// than 6 unknowns. Independent of the iterative solver; used as its oracle.
struct OracleResult {
  Eigen::VectorXd w;
  Eigen::VectorXd u;
  double objective = 0;
};

OracleResult brute_force_oracle(const ProblemInstance& inst, double lambda1,
                                double lambda2, double box, double step, int jobs = 1);

// CSV artifacts (RFC-4180, CRLF line endings).
std::string accuracy_table_csv(const AccuracyTable& table);
std::string heatmap_csv(const std::vector<double>& lambda1_values,
                        const std::vector<double>& lambda2_values,
                        const Eigen::MatrixXd& accuracy);
std::string mi_report_csv(const MIRankingReport& report);
std::string mi_report_json(const MIRankingReport& report);

}  // namespace mvrec
