#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mvrec/layout.hpp"
#include "mvrec/solver.hpp"

namespace mvrec {

// Known object descriptors, one column per category.
struct ObjectLibrary {
  Eigen::MatrixXd descriptors;      // d x p
  std::vector<std::string> labels;  // length p, unique
  ModalityLayout layout;

  ObjectLibrary() = default;
  ObjectLibrary(Eigen::MatrixXd desc, std::vector<std::string> names, ModalityLayout l);

  Eigen::Index dim() const { return descriptors.rows(); }
  Eigen::Index category_count() const { return descriptors.cols(); }
};

// The observations to recognize: one feature vector per view.
struct ViewSet {
  Eigen::MatrixXd X;                 // n x d
  std::vector<std::string> view_ids;  // length n; empty ids allowed

  ViewSet() = default;
  explicit ViewSet(Eigen::MatrixXd x, std::vector<std::string> ids = {});
};

struct RecognitionResult {
  std::string predicted_label;
  std::size_t predicted_index = 0;
  Eigen::VectorXd objectives;   // per category, exact objective at its optimum
  Eigen::VectorXd w;            // view weights of the winning category
  Eigen::VectorXd u;            // feature weights of the winning category
  std::vector<std::size_t> view_ranking;  // 0-based view indices, |w| descending
  Eigen::VectorXd modality_weights;       // per-block norms of u, layout order
  std::vector<bool> converged;            // per category
  std::vector<int> iterations;            // per category
};

// Solves one weight-learning problem per library column and picks the
// category with the smallest objective (ties break to the lowest index).
// jobs > 1 runs the per-category solves on a worker pool; the result is
// identical regardless of scheduling.
RecognitionResult recognize(const ViewSet& views, const ObjectLibrary& lib,
                            const SolverConfig& cfg, int jobs = 1);

// View indices sorted by |w_i| descending, ties by ascending index.
std::vector<std::size_t> rank_views(const Eigen::VectorXd& w);

// l2-norm of each modality block of u, in layout order.
Eigen::VectorXd modality_weights(const Eigen::VectorXd& u, const ModalityLayout& layout);

// JSON serialization of a result (labels come from the library).
std::string recognition_result_to_json(const RecognitionResult& result,
                                       const ObjectLibrary& lib);

}  // namespace mvrec
