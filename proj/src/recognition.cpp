#include "mvrec/recognition.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "mvrec/errors.hpp"
#include "mvrec/util.hpp"

namespace mvrec {

ObjectLibrary::ObjectLibrary(Eigen::MatrixXd desc, std::vector<std::string> names,
                             ModalityLayout l)
    : descriptors(std::move(desc)), labels(std::move(names)), layout(std::move(l)) {
  if (descriptors.cols() < 1) throw InvalidInputError("library: needs at least one category");
  if (static_cast<Eigen::Index>(labels.size()) != descriptors.cols())
    throw InvalidInputError("library: label count does not match descriptor columns");
  if (layout.dim() != descriptors.rows())
    throw InvalidInputError("library: layout dimension does not match descriptor rows");
  if (!descriptors.allFinite()) throw InvalidInputError("library: non-finite descriptors");
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() != labels.size()) throw InvalidInputError("library: duplicate labels");
}

ViewSet::ViewSet(Eigen::MatrixXd x, std::vector<std::string> ids)
    : X(std::move(x)), view_ids(std::move(ids)) {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidInputError("views: X must be at least 1x1");
  if (!X.allFinite()) throw InvalidInputError("views: non-finite entries");
  if (!view_ids.empty() && static_cast<Eigen::Index>(view_ids.size()) != X.rows())
    throw InvalidInputError("views: id count does not match row count");
}

std::vector<std::size_t> rank_views(const Eigen::VectorXd& w) {
  if (!w.allFinite()) throw InvalidInputError("rank_views: non-finite weights");
  std::vector<std::size_t> idx(static_cast<std::size_t>(w.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(w[static_cast<Eigen::Index>(a)]) >
           std::abs(w[static_cast<Eigen::Index>(b)]);
  });
  return idx;
}

Eigen::VectorXd modality_weights(const Eigen::VectorXd& u, const ModalityLayout& layout) {
  if (u.size() != layout.dim())
    throw InvalidInputError("modality_weights: u length does not match layout");
  Eigen::VectorXd out(static_cast<Eigen::Index>(layout.block_count()));
  for (std::size_t i = 0; i < layout.block_count(); ++i)
    out[static_cast<Eigen::Index>(i)] = layout.block(u, i).norm();
  return out;
}

RecognitionResult recognize(const ViewSet& views, const ObjectLibrary& lib,
                            const SolverConfig& cfg, int jobs) {
  if (views.X.cols() != lib.dim())
    throw InvalidInputError("recognize: view dimension does not match library dimension");
  cfg.validate();

  const std::size_t p = static_cast<std::size_t>(lib.category_count());
  std::vector<SolverResult> solves(p);
  std::vector<std::string> failures(p);

  parallel_for(p, jobs, [&](std::size_t j) {
    try {
      const ProblemInstance inst(views.X, lib.descriptors.col(static_cast<Eigen::Index>(j)),
                                 lib.layout);
      solves[j] = solve(inst, cfg);
    } catch (const Error& e) {
      failures[j] = e.what();
    }
  });

  for (std::size_t j = 0; j < p; ++j) {
    if (!failures[j].empty())
      throw RecognitionError("recognize: category '" + lib.labels[j] + "': " + failures[j]);
  }

  RecognitionResult result;
  result.objectives.resize(static_cast<Eigen::Index>(p));
  result.converged.resize(p);
  result.iterations.resize(p);
  std::size_t best = 0;
  for (std::size_t j = 0; j < p; ++j) {
    result.objectives[static_cast<Eigen::Index>(j)] = solves[j].objective;
    result.converged[j] = solves[j].converged;
    result.iterations[j] = solves[j].iterations;
    if (solves[j].objective < result.objectives[static_cast<Eigen::Index>(best)]) best = j;
  }
  result.predicted_index = best;
  result.predicted_label = lib.labels[best];
  result.w = solves[best].w;
  result.u = solves[best].u;
  result.view_ranking = rank_views(result.w);
  result.modality_weights = modality_weights(result.u, lib.layout);
  return result;
}

std::string recognition_result_to_json(const RecognitionResult& result,
                                       const ObjectLibrary& lib) {
  nlohmann::json j;
  j["predicted_label"] = result.predicted_label;
  j["predicted_index"] = result.predicted_index;
  j["labels"] = lib.labels;
  j["objectives"] = std::vector<double>(result.objectives.begin(), result.objectives.end());
  j["view_weights"] = std::vector<double>(result.w.begin(), result.w.end());
  j["feature_weights"] = std::vector<double>(result.u.begin(), result.u.end());
  j["view_ranking"] = result.view_ranking;  // 0-based view indices
  nlohmann::json mw = nlohmann::json::object();
  for (std::size_t i = 0; i < lib.layout.block_count(); ++i)
    mw[lib.layout.entry(i).name] = result.modality_weights[static_cast<Eigen::Index>(i)];
  j["modality_weights"] = mw;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  return j.dump(2);
}

}  // namespace mvrec
