#pragma once

#include <filesystem>

#include "mvrec/layout.hpp"

namespace mvrec {

// Feature files are CSV with a fixed header `modality,index,value`, one row
// per dimension in layout order, so loaders can reconstruct the modality
// layout without out-of-band information.
std::string feature_csv(const Eigen::VectorXd& values, const ModalityLayout& layout);

void write_feature_csv(const std::filesystem::path& path, const Eigen::VectorXd& values,
                       const ModalityLayout& layout);

struct LoadedFeature {
  Eigen::VectorXd values;
  ModalityLayout layout;
};

LoadedFeature read_feature_csv(const std::filesystem::path& path);

}  // namespace mvrec
