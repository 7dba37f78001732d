#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace mvrec {

// Partition of the d-dimensional feature space into named contiguous
// modality blocks. d always equals the sum of the block lengths.
class ModalityLayout {
public:
  struct Entry {
    std::string name;
    Eigen::Index length = 0;
    Eigen::Index offset = 0;
  };

  ModalityLayout() = default;
  // entries: (name, length) pairs; names must be unique, lengths positive.
  explicit ModalityLayout(const std::vector<std::pair<std::string, Eigen::Index>>& entries);

  Eigen::Index dim() const { return dim_; }
  std::size_t block_count() const { return entries_.size(); }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const { return entries_; }

  // View of block i inside a length-d vector.
  Eigen::VectorBlock<const Eigen::VectorXd> block(const Eigen::VectorXd& v, std::size_t i) const;
  Eigen::VectorBlock<Eigen::VectorXd> block(Eigen::VectorXd& v, std::size_t i) const;

  bool operator==(const ModalityLayout& other) const;

private:
  std::vector<Entry> entries_;
  Eigen::Index dim_ = 0;
};

// A length-d feature vector partitioned by a ModalityLayout. Values are
// finite and every modality block is unit l2-norm or identically zero.
struct FeatureVector {
  Eigen::VectorXd values;
  ModalityLayout layout;

  FeatureVector() = default;
  // Validates the invariants above; throws InvalidInputError.
  FeatureVector(Eigen::VectorXd v, ModalityLayout l);
};

}  // namespace mvrec
