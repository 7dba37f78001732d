#include "mvrec/layout.hpp"

#include <cmath>
#include <set>

#include "mvrec/errors.hpp"

namespace mvrec {

ModalityLayout::ModalityLayout(
    const std::vector<std::pair<std::string, Eigen::Index>>& entries) {
  if (entries.empty()) throw InvalidInputError("layout: needs at least one modality");
  std::set<std::string> names;
  Eigen::Index offset = 0;
  for (const auto& [name, length] : entries) {
    if (length <= 0)
      throw InvalidInputError("layout: modality '" + name + "' has non-positive length");
    if (!names.insert(name).second)
      throw InvalidInputError("layout: duplicate modality name '" + name + "'");
    entries_.push_back({name, length, offset});
    offset += length;
  }
  dim_ = offset;
}

Eigen::VectorBlock<const Eigen::VectorXd> ModalityLayout::block(const Eigen::VectorXd& v,
                                                                std::size_t i) const {
  const Entry& e = entries_.at(i);
  return v.segment(e.offset, e.length);
}

Eigen::VectorBlock<Eigen::VectorXd> ModalityLayout::block(Eigen::VectorXd& v,
                                                          std::size_t i) const {
  const Entry& e = entries_.at(i);
  return v.segment(e.offset, e.length);
}

bool ModalityLayout::operator==(const ModalityLayout& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].length != other.entries_[i].length)
      return false;
  }
  return true;
}

FeatureVector::FeatureVector(Eigen::VectorXd v, ModalityLayout l)
    : values(std::move(v)), layout(std::move(l)) {
  if (values.size() != layout.dim())
    throw InvalidInputError("feature vector: length does not match layout dimension");
  if (!values.allFinite())
    throw InvalidInputError("feature vector: non-finite values");
  for (std::size_t i = 0; i < layout.block_count(); ++i) {
    const double norm = layout.block(values, i).norm();
    if (norm != 0.0 && std::abs(norm - 1.0) > 1e-6)
      throw InvalidInputError("feature vector: modality block '" + layout.entry(i).name +
                              "' is neither zero nor unit-norm");
  }
}

}  // namespace mvrec
