#include "mvrec/feature_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "mvrec/errors.hpp"
#include "mvrec/util.hpp"

namespace mvrec {

std::string feature_csv(const Eigen::VectorXd& values, const ModalityLayout& layout) {
  if (values.size() != layout.dim())
    throw InvalidInputError("feature csv: vector length does not match layout");
  std::string out = "modality,index,value\r\n";
  for (std::size_t b = 0; b < layout.block_count(); ++b) {
    const auto& e = layout.entry(b);
    for (Eigen::Index i = 0; i < e.length; ++i) {
      out += csv_field(e.name) + "," + std::to_string(i) + "," +
             format_double(values[e.offset + i]) + "\r\n";
    }
  }
  return out;
}

void write_feature_csv(const std::filesystem::path& path, const Eigen::VectorXd& values,
                       const ModalityLayout& layout) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path.string());
  out << feature_csv(values, layout);
  if (!out) throw IoError("write failed: " + path.string());
}

LoadedFeature read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read feature file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw IoError("feature file is empty: " + path.string());
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "modality,index,value")
    throw IoError("feature file missing header: " + path.string());

  std::vector<std::pair<std::string, Eigen::Index>> entries;
  std::vector<double> values;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw IoError("feature file: malformed row in " + path.string());
    const std::string name = line.substr(0, c1);
    const std::string idx_str = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string val_str = line.substr(c2 + 1);

    long idx = -1;
    auto [p1, ec1] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
    double val = 0;
    char* endp = nullptr;
    val = std::strtod(val_str.c_str(), &endp);
    if (ec1 != std::errc() || endp == val_str.c_str())
      throw IoError("feature file: unparsable row in " + path.string());

    if (entries.empty() || entries.back().first != name) {
      if (idx != 0)
        throw IoError("feature file: modality '" + name + "' does not start at index 0 in " +
                      path.string());
      entries.emplace_back(name, 0);
    } else if (idx != entries.back().second) {
      throw IoError("feature file: non-sequential index in modality '" + name + "' in " +
                    path.string());
    }
    ++entries.back().second;
    values.push_back(val);
  }
  if (entries.empty()) throw IoError("feature file has no rows: " + path.string());

  LoadedFeature out;
  out.layout = ModalityLayout(entries);
  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  if (!out.values.allFinite())
    throw InvalidInputError("feature file: non-finite values in " + path.string());
  return out;
}

}  // namespace mvrec
