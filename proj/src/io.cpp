#include "ucov/io.hpp"

#include "ucov/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace ucov::io {

namespace {

std::vector<double> parse_row(const std::string& line, const std::filesystem::path& path, int lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    if (first == std::string::npos) {
      throw InvalidConfig(path.string() + ":" + std::to_string(lineno) + ": empty cell");
    }
    const std::string trimmed = cell.substr(first, last - first + 1);
    char* end = nullptr;
    const double v = std::strtod(trimmed.c_str(), &end);
    if (end != trimmed.c_str() + trimmed.size()) {
      throw InvalidConfig(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + trimmed + "'");
    }
    row.push_back(v);
  }
  return row;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    rows.push_back(parse_row(line, path, lineno));
    if (rows.back().size() != rows.front().size()) {
      throw DimensionError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
  }
  if (rows.empty()) throw EmptyInput("'" + path.string() + "' contains no rows");
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
  const auto& rows = sample.rows();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_double(rows(i, j));
    out << '\n';
  }
}

Sample read_sample_csv(const std::filesystem::path& path, NormKind norm) {
  const auto rows = read_rows(path);
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return Sample(SpaceDescriptor(static_cast<int>(d), norm), std::move(m));
}

Element read_element_csv(const std::filesystem::path& path, const SpaceDescriptor& space) {
  const auto rows = read_rows(path);
  if (rows.size() != 1) throw InvalidConfig("'" + path.string() + "' must contain exactly one row");
  return Element(space, Eigen::Map<const Eigen::VectorXd>(rows[0].data(),
                                                          static_cast<Eigen::Index>(rows[0].size())));
}

void write_tensor_csv(std::ostream& out, const TensorRep& t) {
  const auto& g = t.grid();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) out << (j ? "," : "") << format_double(g(i, j));
    out << '\n';
  }
}

nlohmann::json to_json(const SpaceDescriptor& space) {
  return {{"dim", space.dim}, {"norm_kind", std::string(to_string(space.norm_kind))}};
}

SpaceDescriptor space_from_json(const nlohmann::json& j) {
  try {
    return SpaceDescriptor(j.at("dim").get<int>(), parse_norm_kind(j.at("norm_kind").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad space descriptor: ") + e.what());
  }
}

nlohmann::json to_json(const TensorRep& t) {
  nlohmann::json grid = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.grid().rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < t.grid().cols(); ++j) row.push_back(t.grid()(i, j));
    grid.push_back(std::move(row));
  }
  return {{"space", to_json(t.space())}, {"grid", std::move(grid)}};
}

nlohmann::json to_json(const NormResult& r) {
  return {{"value", r.value}, {"method", std::string(to_string(r.method))}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace ucov::io
