#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pdmp/gp_regression.hpp"

namespace pdmp::gp {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const Eigen::Index d = data.dimension();
  for (Eigen::Index j = 0; j < d; ++j) out << "x_" << j + 1 << ',';
  out << 'y';
  if (data.has_gradients()) {
    for (Eigen::Index j = 0; j < d; ++j) out << ",g_" << j + 1;
  }
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << data.input(i)[j] << ',';
    out << data.value(i);
    if (data.has_gradients()) {
      for (Eigen::Index j = 0; j < d; ++j) out << ',' << data.gradient(i)[j];
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: missing header");
  const auto header = split_csv(line);
  Eigen::Index d = 0;
  while (d < static_cast<Eigen::Index>(header.size()) && header[d] == "x_" + std::to_string(d + 1)) ++d;
  if (d == 0 || d >= static_cast<Eigen::Index>(header.size()) || header[d] != "y") {
    throw std::runtime_error("read_dataset_csv: malformed header");
  }
  const Eigen::Index extra = static_cast<Eigen::Index>(header.size()) - d - 1;
  if (extra != 0 && extra != d) throw std::runtime_error("read_dataset_csv: malformed header");
  const bool with_gradients = extra == d;

  Dataset data(d, with_gradients);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("read_dataset_csv: wrong column count on line " + std::to_string(line_no));
    }
    Vector x(d), g(with_gradients ? d : 0);
    try {
      for (Eigen::Index j = 0; j < d; ++j) x[j] = std::stod(cells[j]);
      const double y = std::stod(cells[d]);
      for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = std::stod(cells[d + 1 + j]);
      data.add(x, y, g);
    } catch (const std::logic_error& e) {
      throw std::runtime_error("read_dataset_csv: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace pdmp::gp
