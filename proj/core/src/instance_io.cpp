#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "selftrack/solver.hpp"

namespace selftrack {

namespace {

std::string next_line(std::istream& in, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return line;
  }
  throw std::runtime_error("instance: unexpected end of input after line " + std::to_string(line_no));
}

Edge parse_edge(const std::string& line, std::size_t line_no) {
  std::istringstream is(line);
  long long u = -1;
  long long v = -1;
  double cost = 0.0;
  if (!(is >> u >> v >> cost) || u < 0 || v < 0) {
    throw std::runtime_error("instance: line " + std::to_string(line_no) + ": expected \"u v cost\"");
  }
  return Edge{static_cast<NodeId>(u), static_cast<NodeId>(v), cost};
}

}  // namespace

MulticutInstance read_instance(std::istream& in) {
  std::size_t line_no = 0;
  std::istringstream header(next_line(in, line_no));
  long long n = -1;
  long long m = -1;
  long long k = -1;
  if (!(header >> n >> m >> k) || n < 0 || m < 0 || k < 0) {
    throw std::runtime_error("instance: line " + std::to_string(line_no) + ": expected header \"n m k\"");
  }
  std::vector<Edge> edges;
  std::vector<Edge> lifted;
  edges.reserve(static_cast<std::size_t>(m));
  lifted.reserve(static_cast<std::size_t>(k));
  for (long long i = 0; i < m; ++i) {
    const std::string line = next_line(in, line_no);
    edges.push_back(parse_edge(line, line_no));
  }
  for (long long i = 0; i < k; ++i) {
    const std::string line = next_line(in, line_no);
    lifted.push_back(parse_edge(line, line_no));
  }
  try {
    return MulticutInstance(static_cast<std::size_t>(n), std::move(edges), std::move(lifted));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("instance: ") + e.what());
  }
}

MulticutInstance read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
  return read_instance(in);
}

void write_instance(std::ostream& out, const MulticutInstance& instance) {
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << instance.num_nodes() << ' ' << instance.num_edges() << ' ' << instance.num_lifted_edges() << '\n';
  for (const auto& e : instance.edges()) out << e.u << ' ' << e.v << ' ' << e.cost << '\n';
  for (const auto& e : instance.lifted_edges()) out << e.u << ' ' << e.v << ' ' << e.cost << '\n';
  out.precision(precision);
}

}  // namespace selftrack
