#include "iterreg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "iterreg/errors.hpp"

namespace iterreg::io {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + p.string() + "'");
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ParseError("cannot open '" + p.string() + "'");
  return is;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    throw ParseError("non-numeric cell '" + s + "'", line);
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
  if (pos != s.size()) throw ParseError("non-numeric cell '" + s + "'", line);
  return v;
}

std::size_t to_index(const std::string& s, std::size_t line) {
  const double v = to_double(s, line);
  if (v < 0.0 || v != std::floor(v)) throw ParseError("expected a nonnegative integer, got '" + s + "'", line);
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Matrix& M) {
  os << M.rows() << ',' << M.cols() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < M.rows(); ++i) {
    for (std::size_t j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      if (j) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

Matrix read_matrix_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty matrix file", 1);
  const auto head = split(line);
  if (head.size() != 2) throw ParseError("header must be 'rows,cols'", 1);
  const std::size_t rows = to_index(head[0], 1), cols = to_index(head[1], 1);
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw ParseError("missing row", i + 2);
    const auto cells = split(line);
    if (cells.size() != cols) throw ParseError("expected " + std::to_string(cols) + " cells", i + 2);
    for (std::size_t j = 0; j < cols; ++j) M(i, j) = to_double(cells[j], i + 2);
  }
  return M;
}

void write_matrix_csv(const fs::path& p, const Matrix& M) {
  auto os = open_out(p);
  write_matrix_csv(os, M);
}

Matrix read_matrix_csv(const fs::path& p) {
  auto is = open_in(p);
  return read_matrix_csv(is);
}

void write_vector_csv(const fs::path& p, ConstSpan v) {
  write_matrix_csv(p, Matrix(v.size(), 1, Vector(v.begin(), v.end())));
}

Vector read_vector_csv(const fs::path& p) {
  Matrix M = read_matrix_csv(p);
  if (M.cols() != 1) throw ParseError("expected a single column in '" + p.string() + "'");
  return M.values();
}

void write_index_pairs_csv(const fs::path& p, const std::vector<std::pair<std::size_t, std::size_t>>& ix) {
  auto os = open_out(p);
  os << "i,j\n";
  for (auto [i, j] : ix) os << i << ',' << j << '\n';
}

std::vector<std::pair<std::size_t, std::size_t>> read_index_pairs_csv(const fs::path& p) {
  auto is = open_in(p);
  std::string line;
  std::getline(is, line);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 2) throw ParseError("expected 'i,j'", ln);
    out.emplace_back(to_index(c[0], ln), to_index(c[1], ln));
  }
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  auto os = open_out(p);
  os << s;
}

void write_instance(const fs::path& dir, const SparseInstance& inst, const nlohmann::json& meta) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "design.csv", inst.A);
  write_vector_csv(dir / "btrue.csv", inst.b_star);
  write_vector_csv(dir / "bdelta.csv", inst.b_delta);
  write_vector_csv(dir / "xtrue.csv", inst.x_bar);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_completion(const fs::path& dir, const CompletionInstance& ci, const nlohmann::json& meta) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "btrue.csv", ci.B_star);
  write_matrix_csv(dir / "bdelta.csv", ci.B_delta);
  write_index_pairs_csv(dir / "mask.csv", ci.observed);
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

LoadedInstance read_instance(const fs::path& dir) {
  LoadedInstance li;
  li.A = read_matrix_csv(dir / "design.csv");
  li.b_star = read_vector_csv(dir / "btrue.csv");
  li.b_delta = read_vector_csv(dir / "bdelta.csv");
  li.x_true = read_vector_csv(dir / "xtrue.csv");
  auto is = open_in(dir / "meta.json");
  try {
    li.meta = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("meta.json: ") + e.what());
  }
  if (li.b_delta.size() != li.A.rows() || li.x_true.size() != li.A.cols())
    throw ParseError("instance files have inconsistent dimensions");
  return li;
}

nlohmann::json to_json(const CSConstants& c) {
  return {{"s", c.s},         {"theta_s", c.theta_s}, {"theta_ss", c.theta_ss}, {"theta_s2s", c.theta_s2s},
          {"W_s", c.W},       {"M_s", c.M},           {"Q_s", c.Q},             {"exact", c.exact},
          {"valid", c.valid()}};
}

nlohmann::json to_json(const BoundConstants& c) {
  nlohmann::json j;
  for (std::size_t i = 0; i < c.C.size(); ++i)
    if (i <= 4 || c.has_feasibility) j["C" + std::to_string(i)] = c.C[i];
  j["V0"] = c.V0;
  return j;
}

nlohmann::json to_json(const ParamConstants& c) { return {{"omega", c.omega}, {"theta", c.theta}, {"rho", c.rho}}; }

}  // namespace iterreg::io
