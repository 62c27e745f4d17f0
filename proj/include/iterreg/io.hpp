#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iterreg/datagen.hpp"
#include "iterreg/diagnostics.hpp"
#include "iterreg/pdsolver.hpp"

namespace iterreg::io {

/// CSV with a "rows,cols" header line followed by the rows.
void write_matrix_csv(std::ostream& os, const Matrix& M);
Matrix read_matrix_csv(std::istream& is);
void write_matrix_csv(const std::filesystem::path& p, const Matrix& M);
Matrix read_matrix_csv(const std::filesystem::path& p);

/// Vectors are stored as n x 1 matrices.
void write_vector_csv(const std::filesystem::path& p, ConstSpan v);
Vector read_vector_csv(const std::filesystem::path& p);

/// "i,j" pairs, one per line, after an "i,j" header.
void write_index_pairs_csv(const std::filesystem::path& p, const std::vector<std::pair<std::size_t, std::size_t>>& ix);
std::vector<std::pair<std::size_t, std::size_t>> read_index_pairs_csv(const std::filesystem::path& p);

/// Instance directory: design.csv, btrue.csv, bdelta.csv, xtrue.csv, meta.json.
void write_instance(const std::filesystem::path& dir, const SparseInstance& inst, const nlohmann::json& meta);
/// Completion instance: btrue.csv, bdelta.csv (as d x d matrices), mask.csv, meta.json.
void write_completion(const std::filesystem::path& dir, const CompletionInstance& ci, const nlohmann::json& meta);

struct LoadedInstance {
  Matrix A;
  Vector b_star, b_delta, x_true;
  nlohmann::json meta;
};
LoadedInstance read_instance(const std::filesystem::path& dir);

nlohmann::json to_json(const CSConstants& c);
nlohmann::json to_json(const BoundConstants& c);
nlohmann::json to_json(const ParamConstants& c);

void write_text(const std::filesystem::path& p, const std::string& s);

}  // namespace iterreg::io
