#pragma once

#include <string>

#include "srl/linalg.hpp"

namespace srl {

/// CSV convention: one row per line, comma separated, '.' decimal, no header.
Matrix read_matrix_csv(const std::string& path);

/// A vector is a single-column (or single-row) CSV file.
Vector read_vector_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Matrix& M);
void write_vector_csv(const std::string& path, const Vector& v);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

/// Writes content to a temporary file in the target directory, then renames.
/// Interrupted runs never leave a truncated file at `path`.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace srl
