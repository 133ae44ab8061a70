#pragma once
#include "spikegen/common.hpp"
#include <iosfwd>
#include <map>
#include <string>

namespace spikegen {

// Plain CSV of numbers, one matrix row per line. A first line that does not
// parse as numbers is treated as a header and skipped.
Mat read_matrix_csv(const std::string& path);
Mat parse_matrix_csv(std::istream& in, const std::string& what = "<stream>");
void write_matrix_csv(const std::string& path, const Mat& m);
void write_matrix_csv(std::ostream& out, const Mat& m);
// A single column or a single row.
Vec read_vector_csv(const std::string& path);
void write_vector_csv(const std::string& path, const Vec& v, const std::string& header = "");

// Raw little-endian dump: "SPKM", int64 rows, int64 cols, column-major doubles.
void write_matrix_bin(const std::string& path, const Mat& m);
Mat read_matrix_bin(const std::string& path);

// Flat key=value text. '#' starts a comment, blank lines are ignored, and a
// repeated key is an error.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in, const std::string& what = "<stream>");
KeyValues read_key_values(const std::string& path);

// Shortest round-trip representation.
std::string fmt_double(double x);

} // namespace spikegen
