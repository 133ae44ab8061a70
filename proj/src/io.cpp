#include "spikegen/io.hpp"
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace spikegen {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_num(const std::string& tok, double& out) {
    const std::string t = trim(tok);
    if (t.empty()) return false;
    // from_chars rejects a leading '+', and nan/inf spellings are accepted
    const char* b = t.data() + (t[0] == '+' ? 1 : 0);
    const auto r = std::from_chars(b, t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

bool parse_row(const std::string& line, std::vector<double>& row) {
    row.clear();
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        double x;
        if (!parse_num(tok, x)) return false;
        row.push_back(x);
    }
    return !row.empty();
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    require(f.good(), "cannot open " + path + " for reading");
    return f;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    require(f.good(), "cannot open " + path + " for writing");
    return f;
}

} // namespace

std::string fmt_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

Mat parse_matrix_csv(std::istream& in, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::vector<double> row;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (!parse_row(line, row)) {
            require(rows.empty() && lineno == 1, what + ":" + std::to_string(lineno) + ": not a numeric row");
            continue; // header
        }
        require(rows.empty() || row.size() == rows[0].size(),
                what + ":" + std::to_string(lineno) + ": expected " + std::to_string(rows.empty() ? 0 : rows[0].size()) +
                    " columns, found " + std::to_string(row.size()));
        rows.push_back(row);
    }
    require(!rows.empty(), what + ": no data rows");
    Mat m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

Mat read_matrix_csv(const std::string& path) {
    auto f = open_in(path);
    return parse_matrix_csv(f, path);
}

void write_matrix_csv(std::ostream& out, const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << fmt_double(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const Mat& m) {
    auto f = open_out(path);
    write_matrix_csv(f, m);
    require(f.good(), "write failed: " + path);
}

Vec read_vector_csv(const std::string& path) {
    const Mat m = read_matrix_csv(path);
    require(m.rows() == 1 || m.cols() == 1, path + ": expected a single row or column");
    return m.cols() == 1 ? Vec(m.col(0)) : Vec(m.row(0).transpose());
}

void write_vector_csv(const std::string& path, const Vec& v, const std::string& header) {
    auto f = open_out(path);
    if (!header.empty()) f << header << '\n';
    write_matrix_csv(f, v);
    require(f.good(), "write failed: " + path);
}

void write_matrix_bin(const std::string& path, const Mat& m) {
    auto f = open_out(path, true);
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    f.write("SPKM", 4);
    f.write(reinterpret_cast<const char*>(dims), sizeof dims);
    f.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    require(f.good(), "write failed: " + path);
}

Mat read_matrix_bin(const std::string& path) {
    auto f = open_in(path, true);
    char magic[4];
    std::int64_t dims[2];
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(dims), sizeof dims);
    require(f.good() && std::memcmp(magic, "SPKM", 4) == 0, path + ": not a matrix file");
    require(dims[0] >= 0 && dims[1] >= 0 && dims[0] * dims[1] < (std::int64_t(1) << 33), path + ": bad dimensions");
    Mat m(dims[0], dims[1]);
    f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    require(f.gcount() == static_cast<std::streamsize>(sizeof(double) * m.size()), path + ": truncated");
    return m;
}

KeyValues parse_key_values(std::istream& in, const std::string& what) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = what + ":" + std::to_string(lineno);
        require(eq != std::string::npos, where + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), where + ": empty key");
        require(!kv.count(key), where + ": duplicate key '" + key + "'");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues read_key_values(const std::string& path) {
    auto f = open_in(path);
    return parse_key_values(f, path);
}

} // namespace spikegen
