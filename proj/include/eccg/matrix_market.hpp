#pragma once

#include <cctype>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eccg/csr.hpp"
#include "eccg/dense.hpp"
#include "eccg/errors.hpp"

// Matrix Market I/O.
//
// Coordinate reader: banner `%%MatrixMarket matrix coordinate real
// {general|symmetric}`, `%` comment lines, 1-based indices. Symmetric files
// are expanded to full storage on load (each off-diagonal entry stored
// twice) because the masked row-wise kernels need explicit access to both
// triangles. Duplicate coordinate entries are summed per the format's
// convention.
//
// Array reader/writer: dense column-major `array real general` files, used
// to persist encoding matrices, right-hand sides, and solution vectors.

namespace eccg {

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct MmBanner {
    std::string format;   // coordinate | array
    std::string field;    // real | complex | integer | pattern
    std::string symmetry; // general | symmetric | skew-symmetric | hermitian
};

inline MmBanner parse_banner(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("matrix market: empty stream");
    std::istringstream ls(line);
    std::string tag, object, format, field, symmetry;
    ls >> tag >> object >> format >> field >> symmetry;
    if (lower(tag) != "%%matrixmarket")
        throw FormatError("matrix market: malformed banner: " + line);
    if (lower(object) != "matrix")
        throw UnsupportedFormatError("matrix market: unsupported object: " + object);
    MmBanner banner{lower(format), lower(field), lower(symmetry)};
    if (banner.format != "coordinate" && banner.format != "array")
        throw FormatError("matrix market: unknown format: " + format);
    if (banner.field != "real")
        throw UnsupportedFormatError("matrix market: unsupported field: " + field);
    if (banner.symmetry != "general" && banner.symmetry != "symmetric")
        throw UnsupportedFormatError("matrix market: unsupported symmetry: " + symmetry);
    return banner;
}

/// Next content line (skips comments and blanks); false at end of stream.
inline bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        std::size_t pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '%') continue;
        return true;
    }
    return false;
}

} // namespace detail

/// Parses a coordinate-format Matrix Market stream into CSR storage.
inline CsrMatrix parse_matrix_market(std::istream& in) {
    const detail::MmBanner banner = detail::parse_banner(in);
    if (banner.format != "coordinate")
        throw UnsupportedFormatError("matrix market: expected coordinate format");

    std::string line;
    if (!detail::next_content_line(in, line))
        throw FormatError("matrix market: missing size line");
    std::istringstream size_line(line);
    long long rows = 0, cols = 0, declared_nnz = 0;
    if (!(size_line >> rows >> cols >> declared_nnz) || rows < 0 || cols < 0 || declared_nnz < 0)
        throw FormatError("matrix market: malformed size line: " + line);
    const bool symmetric = banner.symmetry == "symmetric";
    if (symmetric && rows != cols)
        throw FormatError("matrix market: symmetric matrix must be square");

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(symmetric ? 2 * declared_nnz : declared_nnz));
    for (long long e = 0; e < declared_nnz; ++e) {
        if (!detail::next_content_line(in, line))
            throw FormatError("matrix market: truncated entry list");
        std::istringstream entry(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(entry >> i >> j >> v))
            throw FormatError("matrix market: malformed entry: " + line);
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw BoundsError("matrix market: index out of declared bounds: " + line);
        const std::size_t r = static_cast<std::size_t>(i - 1);
        const std::size_t c = static_cast<std::size_t>(j - 1);
        entries.push_back({r, c, v});
        if (symmetric && r != c) entries.push_back({c, r, v});
    }
    return CsrMatrix::from_triplets(static_cast<std::size_t>(rows),
                                    static_cast<std::size_t>(cols), std::move(entries));
}

/// Reads a dense `array real general` Matrix Market stream (column-major).
inline DenseMatrix read_matrix_market_array(std::istream& in) {
    const detail::MmBanner banner = detail::parse_banner(in);
    if (banner.format != "array")
        throw UnsupportedFormatError("matrix market: expected array format");
    if (banner.symmetry != "general")
        throw UnsupportedFormatError("matrix market: array reader handles general only");

    std::string line;
    if (!detail::next_content_line(in, line))
        throw FormatError("matrix market: missing size line");
    std::istringstream size_line(line);
    long long rows = 0, cols = 0;
    if (!(size_line >> rows >> cols) || rows < 0 || cols < 0)
        throw FormatError("matrix market: malformed size line: " + line);

    DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (long long j = 0; j < cols; ++j) {
        for (long long i = 0; i < rows; ++i) {
            if (!detail::next_content_line(in, line))
                throw FormatError("matrix market: truncated array body");
            std::istringstream entry(line);
            double v = 0.0;
            if (!(entry >> v))
                throw FormatError("matrix market: malformed array value: " + line);
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
        }
    }
    return m;
}

/// Writes a dense matrix as `array real general`, column-major.
inline void write_matrix_market_array(std::ostream& out, const DenseMatrix& m) {
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << " " << m.cols() << "\n";
    char buf[32];
    for (std::size_t j = 0; j < m.cols(); ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << "\n";
        }
    }
}

/// Writes a vector as an n-by-1 array file.
inline void write_matrix_market_vector(std::ostream& out, std::span<const double> v) {
    DenseMatrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    write_matrix_market_array(out, m);
}

/// Reads an n-by-1 array file back into a vector.
inline std::vector<double> read_matrix_market_vector(std::istream& in) {
    const DenseMatrix m = read_matrix_market_array(in);
    if (m.cols() != 1)
        throw FormatError("matrix market: expected a single-column array");
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
    return v;
}

} // namespace eccg
