#pragma once

// Matrix Market (array and coordinate, real general/symmetric) and plain-text vectors.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "randnla/linalg.hpp"

namespace randnla::bench {

inline Matrix read_matrix_market(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("matrix market: empty input");
    std::string lower = line;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::istringstream hdr(lower);
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix") throw std::runtime_error("matrix market: bad header");
    if (field != "real" && field != "integer" && field != "double")
        throw std::runtime_error("matrix market: only real fields are supported");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general") throw std::runtime_error("matrix market: unsupported symmetry " + symmetry);
    while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
    }
    std::istringstream size_line(line);
    Index m = 0, n = 0, nnz = 0;
    if (format == "array") {
        if (!(size_line >> m >> n)) throw std::runtime_error("matrix market: bad size line");
        Matrix A = Matrix::Zero(m, n);
        for (Index j = 0; j < n; ++j)
            for (Index i = symmetric ? j : 0; i < m; ++i) {
                double v;
                if (!(in >> v)) throw std::runtime_error("matrix market: truncated array data");
                A(i, j) = v;
                if (symmetric) A(j, i) = v;
            }
        return A;
    }
    if (format != "coordinate") throw std::runtime_error("matrix market: unknown format " + format);
    if (!(size_line >> m >> n >> nnz)) throw std::runtime_error("matrix market: bad size line");
    Matrix A = Matrix::Zero(m, n);
    for (Index t = 0; t < nnz; ++t) {
        Index i, j;
        double v;
        if (!(in >> i >> j >> v)) throw std::runtime_error("matrix market: truncated coordinate data");
        if (i < 1 || i > m || j < 1 || j > n) throw std::runtime_error("matrix market: index out of range");
        A(i - 1, j - 1) += v;
        if (symmetric && i != j) A(j - 1, i - 1) += v;
    }
    return A;
}

inline Matrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_matrix_market(in);
}

inline void write_matrix_market(std::ostream& os, const Matrix& A) {
    os << "%%MatrixMarket matrix array real general\n" << A.rows() << ' ' << A.cols() << '\n';
    os << std::setprecision(17);
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i) os << A(i, j) << '\n';
}

inline void write_matrix_market(const std::string& path, const Matrix& A) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_matrix_market(os, A);
}

/// Whitespace-separated reals.
inline Vector read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> v;
    double x;
    while (in >> x) v.push_back(x);
    if (!in.eof()) throw std::runtime_error("non-numeric entry in " + path);
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline void write_vector(std::ostream& os, const Vector& v) {
    os << std::setprecision(17);
    for (Index i = 0; i < v.size(); ++i) os << v(i) << '\n';
}

}  // namespace randnla::bench
