#include "memmac/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "memmac/error.hpp"

namespace memmac {

DenseMatrix DenseMatrix::identity(std::size_t dim) {
    DenseMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::restrict_to(std::span<const std::size_t> index) const {
    DenseMatrix out(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
        for (std::size_t j = 0; j < index.size(); ++j) out(i, j) = (*this)(index[i], index[j]);
    return out;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

std::vector<double> solve(DenseMatrix a, std::vector<double> b) {
    const std::size_t n = a.dim();
    if (b.size() != n) throw BadParams("solve: right-hand side has wrong length");

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(a(row, col)) > std::abs(a(pivot, col))) pivot = row;
        if (!(std::abs(a(pivot, col)) >= kPivotThreshold))
            throw SingularSystem("pivot below threshold in column " + std::to_string(col));
        if (pivot != col) {
            for (std::size_t j = col; j < n; ++j) std::swap(a(col, j), a(pivot, j));
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a(row, col) / a(col, col);
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(row, j) -= factor * a(col, j);
            b[row] -= factor * b[col];
        }
    }

    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a(i, j) * x[j];
        x[i] = acc / a(i, i);
    }
    return x;
}

}  // namespace memmac
