#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace memmac {

/// Square dense matrix, row-major.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t dim, double fill = 0.0) : dim_(dim), data_(dim * dim, fill) {}

    static DenseMatrix identity(std::size_t dim);

    std::size_t dim() const { return dim_; }
    double& operator()(std::size_t row, std::size_t col) { return data_[row * dim_ + col]; }
    double operator()(std::size_t row, std::size_t col) const { return data_[row * dim_ + col]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    /// Sub-matrix on the given index set, in the order given.
    DenseMatrix restrict_to(std::span<const std::size_t> index) const;

    DenseMatrix transposed() const;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline constexpr double kPivotThreshold = 1e-12;

/// Solves a x = b by Gaussian elimination with partial pivoting.
/// Throws SingularSystem when the largest available pivot falls below kPivotThreshold.
std::vector<double> solve(DenseMatrix a, std::vector<double> b);

}  // namespace memmac
