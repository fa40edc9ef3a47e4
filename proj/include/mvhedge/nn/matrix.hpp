#pragma once

#include <cstddef>
#include <vector>

#include "mvhedge/errors.hpp"

namespace mvhedge::nn {

/// Dense row-major matrix of doubles. Activations flow through the network
/// as (features x batch) matrices, so a column is one sample.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = W * x where W is (m x k) stored flat and x is (k x n).
Matrix multiply(const std::vector<double>& w, std::size_t m, std::size_t k, const Matrix& x);

/// out = W^T * g where W is (m x k) stored flat and g is (m x n).
Matrix multiply_transposed(const std::vector<double>& w, std::size_t m, std::size_t k,
                           const Matrix& g);

/// grad_w += g * x^T accumulated flat into (m x k), g is (m x n), x is (k x n).
void accumulate_outer(std::vector<double>& grad_w, const Matrix& g, const Matrix& x);

}  // namespace mvhedge::nn
