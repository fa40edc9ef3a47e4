#include "mvhedge/nn/matrix.hpp"

namespace mvhedge::nn {

Matrix multiply(const std::vector<double>& w, std::size_t m, std::size_t k, const Matrix& x) {
    if (x.rows() != k) throw contract_error("multiply: inner dimensions do not match");
    const std::size_t n = x.cols();
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* out_row = out.row_ptr(i);
        const double* w_row = w.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double wv = w_row[p];
            const double* x_row = x.row_ptr(p);
            for (std::size_t j = 0; j < n; ++j) out_row[j] += wv * x_row[j];
        }
    }
    return out;
}

Matrix multiply_transposed(const std::vector<double>& w, std::size_t m, std::size_t k,
                           const Matrix& g) {
    if (g.rows() != m) throw contract_error("multiply_transposed: dimensions do not match");
    const std::size_t n = g.cols();
    Matrix out(k, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* g_row = g.row_ptr(i);
        const double* w_row = w.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double wv = w_row[p];
            double* out_row = out.row_ptr(p);
            for (std::size_t j = 0; j < n; ++j) out_row[j] += wv * g_row[j];
        }
    }
    return out;
}

void accumulate_outer(std::vector<double>& grad_w, const Matrix& g, const Matrix& x) {
    if (g.cols() != x.cols()) throw contract_error("accumulate_outer: batch sizes differ");
    const std::size_t m = g.rows(), k = x.rows(), n = g.cols();
    if (grad_w.size() != m * k) throw contract_error("accumulate_outer: gradient shape mismatch");
    for (std::size_t i = 0; i < m; ++i) {
        const double* g_row = g.row_ptr(i);
        double* w_row = grad_w.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* x_row = x.row_ptr(p);
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g_row[j] * x_row[j];
            w_row[p] += acc;
        }
    }
}

}  // namespace mvhedge::nn
