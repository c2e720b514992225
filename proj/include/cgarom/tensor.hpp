#pragma once

#include <cstddef>
#include <vector>

namespace cgarom {

// Dense row-major matrix of doubles. Everything is 2-D: scalars are 1x1,
// vectors 1xN or Nx1. All numerics run in double precision.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols); }

    static Tensor full(std::size_t rows, std::size_t cols, double v) {
        Tensor t(rows, cols);
        t.fill(v);
        return t;
    }

    static Tensor scalar(double v) { return full(1, 1, v); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v) {
        for (double& x : data_) x = v;
    }

    // Value of a 1x1 tensor; throws DimensionError otherwise.
    double item() const;

    bool all_finite() const;

    // Throws NumericalError naming `what` if any entry is NaN or Inf.
    void require_finite(const char* what) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

} // namespace cgarom
