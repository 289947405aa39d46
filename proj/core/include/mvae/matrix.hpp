#ifndef MVAE_MATRIX_HPP
#define MVAE_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace mvae {

// Dense row-major matrix of doubles. Row vectors are 1 x n matrices, so
// biases, quantile grids and single samples all share this one type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double value);
    bool all_finite() const;
    std::string shape_str() const;  // "3x4"

    Matrix row(std::size_t i) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A B. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A B^T without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// C = A^T B without materializing the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void add_in_place(Matrix& a, const Matrix& b);

// Adds the 1 x n row vector to every row of a.
Matrix add_row_broadcast(const Matrix& a, const Matrix& row);
// 1 x n vector of column sums.
Matrix col_sums(const Matrix& a);
// Stacks b to the right of a; row counts must match.
Matrix hconcat(const Matrix& a, const Matrix& b);
// Copies columns [begin, begin + width) of a.
Matrix slice_cols(const Matrix& a, std::size_t begin, std::size_t width);
// Copies the given rows of a in the given order.
Matrix gather_rows(const Matrix& a, const std::vector<std::size_t>& rows);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace mvae

#endif
