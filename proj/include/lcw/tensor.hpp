#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lcw {

/// Dense row-major array of doubles.
///
/// Rank 0 is a scalar, rank 1 a vector and rank 2 a matrix. Matrix-style
/// accessors view a rank-0 tensor as 1x1 and a rank-1 tensor as a single row,
/// which is how the autodiff broadcasting rules treat them as well.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row(std::vector<double> values);

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return data.size() == 1; }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  double item() const;

  std::span<const double> row_span(std::size_t r) const {
    return {data.data() + r * cols(), cols()};
  }
  std::span<double> row_span(std::size_t r) { return {data.data() + r * cols(), cols()}; }

  bool all_finite() const;
};

std::string shape_string(const std::vector<std::size_t>& shape);
std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Plain (non-differentiable) matrix product; `ta`/`tb` transpose the operands.
Tensor matmul_raw(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false);
Tensor transpose(const Tensor& a);
/// Rows `indices` of a rank-2 tensor, in the given order.
Tensor take_rows(const Tensor& a, std::span<const std::size_t> indices);
/// Stacks two matrices with equal column counts vertically.
Tensor vstack(const Tensor& top, const Tensor& bottom);

}  // namespace lcw
