#include "lcw/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "lcw/error.hpp"

namespace lcw {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

}  // namespace

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shp, std::vector<double> values)
    : shape(std::move(shp)), data(std::move(values)) {
  if (shape.size() > 2) throw ShapeError("tensor rank above 2 is not supported");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_string(shape));
  }
  if (data.size() != shape_product(shape)) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::zeros(std::vector<std::size_t> shp) { return full(std::move(shp), 0.0); }

Tensor Tensor::full(std::vector<std::size_t> shp, double v) {
  auto n = shape_product(shp);
  return Tensor(std::move(shp), std::vector<double>(n, v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  auto n = values.size();
  return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const { return shape.size() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
  if (shape.size() == 2) return shape[1];
  if (shape.size() == 1) return shape[0];
  return 1;
}

double Tensor::item() const {
  if (data.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matmul_raw(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  std::size_t ar = ta ? a.cols() : a.rows();
  std::size_t ac = ta ? a.rows() : a.cols();
  std::size_t br = tb ? b.cols() : b.rows();
  std::size_t bc = tb ? b.rows() : b.cols();
  if (ac != br) {
    throw ShapeError("matmul inner dimensions differ: " + shape_string(a.shape) +
                     (ta ? "^T" : "") + " x " + shape_string(b.shape) + (tb ? "^T" : ""));
  }
  Tensor out = Tensor::zeros({ar, bc});
  ConstMap am(a.data.data(), a.rows(), a.cols());
  ConstMap bm(b.data.data(), b.rows(), b.cols());
  MutMap om(out.data.data(), ar, bc);
  if (ta && tb) {
    om.noalias() = am.transpose() * bm.transpose();
  } else if (ta) {
    om.noalias() = am.transpose() * bm;
  } else if (tb) {
    om.noalias() = am * bm.transpose();
  } else {
    om.noalias() = am * bm;
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out = Tensor::zeros({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Tensor take_rows(const Tensor& a, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("take_rows with no indices");
  const std::size_t c = a.cols();
  std::vector<double> values;
  values.reserve(indices.size() * c);
  for (auto i : indices) {
    if (i >= a.rows()) throw ShapeError("take_rows index out of range");
    auto r = a.row_span(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor::matrix(indices.size(), c, std::move(values));
}

Tensor vstack(const Tensor& top, const Tensor& bottom) {
  if (top.cols() != bottom.cols()) {
    throw ShapeError("vstack column mismatch: " + shape_string(top.shape) + " vs " +
                     shape_string(bottom.shape));
  }
  std::vector<double> values = top.data;
  values.insert(values.end(), bottom.data.begin(), bottom.data.end());
  return Tensor::matrix(top.rows() + bottom.rows(), top.cols(), std::move(values));
}

}  // namespace lcw
