#pragma once

#include <Eigen/Dense>
#include <string>

#include "alsent/error.hpp"

namespace alsent::nn {

// Dense row-major matrix. Batches are laid out one sample per row.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Tensor2D = Matrix<double>;
// Extended precision, used only to evaluate losses for finite-difference checks.
using ExtendedTensor = Matrix<long double>;

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("ShapeError", what) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error("IndexError", what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("NumericalError", what) {}
};

class DegenerateBatch : public Error {
 public:
  explicit DegenerateBatch(const std::string& what) : Error("DegenerateBatch", what) {}
};

inline std::string shape_string(const Tensor2D& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

inline void require_shape(const Tensor2D& t, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + shape_string(t));
  }
}

inline bool all_finite(const Tensor2D& t) { return t.allFinite(); }

// A learned tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor2D value;
  Tensor2D grad;

  Parameter() = default;
  Parameter(std::string n, Tensor2D v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor2D::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

}  // namespace alsent::nn
