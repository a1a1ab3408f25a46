#pragma once

#include <Eigen/Core>

namespace ldenhancer::detail {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using MatrixView = Eigen::Map<Matrix<T>, 0, Eigen::OuterStride<>>;

template <typename T>
using ConstMatrixView = Eigen::Map<const Matrix<T>, 0, Eigen::OuterStride<>>;

template <typename T>
MatrixView<T> view(T* data, Eigen::Index rows, Eigen::Index cols, Eigen::Index stride) {
  return MatrixView<T>(data, rows, cols, Eigen::OuterStride<>(stride));
}

template <typename T>
MatrixView<T> view(T* data, Eigen::Index rows, Eigen::Index cols) {
  return view(data, rows, cols, cols);
}

template <typename T>
ConstMatrixView<T> cview(const T* data, Eigen::Index rows, Eigen::Index cols, Eigen::Index stride) {
  return ConstMatrixView<T>(data, rows, cols, Eigen::OuterStride<>(stride));
}

template <typename T>
ConstMatrixView<T> cview(const T* data, Eigen::Index rows, Eigen::Index cols) {
  return cview(data, rows, cols, cols);
}

}  // namespace ldenhancer::detail
