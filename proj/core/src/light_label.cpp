#include "ldenhancer/light_label.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <memory>
#include <mutex>

#include "eigen_views.hpp"

namespace ldenhancer {

namespace {

using MatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AxisBasis {
  MatrixXd vectors;         // columns are eigenvectors of D^T D
  Eigen::VectorXd values;   // eigenvalues, >= 0
};

AxisBasis make_basis(std::size_t n) {
  MatrixXd b = MatrixXd::Zero(n, n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t idx[3] = {i - 1, i, i + 1};
    const double coef[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) b(idx[a], idx[c]) += coef[a] * coef[c];
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(b);
  AxisBasis basis{solver.eigenvectors(), solver.eigenvalues()};
  for (Eigen::Index i = 0; i < basis.values.size(); ++i)
    if (basis.values[i] < 0) basis.values[i] = 0;  // rounding on the null space
  return basis;
}

const AxisBasis& basis_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<AxisBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<AxisBasis>(make_basis(n));
  return *slot;
}

// Interior second differences along each axis plus the mixed difference,
// weighted 2, so the penalty is the squared Frobenius norm of the discrete
// Hessian. Adds lambda * D^T D x to out.
void add_curvature_normal(const MatrixXd& x, double lambda, MatrixXd& out) {
  const Eigen::Index H = x.rows(), W = x.cols();
  for (Eigen::Index y = 0; y < H; ++y)
    for (Eigen::Index c = 1; c + 1 < W; ++c) {
      const double d = lambda * (x(y, c - 1) - 2.0 * x(y, c) + x(y, c + 1));
      out(y, c - 1) += d;
      out(y, c) -= 2.0 * d;
      out(y, c + 1) += d;
    }
  for (Eigen::Index y = 1; y + 1 < H; ++y)
    for (Eigen::Index c = 0; c < W; ++c) {
      const double d = lambda * (x(y - 1, c) - 2.0 * x(y, c) + x(y + 1, c));
      out(y - 1, c) += d;
      out(y, c) -= 2.0 * d;
      out(y + 1, c) += d;
    }
  for (Eigen::Index y = 0; y + 1 < H; ++y)
    for (Eigen::Index c = 0; c + 1 < W; ++c) {
      const double d = 2.0 * lambda * (x(y + 1, c + 1) - x(y + 1, c) - x(y, c + 1) + x(y, c));
      out(y + 1, c + 1) += d;
      out(y + 1, c) -= d;
      out(y, c + 1) -= d;
      out(y, c) += d;
    }
}

}  // namespace

template <typename T>
LightLabelPair<T> light_label(const Tensor<T>& image, double lambda_smooth) {
  if (image.rank() != 4) throw ShapeError("light_label: expected N x C x H x W, got " + to_string(image.dims()));
  if (!(lambda_smooth > 0) || !std::isfinite(lambda_smooth)) {
    throw ValueError("light_label: lambda_smooth must be positive, got " + std::to_string(lambda_smooth));
  }
  if (!image.all_finite()) throw ValueError("light_label: non-finite input");

  const std::size_t H = image.h(), W = image.w();
  const AxisBasis& rows = basis_for(H);
  const AxisBasis& cols = basis_for(W);
  MatrixXd filter(H, W);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) filter(i, j) = 1.0 / (1.0 + lambda_smooth * (rows.values[i] + cols.values[j]));

  // Preconditioner: exact inverse of the system without the mixed term.
  MatrixXd spectrum(H, W);
  auto precondition = [&](const MatrixXd& r, MatrixXd& z) {
    spectrum.noalias() = rows.vectors.transpose() * r * cols.vectors;
    spectrum.array() *= filter.array();
    z.noalias() = rows.vectors * spectrum * cols.vectors.transpose();
  };

  LightLabelPair<T> out;
  out.lambda_smooth = lambda_smooth;
  out.light = Tensor<T>(image.dims());
  out.content = Tensor<T>(image.dims());
  MatrixXd x(H, W), solved(H, W), r(H, W), z(H, W), p(H, W), ap(H, W);
  for (std::size_t b = 0; b < image.n(); ++b)
    for (std::size_t c = 0; c < image.c(); ++c) {
      const T* src = image.plane(b, c);
      for (std::size_t i = 0; i < H * W; ++i) x.data()[i] = src[i];

      // Preconditioned conjugate gradients on (I + lambda D^T D) L = I.
      precondition(x, solved);
      r = x - solved;
      add_curvature_normal(solved, -lambda_smooth, r);
      precondition(r, z);
      p = z;
      double rz = (r.array() * z.array()).sum();
      const double tol = 1e-24 * std::max(x.squaredNorm(), 1e-300);
      for (int it = 0; it < 500 && r.squaredNorm() > tol; ++it) {
        ap = p;
        add_curvature_normal(p, lambda_smooth, ap);
        const double alpha = rz / (p.array() * ap.array()).sum();
        solved += alpha * p;
        r -= alpha * ap;
        precondition(r, z);
        const double rz_next = (r.array() * z.array()).sum();
        p = z + (rz_next / rz) * p;
        rz = rz_next;
      }

      T* light = out.light.plane(b, c);
      T* content = out.content.plane(b, c);
      for (std::size_t i = 0; i < H * W; ++i) {
        const double l = solved.data()[i];
        content[i] = static_cast<T>(x.data()[i] - l);
        double clipped = l;
        if (l < 0.0) clipped = 0.0;
        if (l > 1.0) clipped = 1.0;
        if (clipped != l) ++out.clip_events;
        light[i] = static_cast<T>(clipped);
      }
    }
  return out;
}

template <typename T>
double curvature_energy(const Tensor<T>& image) {
  const std::size_t H = image.h(), W = image.w();
  double e = 0;
  for (std::size_t b = 0; b < image.n(); ++b)
    for (std::size_t c = 0; c < image.c(); ++c) {
      const T* p = image.plane(b, c);
      auto at = [&](std::size_t y, std::size_t x) { return static_cast<double>(p[y * W + x]); };
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          if (x >= 1 && x + 1 < W) {
            const double d = at(y, x - 1) - 2.0 * at(y, x) + at(y, x + 1);
            e += d * d;
          }
          if (y >= 1 && y + 1 < H) {
            const double d = at(y - 1, x) - 2.0 * at(y, x) + at(y + 1, x);
            e += d * d;
          }
          if (x + 1 < W && y + 1 < H) {
            const double d = at(y + 1, x + 1) - at(y + 1, x) - at(y, x + 1) + at(y, x);
            e += 2.0 * d * d;
          }
        }
    }
  return e;
}

template LightLabelPair<float> light_label<float>(const Tensor<float>&, double);
template LightLabelPair<double> light_label<double>(const Tensor<double>&, double);
template double curvature_energy<float>(const Tensor<float>&);
template double curvature_energy<double>(const Tensor<double>&);

}  // namespace ldenhancer
