#include "david/tensor.hpp"

#include <cmath>

namespace david {

bool Mat::all_finite() const {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, Errc::shape_mismatch, "matmul shapes");
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.a[static_cast<size_t>(i) * a.cols];
    double* ci = &c.a[static_cast<size_t>(i) * c.cols];
    for (int k = 0; k < a.cols; ++k) {
      double v = ai[k];
      if (v == 0.0) continue;
      const double* bk = &b.a[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bk[j];
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  require(a.cols == b.cols, Errc::shape_mismatch, "matmul_nt shapes");
  Mat c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.a[static_cast<size_t>(i) * a.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = &b.a[static_cast<size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  require(a.rows == b.rows, Errc::shape_mismatch, "matmul_tn shapes");
  Mat c(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* ak = &a.a[static_cast<size_t>(k) * a.cols];
    const double* bk = &b.a[static_cast<size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      double v = ak[i];
      if (v == 0.0) continue;
      double* ci = &c.a[static_cast<size_t>(i) * c.cols];
      for (int j = 0; j < b.cols; ++j) ci[j] += v * bk[j];
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

void axpy(Mat& y, double alpha, const Mat& x) {
  require(y.same_shape(x), Errc::shape_mismatch, "axpy shapes");
  for (size_t i = 0; i < y.a.size(); ++i) y.a[i] += alpha * x.a[i];
}

}  // namespace david
