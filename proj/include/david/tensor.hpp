#pragma once
// Dense row-major double matrix. Two dimensions cover everything here;
// sequences are rows, features are columns.

#include <vector>

#include "david/common.hpp"

namespace david {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
    require(r >= 0 && c >= 0, Errc::shape_mismatch, "negative matrix shape");
  }
  static Mat full(int r, int c, double v) {
    Mat m(r, c);
    std::fill(m.a.begin(), m.a.end(), v);
    return m;
  }
  static Mat row3(double x, double y, double z) {
    Mat m(1, 3);
    m.a = {x, y, z};
    return m;
  }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

Mat matmul(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b
Mat transpose(const Mat& a);
void axpy(Mat& y, double alpha, const Mat& x);  // y += alpha * x

}  // namespace david
