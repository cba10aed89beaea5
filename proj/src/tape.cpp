#include "david/tape.hpp"

#include <cmath>

namespace david {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

NodeId Tape::push(Mat v, std::function<void(Tape&, Node&)> back) {
  Node n;
  n.v = std::move(v);
  n.g = Mat(n.v.rows, n.v.cols);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(Mat v) { return push(std::move(v), nullptr); }

NodeId Tape::param(const std::string& name) {
  require(ps_ != nullptr, Errc::invalid_argument, "tape has no parameter store");
  int pidx = ps_->idx(name);
  NodeId id = push(ps_->entry(pidx).value, nullptr);
  nodes_.back().pidx = pidx;
  return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
  require(val(a).same_shape(val(b)), Errc::shape_mismatch, "add shapes");
  Mat v = val(a);
  axpy(v, 1.0, val(b));
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    axpy(t.gref(a), 1.0, self.g);
    axpy(t.gref(b), 1.0, self.g);
  });
}

NodeId Tape::sub(NodeId a, NodeId b) {
  require(val(a).same_shape(val(b)), Errc::shape_mismatch, "sub shapes");
  Mat v = val(a);
  axpy(v, -1.0, val(b));
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    axpy(t.gref(a), 1.0, self.g);
    axpy(t.gref(b), -1.0, self.g);
  });
}

NodeId Tape::mul_elem(NodeId a, NodeId b) {
  require(val(a).same_shape(val(b)), Errc::shape_mismatch, "mul_elem shapes");
  Mat v = val(a);
  for (size_t i = 0; i < v.a.size(); ++i) v.a[i] *= val(b).a[i];
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    const Mat& va = t.val(a);
    const Mat& vb = t.val(b);
    Mat& ga = t.gref(a);
    Mat& gb = t.gref(b);
    for (size_t i = 0; i < self.g.a.size(); ++i) {
      ga.a[i] += self.g.a[i] * vb.a[i];
      gb.a[i] += self.g.a[i] * va.a[i];
    }
  });
}

NodeId Tape::scale(NodeId a, double c) {
  Mat v = val(a);
  for (double& x : v.a) x *= c;
  return push(std::move(v),
              [a, c](Tape& t, Node& self) { axpy(t.gref(a), c, self.g); });
}

NodeId Tape::add_row_broadcast(NodeId a, NodeId row) {
  require(val(row).rows == 1 && val(row).cols == val(a).cols, Errc::shape_mismatch,
          "row broadcast shapes");
  Mat v = val(a);
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) v(i, j) += val(row)(0, j);
  return push(std::move(v), [a, row](Tape& t, Node& self) {
    axpy(t.gref(a), 1.0, self.g);
    Mat& gr = t.gref(row);
    for (int i = 0; i < self.g.rows; ++i)
      for (int j = 0; j < self.g.cols; ++j) gr(0, j) += self.g(i, j);
  });
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  Mat v = david::matmul(val(a), val(b));
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    axpy(t.gref(a), 1.0, david::matmul_nt(self.g, t.val(b)));
    axpy(t.gref(b), 1.0, david::matmul_tn(t.val(a), self.g));
  });
}

NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  Mat v = david::matmul_nt(val(a), val(b));
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    axpy(t.gref(a), 1.0, david::matmul(self.g, t.val(b)));
    axpy(t.gref(b), 1.0, david::matmul_tn(self.g, t.val(a)));
  });
}

NodeId Tape::rows_gather(NodeId table, std::vector<int> idx) {
  const Mat& tab = val(table);
  Mat v(static_cast<int>(idx.size()), tab.cols);
  for (size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < tab.rows, Errc::index_out_of_range, "rows_gather index");
    for (int j = 0; j < tab.cols; ++j) v(static_cast<int>(i), j) = tab(idx[i], j);
  }
  return push(std::move(v), [table, idx = std::move(idx)](Tape& t, Node& self) {
    Mat& gt = t.gref(table);
    for (size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < self.g.cols; ++j) gt(idx[i], j) += self.g(static_cast<int>(i), j);
  });
}

NodeId Tape::concat_rows(NodeId a, NodeId b) {
  require(val(a).cols == val(b).cols, Errc::shape_mismatch, "concat_rows cols");
  Mat v(val(a).rows + val(b).rows, val(a).cols);
  std::copy(val(a).a.begin(), val(a).a.end(), v.a.begin());
  std::copy(val(b).a.begin(), val(b).a.end(), v.a.begin() + val(a).a.size());
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    Mat& gb = t.gref(b);
    for (size_t i = 0; i < ga.a.size(); ++i) ga.a[i] += self.g.a[i];
    for (size_t i = 0; i < gb.a.size(); ++i) gb.a[i] += self.g.a[ga.a.size() + i];
  });
}

NodeId Tape::slice_rows(NodeId a, int r0, int r1) {
  require(0 <= r0 && r0 <= r1 && r1 <= val(a).rows, Errc::index_out_of_range, "slice_rows");
  int cols = val(a).cols;
  Mat v(r1 - r0, cols);
  std::copy(val(a).a.begin() + static_cast<size_t>(r0) * cols,
            val(a).a.begin() + static_cast<size_t>(r1) * cols, v.a.begin());
  return push(std::move(v), [a, r0](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    size_t off = static_cast<size_t>(r0) * ga.cols;
    for (size_t i = 0; i < self.g.a.size(); ++i) ga.a[off + i] += self.g.a[i];
  });
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
  require(val(a).rows == val(b).rows, Errc::shape_mismatch, "concat_cols rows");
  Mat v(val(a).rows, val(a).cols + val(b).cols);
  for (int i = 0; i < v.rows; ++i) {
    for (int j = 0; j < val(a).cols; ++j) v(i, j) = val(a)(i, j);
    for (int j = 0; j < val(b).cols; ++j) v(i, val(a).cols + j) = val(b)(i, j);
  }
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    Mat& gb = t.gref(b);
    for (int i = 0; i < self.g.rows; ++i) {
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += self.g(i, j);
      for (int j = 0; j < gb.cols; ++j) gb(i, j) += self.g(i, ga.cols + j);
    }
  });
}

NodeId Tape::slice_cols(NodeId a, int c0, int c1) {
  require(0 <= c0 && c0 <= c1 && c1 <= val(a).cols, Errc::index_out_of_range, "slice_cols");
  Mat v(val(a).rows, c1 - c0);
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) v(i, j) = val(a)(i, c0 + j);
  return push(std::move(v), [a, c0](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (int i = 0; i < self.g.rows; ++i)
      for (int j = 0; j < self.g.cols; ++j) ga(i, c0 + j) += self.g(i, j);
  });
}

NodeId Tape::sigmoid(NodeId a) {
  Mat v = val(a);
  for (double& x : v.a) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (size_t i = 0; i < ga.a.size(); ++i) {
      double s = self.v.a[i];
      ga.a[i] += self.g.a[i] * s * (1.0 - s);
    }
  });
}

NodeId Tape::tanh_fn(NodeId a) {
  Mat v = val(a);
  for (double& x : v.a) x = std::tanh(x);
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (size_t i = 0; i < ga.a.size(); ++i) {
      double y = self.v.a[i];
      ga.a[i] += self.g.a[i] * (1.0 - y * y);
    }
  });
}

NodeId Tape::relu(NodeId a) {
  Mat v = val(a);
  for (double& x : v.a) x = x > 0.0 ? x : 0.0;
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    const Mat& va = t.val(a);
    for (size_t i = 0; i < ga.a.size(); ++i)
      if (va.a[i] > 0.0) ga.a[i] += self.g.a[i];
  });
}

NodeId Tape::gelu(NodeId a) {
  Mat v = val(a);
  for (double& x : v.a) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    const Mat& va = t.val(a);
    for (size_t i = 0; i < ga.a.size(); ++i) {
      double x = va.a[i];
      double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga.a[i] += self.g.a[i] * (cdf + x * pdf);
    }
  });
}

NodeId Tape::softmax_rows(NodeId a) {
  Mat v = val(a);
  for (int i = 0; i < v.rows; ++i) {
    double mx = -1e300;
    for (int j = 0; j < v.cols; ++j) mx = std::max(mx, v(i, j));
    double z = 0.0;
    for (int j = 0; j < v.cols; ++j) {
      v(i, j) = std::exp(v(i, j) - mx);
      z += v(i, j);
    }
    for (int j = 0; j < v.cols; ++j) v(i, j) /= z;
  }
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (int i = 0; i < self.g.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < self.g.cols; ++j) dot += self.g(i, j) * self.v(i, j);
      for (int j = 0; j < self.g.cols; ++j)
        ga(i, j) += self.v(i, j) * (self.g(i, j) - dot);
    }
  });
}

NodeId Tape::layernorm_rows(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Mat& vx = val(x);
  require(val(gain).rows == 1 && val(gain).cols == vx.cols, Errc::shape_mismatch, "ln gain");
  require(val(bias).rows == 1 && val(bias).cols == vx.cols, Errc::shape_mismatch, "ln bias");
  int n = vx.rows, c = vx.cols;
  Mat y(n, c);  // normalized pre-gain, kept for backward
  Mat inv(n, 1);
  for (int i = 0; i < n; ++i) {
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += vx(i, j);
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      double d = vx(i, j) - mu;
      var += d * d;
    }
    var /= c;
    double iv = 1.0 / std::sqrt(var + eps);
    inv(i, 0) = iv;
    for (int j = 0; j < c; ++j) y(i, j) = (vx(i, j) - mu) * iv;
  }
  Mat v(n, c);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) v(i, j) = y(i, j) * val(gain)(0, j) + val(bias)(0, j);
  return push(std::move(v), [x, gain, bias, y = std::move(y), inv = std::move(inv)](
                                Tape& t, Node& self) {
    Mat& gx = t.gref(x);
    Mat& gg = t.gref(gain);
    Mat& gb = t.gref(bias);
    const Mat& vg = t.val(gain);
    int n = self.g.rows, c = self.g.cols;
    for (int i = 0; i < n; ++i) {
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < c; ++j) {
        double dy = self.g(i, j) * vg(0, j);
        m1 += dy;
        m2 += dy * y(i, j);
        gg(0, j) += self.g(i, j) * y(i, j);
        gb(0, j) += self.g(i, j);
      }
      m1 /= c;
      m2 /= c;
      for (int j = 0; j < c; ++j) {
        double dy = self.g(i, j) * vg(0, j);
        gx(i, j) += inv(i, 0) * (dy - m1 - y(i, j) * m2);
      }
    }
  });
}

NodeId Tape::mean_rows(NodeId a) {
  const Mat& va = val(a);
  require(va.rows > 0, Errc::shape_mismatch, "mean_rows on empty matrix");
  Mat v(1, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) v(0, j) += va(i, j);
  for (double& x : v.a) x /= va.rows;
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    double inv = 1.0 / ga.rows;
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += self.g(0, j) * inv;
  });
}

NodeId Tape::mean_all(NodeId a) {
  const Mat& va = val(a);
  require(!va.a.empty(), Errc::shape_mismatch, "mean_all on empty matrix");
  double s = 0.0;
  for (double x : va.a) s += x;
  Mat v(1, 1);
  v(0, 0) = s / static_cast<double>(va.a.size());
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    double g = self.g(0, 0) / static_cast<double>(ga.a.size());
    for (double& x : ga.a) x += g;
  });
}

NodeId Tape::sum_all(NodeId a) {
  double s = 0.0;
  for (double x : val(a).a) s += x;
  Mat v(1, 1);
  v(0, 0) = s;
  return push(std::move(v), [a](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (double& x : ga.a) x += self.g(0, 0);
  });
}

NodeId Tape::max_elem(NodeId a, NodeId b) {
  require(val(a).same_shape(val(b)), Errc::shape_mismatch, "max_elem shapes");
  Mat v = val(a);
  for (size_t i = 0; i < v.a.size(); ++i) v.a[i] = std::max(v.a[i], val(b).a[i]);
  return push(std::move(v), [a, b](Tape& t, Node& self) {
    // subgradient: ties route to the first argument
    Mat& ga = t.gref(a);
    Mat& gb = t.gref(b);
    const Mat& va = t.val(a);
    const Mat& vb = t.val(b);
    for (size_t i = 0; i < self.g.a.size(); ++i) {
      if (va.a[i] >= vb.a[i]) ga.a[i] += self.g.a[i];
      else gb.a[i] += self.g.a[i];
    }
  });
}

NodeId Tape::dropout(NodeId a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  require(rate < 1.0, Errc::invalid_argument, "dropout rate must be < 1");
  Mat mask(val(a).rows, val(a).cols);
  double keep = 1.0 - rate;
  for (double& m : mask.a) m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Mat v = val(a);
  for (size_t i = 0; i < v.a.size(); ++i) v.a[i] *= mask.a[i];
  return push(std::move(v), [a, mask = std::move(mask)](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    for (size_t i = 0; i < ga.a.size(); ++i) ga.a[i] += self.g.a[i] * mask.a[i];
  });
}

NodeId Tape::mse_against(NodeId a, Mat target) {
  const Mat& va = val(a);
  require(va.same_shape(target), Errc::shape_mismatch, "mse shapes");
  require(!va.a.empty(), Errc::shape_mismatch, "mse on empty matrix");
  double s = 0.0;
  for (size_t i = 0; i < va.a.size(); ++i) {
    double d = va.a[i] - target.a[i];
    s += d * d;
  }
  Mat v(1, 1);
  v(0, 0) = s / static_cast<double>(va.a.size());
  return push(std::move(v), [a, target = std::move(target)](Tape& t, Node& self) {
    Mat& ga = t.gref(a);
    const Mat& va = t.val(a);
    double c = 2.0 * self.g(0, 0) / static_cast<double>(va.a.size());
    for (size_t i = 0; i < va.a.size(); ++i) ga.a[i] += c * (va.a[i] - target.a[i]);
  });
}

NodeId Tape::ce_rows(NodeId logits, std::vector<int> targets) {
  const Mat& vl = val(logits);
  require(static_cast<int>(targets.size()) == vl.rows, Errc::shape_mismatch,
          "ce target count");
  require(vl.rows > 0 && vl.cols > 0, Errc::shape_mismatch, "ce on empty logits");
  Mat probs(vl.rows, vl.cols);
  double loss = 0.0;
  for (int i = 0; i < vl.rows; ++i) {
    require(targets[static_cast<size_t>(i)] >= 0 && targets[static_cast<size_t>(i)] < vl.cols,
            Errc::index_out_of_range, "ce target index");
    double mx = -1e300;
    for (int j = 0; j < vl.cols; ++j) mx = std::max(mx, vl(i, j));
    double z = 0.0;
    for (int j = 0; j < vl.cols; ++j) {
      probs(i, j) = std::exp(vl(i, j) - mx);
      z += probs(i, j);
    }
    for (int j = 0; j < vl.cols; ++j) probs(i, j) /= z;
    loss -= std::log(std::max(probs(i, targets[static_cast<size_t>(i)]), 1e-300));
  }
  Mat v(1, 1);
  v(0, 0) = loss / vl.rows;
  return push(std::move(v), [logits, targets = std::move(targets), probs = std::move(probs)](
                                Tape& t, Node& self) {
    Mat& gl = t.gref(logits);
    double c = self.g(0, 0) / gl.rows;
    for (int i = 0; i < gl.rows; ++i) {
      for (int j = 0; j < gl.cols; ++j) gl(i, j) += c * probs(i, j);
      gl(i, targets[static_cast<size_t>(i)]) -= c;
    }
  });
}

NodeId Tape::conv3x3s2(NodeId img, NodeId kernel, NodeId bias, int h, int w) {
  const Mat& vi = val(img);
  const Mat& vk = val(kernel);
  const Mat& vb = val(bias);
  int cin = vi.rows;
  require(vi.cols == h * w, Errc::shape_mismatch, "conv input dims");
  require(vk.cols == cin * 9, Errc::shape_mismatch, "conv kernel dims");
  int cout = vk.rows;
  require(vb.rows == 1 && vb.cols == cout, Errc::shape_mismatch, "conv bias dims");
  int ho = (h + 1) / 2, wo = (w + 1) / 2;
  Mat v(cout, ho * wo);
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < ho; ++y) {
      for (int x = 0; x < wo; ++x) {
        double s = vb(0, co);
        for (int ci = 0; ci < cin; ++ci) {
          for (int dy = -1; dy <= 1; ++dy) {
            int iy = 2 * y + dy;
            if (iy < 0 || iy >= h) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              int ix = 2 * x + dx;
              if (ix < 0 || ix >= w) continue;
              s += vk(co, ci * 9 + (dy + 1) * 3 + (dx + 1)) * vi(ci, iy * w + ix);
            }
          }
        }
        v(co, y * wo + x) = s;
      }
    }
  }
  return push(std::move(v), [img, kernel, bias, h, w](Tape& t, Node& self) {
    const Mat& vi = t.val(img);
    const Mat& vk = t.val(kernel);
    Mat& gi = t.gref(img);
    Mat& gk = t.gref(kernel);
    Mat& gb = t.gref(bias);
    int cin = vi.rows, cout = vk.rows;
    int ho = (h + 1) / 2, wo = (w + 1) / 2;
    for (int co = 0; co < cout; ++co) {
      for (int y = 0; y < ho; ++y) {
        for (int x = 0; x < wo; ++x) {
          double g = self.g(co, y * wo + x);
          if (g == 0.0) continue;
          gb(0, co) += g;
          for (int ci = 0; ci < cin; ++ci) {
            for (int dy = -1; dy <= 1; ++dy) {
              int iy = 2 * y + dy;
              if (iy < 0 || iy >= h) continue;
              for (int dx = -1; dx <= 1; ++dx) {
                int ix = 2 * x + dx;
                if (ix < 0 || ix >= w) continue;
                int kk = ci * 9 + (dy + 1) * 3 + (dx + 1);
                gk(co, kk) += g * vi(ci, iy * w + ix);
                gi(ci, iy * w + ix) += g * vk(co, kk);
              }
            }
          }
        }
      }
    }
  });
}

NodeId Tape::roi_mean(NodeId fmap, int h, int w, int px0, int px1, int py0, int py1) {
  const Mat& vf = val(fmap);
  require(vf.cols == h * w, Errc::shape_mismatch, "roi_mean map dims");
  require(0 <= px0 && px0 <= px1 && px1 < w && 0 <= py0 && py0 <= py1 && py1 < h,
          Errc::index_out_of_range, "roi_mean rect");
  int c = vf.rows;
  int npix = (px1 - px0 + 1) * (py1 - py0 + 1);
  Mat v(1, c);
  for (int ci = 0; ci < c; ++ci) {
    double s = 0.0;
    for (int y = py0; y <= py1; ++y)
      for (int x = px0; x <= px1; ++x) s += vf(ci, y * w + x);
    v(0, ci) = s / npix;
  }
  return push(std::move(v), [fmap, w, px0, px1, py0, py1, npix](Tape& t, Node& self) {
    Mat& gf = t.gref(fmap);
    for (int ci = 0; ci < self.g.cols; ++ci) {
      double g = self.g(0, ci) / npix;
      for (int y = py0; y <= py1; ++y)
        for (int x = px0; x <= px1; ++x) gf(ci, y * w + x) += g;
    }
  });
}

void Tape::backward(NodeId loss) {
  require(val(loss).rows == 1 && val(loss).cols == 1, Errc::shape_mismatch,
          "backward expects a scalar loss");
  gref(loss)(0, 0) = 1.0;
  for (size_t k = nodes_.size(); k-- > 0;) {
    Node& n = nodes_[k];
    if (n.back) n.back(*this, n);
    if (n.pidx >= 0) axpy(ps_->entry(n.pidx).grad, 1.0, n.g);
  }
}

}  // namespace david
