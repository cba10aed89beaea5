#pragma once
// Reverse-mode autodiff over Mat values. A Tape is built per forward pass;
// backward() walks it in reverse and accumulates parameter gradients into
// the bound ParamStore.

#include <functional>
#include <vector>

#include "david/params.hpp"

namespace david {

using NodeId = int;

class Tape {
 public:
  explicit Tape(ParamStore* ps = nullptr) : ps_(ps) {}

  NodeId constant(Mat v);
  NodeId param(const std::string& name);

  const Mat& val(NodeId n) const { return nodes_[static_cast<size_t>(n)].v; }
  const Mat& grad(NodeId n) const { return nodes_[static_cast<size_t>(n)].g; }
  int rows(NodeId n) const { return val(n).rows; }
  int cols(NodeId n) const { return val(n).cols; }

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul_elem(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId add_row_broadcast(NodeId a, NodeId row);
  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_nt(NodeId a, NodeId b);  // a * b^T
  NodeId rows_gather(NodeId table, std::vector<int> idx);
  NodeId concat_rows(NodeId a, NodeId b);
  NodeId slice_rows(NodeId a, int r0, int r1);  // half-open
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId slice_cols(NodeId a, int c0, int c1);
  NodeId sigmoid(NodeId a);
  NodeId tanh_fn(NodeId a);
  NodeId relu(NodeId a);
  NodeId gelu(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId layernorm_rows(NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);
  NodeId mean_rows(NodeId a);
  NodeId mean_all(NodeId a);
  NodeId sum_all(NodeId a);
  NodeId max_elem(NodeId a, NodeId b);
  NodeId dropout(NodeId a, double rate, Rng& rng);
  NodeId mse_against(NodeId a, Mat target);
  // mean over rows of -log softmax(logits)[target]; numerically fused
  NodeId ce_rows(NodeId logits, std::vector<int> targets);
  // img: (c_in, h*w) -> (c_out, ceil(h/2)*ceil(w/2)); 3x3 kernel, stride 2, pad 1
  NodeId conv3x3s2(NodeId img, NodeId kernel, NodeId bias, int h, int w);
  // mean over an inclusive pixel rect of an (c, h*w) map -> (1, c)
  NodeId roi_mean(NodeId fmap, int h, int w, int px0, int px1, int py0, int py1);

  void backward(NodeId loss);
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat v;
    Mat g;
    std::function<void(Tape&, Node&)> back;
    int pidx = -1;
  };
  NodeId push(Mat v, std::function<void(Tape&, Node&)> back);
  Mat& gref(NodeId n) { return nodes_[static_cast<size_t>(n)].g; }

  std::vector<Node> nodes_;
  ParamStore* ps_;
};

}  // namespace david
