#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "docingest/rng.hpp"

namespace docingest::incremental {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class HeadType { softmax, a_softmax };

/// Elementwise nonlinearity of the hidden groups.
enum class Activation { tanh, relu };

/// One affine layer group. Hidden groups apply the activation; the final group is
/// linear (softmax head) or a bias-free map onto unit class directions
/// (a_softmax head, where `bias` is empty).
struct LayerGroup {
  Matrix weight;
  Vector bias;
};

struct Architecture {
  int input_dim = 16;
  std::vector<int> hidden_widths{64, 64};
  int num_classes = 10;
  HeadType head = HeadType::softmax;
  /// Angular margin m, used only by the a_softmax head.
  int margin = 4;
  Activation activation = Activation::tanh;
};

/// Outputs of every group for one input; outputs.back() are the logits.
struct ForwardPass {
  Vector input;
  std::vector<Vector> outputs;

  const Vector& logits() const { return outputs.back(); }
  /// Input to the final group (the embedding the head classifies).
  const Vector& feature() const {
    return outputs.size() >= 2 ? outputs[outputs.size() - 2] : input;
  }
};

/// Direct loss gradients w.r.t. the a_softmax head's normalized class
/// directions and its input feature, for losses that are not a function of
/// the final group output alone.
struct HeadGradient {
  Matrix d_directions;
  Vector d_feature;
};

/// Small multi-layer classifier whose per-group outputs are exposed so a
/// distillation loss can compare intermediate representations.
class GroupedClassifier {
 public:
  /// Throws std::invalid_argument if shapes do not chain, fewer than two
  /// groups are given, or the head's bias shape does not match its type.
  GroupedClassifier(std::vector<LayerGroup> groups, HeadType head, int margin = 4,
                    Activation activation = Activation::tanh);

  /// Xavier-uniform weights, zero biases, unit class directions.
  static GroupedClassifier initialize(const Architecture& arch, Rng& rng);

  ForwardPass forward(const Vector& x) const;
  Vector logits(const Vector& x) const { return forward(x).logits(); }
  int predict(const Vector& x) const;
  /// Class indices by descending logit (ties by lower index).
  std::vector<int> ranked_classes(const Vector& x) const;

  /// Copy with n_new extra classes. Existing rows are kept bit-for-bit; new
  /// softmax rows and biases are zero so old logits are unchanged. New
  /// a_softmax directions start as the normalized all-ones vector
  /// (a zero direction has no angle).
  GroupedClassifier expand_output_layer(int n_new) const;

  /// Accumulates parameter gradients for one forward pass. output_grads[l]
  /// is dLoss/d(outputs[l]) (empty vector means zero); head_grad adds
  /// direct a_softmax terms. Result is laid out like parameters().
  Vector backward(const ForwardPass& pass, const std::vector<Vector>& output_grads,
                  const HeadGradient* head_grad = nullptr) const;

  /// Row-normalized final weights (a_softmax); the raw weights otherwise.
  Matrix class_directions() const;
  /// Projects a_softmax class weights back onto the unit sphere.
  void renormalize_head();

  std::size_t parameter_count() const noexcept;
  Vector parameters() const;
  void set_parameters(const Vector& flat);

  int input_dim() const noexcept { return static_cast<int>(groups_.front().weight.cols()); }
  int num_classes() const noexcept { return static_cast<int>(groups_.back().weight.rows()); }
  int num_groups() const noexcept { return static_cast<int>(groups_.size()); }
  HeadType head() const noexcept { return head_; }
  int margin() const noexcept { return margin_; }
  Activation activation() const noexcept { return activation_; }
  const std::vector<LayerGroup>& groups() const noexcept { return groups_; }

 private:
  std::vector<LayerGroup> groups_;
  HeadType head_;
  int margin_;
  Activation activation_;
};

}  // namespace docingest::incremental
