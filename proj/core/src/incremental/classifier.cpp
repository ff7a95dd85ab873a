#include "docingest/incremental/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace docingest::incremental {

GroupedClassifier::GroupedClassifier(std::vector<LayerGroup> groups, HeadType head, int margin,
                                     Activation activation)
    : groups_(std::move(groups)), head_(head), margin_(margin), activation_(activation) {
  if (groups_.size() < 2) {
    throw std::invalid_argument("GroupedClassifier needs at least two layer groups");
  }
  if (margin_ < 1) throw std::invalid_argument("GroupedClassifier margin must be >= 1");
  for (std::size_t l = 0; l < groups_.size(); ++l) {
    const LayerGroup& g = groups_[l];
    if (g.weight.rows() == 0 || g.weight.cols() == 0) {
      throw std::invalid_argument("layer group " + std::to_string(l) + " has an empty weight");
    }
    if (l > 0 && g.weight.cols() != groups_[l - 1].weight.rows()) {
      throw std::invalid_argument("layer group " + std::to_string(l) +
                                  " input width does not match previous output");
    }
    const bool head_group = l + 1 == groups_.size();
    const Eigen::Index expected_bias =
        (head_group && head_ == HeadType::a_softmax) ? 0 : g.weight.rows();
    if (g.bias.size() != expected_bias) {
      throw std::invalid_argument("layer group " + std::to_string(l) + " has bias of size " +
                                  std::to_string(g.bias.size()) + ", expected " +
                                  std::to_string(expected_bias));
    }
  }
  if (head_ == HeadType::a_softmax) {
    const Vector norms = groups_.back().weight.rowwise().norm();
    if ((norms.array() <= 0.0).any()) {
      throw std::invalid_argument("a_softmax class directions must be non-zero");
    }
  }
}

GroupedClassifier GroupedClassifier::initialize(const Architecture& arch, Rng& rng) {
  if (arch.input_dim < 1 || arch.num_classes < 1 || arch.hidden_widths.empty()) {
    throw std::invalid_argument("Architecture needs input_dim, num_classes and a hidden group");
  }
  std::vector<int> widths{arch.input_dim};
  widths.insert(widths.end(), arch.hidden_widths.begin(), arch.hidden_widths.end());
  widths.push_back(arch.num_classes);

  std::vector<LayerGroup> groups;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    LayerGroup g;
    g.weight.resize(out, in);
    for (Eigen::Index c = 0; c < g.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < g.weight.rows(); ++r) g.weight(r, c) = rng.uniform(-limit, limit);
    }
    const bool head_group = l + 2 == widths.size();
    g.bias = (head_group && arch.head == HeadType::a_softmax) ? Vector() : Vector::Zero(out);
    groups.push_back(std::move(g));
  }
  GroupedClassifier model(std::move(groups), arch.head, arch.margin, arch.activation);
  model.renormalize_head();
  return model;
}

Matrix GroupedClassifier::class_directions() const {
  const Matrix& w = groups_.back().weight;
  if (head_ != HeadType::a_softmax) return w;
  return w.array().colwise() / w.rowwise().norm().array();
}

void GroupedClassifier::renormalize_head() {
  if (head_ != HeadType::a_softmax) return;
  groups_.back().weight = class_directions();
}

ForwardPass GroupedClassifier::forward(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(input_dim()));
  }
  ForwardPass pass;
  pass.input = x;
  pass.outputs.reserve(groups_.size());
  const Vector* in = &pass.input;
  for (std::size_t l = 0; l < groups_.size(); ++l) {
    const LayerGroup& g = groups_[l];
    const bool head_group = l + 1 == groups_.size();
    if (!head_group) {
      const Vector z = g.weight * *in + g.bias;
      pass.outputs.push_back(activation_ == Activation::tanh ? Vector(z.array().tanh())
                                                             : Vector(z.array().max(0.0)));
    } else if (head_ == HeadType::a_softmax) {
      pass.outputs.push_back(class_directions() * *in);
    } else {
      pass.outputs.push_back(g.weight * *in + g.bias);
    }
    in = &pass.outputs.back();
  }
  return pass;
}

int GroupedClassifier::predict(const Vector& x) const {
  Eigen::Index best = 0;
  logits(x).maxCoeff(&best);
  return static_cast<int>(best);
}

std::vector<int> GroupedClassifier::ranked_classes(const Vector& x) const {
  const Vector z = logits(x);
  std::vector<int> order(static_cast<std::size_t>(z.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z(a) > z(b); });
  return order;
}

GroupedClassifier GroupedClassifier::expand_output_layer(int n_new) const {
  if (n_new < 1) throw std::invalid_argument("expand_output_layer: n_new must be >= 1");
  std::vector<LayerGroup> groups = groups_;
  LayerGroup& head = groups.back();
  const Eigen::Index old_k = head.weight.rows();
  const Eigen::Index width = head.weight.cols();
  Matrix w(old_k + n_new, width);
  w.topRows(old_k) = head.weight;
  if (head_ == HeadType::a_softmax) {
    w.bottomRows(n_new).setConstant(1.0 / std::sqrt(static_cast<double>(width)));
  } else {
    w.bottomRows(n_new).setZero();
    Vector b(old_k + n_new);
    b.head(old_k) = head.bias;
    b.tail(n_new).setZero();
    head.bias = std::move(b);
  }
  head.weight = std::move(w);
  return GroupedClassifier(std::move(groups), head_, margin_, activation_);
}

std::size_t GroupedClassifier::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const LayerGroup& g : groups_) {
    n += static_cast<std::size_t>(g.weight.size() + g.bias.size());
  }
  return n;
}

Vector GroupedClassifier::parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index offset = 0;
  for (const LayerGroup& g : groups_) {
    flat.segment(offset, g.weight.size()) = g.weight.reshaped();
    offset += g.weight.size();
    flat.segment(offset, g.bias.size()) = g.bias;
    offset += g.bias.size();
  }
  return flat;
}

void GroupedClassifier::set_parameters(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw std::invalid_argument("set_parameters: expected " + std::to_string(parameter_count()) +
                                " values, got " + std::to_string(flat.size()));
  }
  Eigen::Index offset = 0;
  for (LayerGroup& g : groups_) {
    g.weight.reshaped() = flat.segment(offset, g.weight.size());
    offset += g.weight.size();
    g.bias = flat.segment(offset, g.bias.size());
    offset += g.bias.size();
  }
}

Vector GroupedClassifier::backward(const ForwardPass& pass,
                                   const std::vector<Vector>& output_grads,
                                   const HeadGradient* head_grad) const {
  const std::size_t L = groups_.size();
  if (pass.outputs.size() != L || output_grads.size() != L) {
    throw std::invalid_argument("backward: pass/gradient group count mismatch");
  }
  const auto injected = [&](std::size_t l) -> Vector {
    if (output_grads[l].size() == 0) return Vector::Zero(pass.outputs[l].size());
    if (output_grads[l].size() != pass.outputs[l].size()) {
      throw std::invalid_argument("backward: output gradient " + std::to_string(l) +
                                  " has the wrong size");
    }
    return output_grads[l];
  };

  // Offsets of each group's block inside the flat parameter vector.
  std::vector<Eigen::Index> offsets(L);
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offsets[l] = total;
    total += groups_[l].weight.size() + groups_[l].bias.size();
  }
  Vector grad = Vector::Zero(total);

  Vector delta = injected(L - 1);
  for (std::size_t l = L; l-- > 0;) {
    const LayerGroup& g = groups_[l];
    const Vector& in = l == 0 ? pass.input : pass.outputs[l - 1];
    auto dW = grad.segment(offsets[l], g.weight.size()).reshaped(g.weight.rows(), g.weight.cols());
    Vector d_in;
    if (l + 1 == L && head_ == HeadType::a_softmax) {
      const Matrix directions = class_directions();
      Matrix d_dir = delta * in.transpose();
      d_in = directions.transpose() * delta;
      if (head_grad != nullptr) {
        d_dir += head_grad->d_directions;
        d_in += head_grad->d_feature;
      }
      // Chain through w -> w / |w| for each class row.
      const Vector norms = g.weight.rowwise().norm();
      for (Eigen::Index k = 0; k < d_dir.rows(); ++k) {
        const double along = directions.row(k).dot(d_dir.row(k));
        dW.row(k) = (d_dir.row(k) - along * directions.row(k)) / norms(k);
      }
    } else {
      Vector dz = delta;
      if (l + 1 != L) {
        const auto out = pass.outputs[l].array();
        dz = activation_ == Activation::tanh
                 ? Vector(delta.array() * (1.0 - out.square()))
                 : Vector(delta.array() * (out > 0.0).cast<double>());
      }
      dW = dz * in.transpose();
      grad.segment(offsets[l] + g.weight.size(), g.bias.size()) = dz;
      d_in = g.weight.transpose() * dz;
    }
    if (l > 0) delta = d_in + injected(l - 1);
  }
  return grad;
}

}  // namespace docingest::incremental
