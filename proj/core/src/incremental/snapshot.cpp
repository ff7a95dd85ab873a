#include "docingest/incremental/snapshot.hpp"

#include <stdexcept>
#include <vector>

#include "docingest/errors.hpp"

namespace docingest::incremental {

std::string to_string(HeadType head) {
  return head == HeadType::softmax ? "softmax" : "a_softmax";
}

HeadType parse_head_type(const std::string& name) {
  if (name == "softmax") return HeadType::softmax;
  if (name == "a_softmax") return HeadType::a_softmax;
  throw std::invalid_argument("unknown head type '" + name + "'");
}

std::string to_string(Activation activation) {
  return activation == Activation::tanh ? "tanh" : "relu";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

OrderedJson model_to_json(const GroupedClassifier& model) {
  OrderedJson j = OrderedJson::object();
  j["format_version"] = kModelFormatVersion;
  j["head"] = to_string(model.head());
  j["margin"] = model.margin();
  j["activation"] = to_string(model.activation());
  OrderedJson groups = OrderedJson::array();
  for (const LayerGroup& g : model.groups()) {
    OrderedJson gj = OrderedJson::object();
    gj["rows"] = g.weight.rows();
    gj["cols"] = g.weight.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(g.weight.size()));
    for (Eigen::Index r = 0; r < g.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weight.cols(); ++c) w.push_back(g.weight(r, c));
    }
    gj["weight"] = std::move(w);
    gj["bias"] = std::vector<double>(g.bias.data(), g.bias.data() + g.bias.size());
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  return j;
}

namespace {

bool read_numbers(const nlohmann::json& arr, std::size_t expected, std::vector<double>& out) {
  if (!arr.is_array() || arr.size() != expected) return false;
  out.clear();
  for (const auto& v : arr) {
    if (!v.is_number()) return false;
    out.push_back(v.get<double>());
  }
  return true;
}

}  // namespace

GroupedClassifier model_from_json(const nlohmann::json& j) {
  std::vector<std::string> issues;
  if (!j.is_object()) throw ValidationError({"model: expected an object"});
  if (!j.contains("format_version") || j["format_version"] != kModelFormatVersion) {
    issues.push_back("format_version: expected " + std::to_string(kModelFormatVersion));
  }
  HeadType head = HeadType::softmax;
  try {
    head = parse_head_type(j.at("head").get<std::string>());
  } catch (const std::exception&) {
    issues.emplace_back("head: expected \"softmax\" or \"a_softmax\"");
  }
  Activation activation = Activation::tanh;
  try {
    activation = parse_activation(j.at("activation").get<std::string>());
  } catch (const std::exception&) {
    issues.emplace_back("activation: expected \"tanh\" or \"relu\"");
  }
  int margin = 1;
  if (!j.contains("margin") || !j["margin"].is_number_integer() || j["margin"].get<int>() < 1) {
    issues.emplace_back("margin: expected a positive integer");
  } else {
    margin = j["margin"].get<int>();
  }
  std::vector<LayerGroup> groups;
  if (!j.contains("groups") || !j["groups"].is_array()) {
    issues.emplace_back("groups: expected an array");
  } else {
    const auto& arr = j["groups"];
    for (std::size_t l = 0; l < arr.size(); ++l) {
      const std::string path = "groups[" + std::to_string(l) + "]";
      const auto& g = arr[l];
      if (!g.is_object() || !g.contains("rows") || !g.contains("cols") ||
          !g["rows"].is_number_unsigned() || !g["cols"].is_number_unsigned()) {
        issues.push_back(path + ": expected rows and cols as non-negative integers");
        continue;
      }
      const auto rows = g["rows"].get<std::size_t>();
      const auto cols = g["cols"].get<std::size_t>();
      std::vector<double> w;
      std::vector<double> b;
      if (!g.contains("weight") || !read_numbers(g["weight"], rows * cols, w)) {
        issues.push_back(path + ".weight: expected " + std::to_string(rows * cols) + " numbers");
        continue;
      }
      const bool headless_bias = l + 1 == arr.size() && head == HeadType::a_softmax;
      if (!g.contains("bias") || !read_numbers(g["bias"], headless_bias ? 0 : rows, b)) {
        issues.push_back(path + ".bias: expected " + std::to_string(headless_bias ? 0 : rows) +
                         " numbers");
        continue;
      }
      LayerGroup group;
      group.weight.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          group.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              w[r * cols + c];
        }
      }
      group.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
      groups.push_back(std::move(group));
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  try {
    return GroupedClassifier(std::move(groups), head, margin, activation);
  } catch (const std::invalid_argument& e) {
    throw ValidationError({std::string("groups: ") + e.what()});
  }
}

}  // namespace docingest::incremental
