#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace polsyn::nn {

class NnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// float32 tensor, row-major; shape (channels, height, width) or (n).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, float fill = 0.0f);
  Tensor(std::vector<std::size_t> shape_, std::vector<float> data_);

  std::size_t size() const { return data.size(); }
  float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * shape[1] + y) * shape[2] + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * shape[1] + y) * shape[2] + x]; }
  bool operator==(const Tensor&) const = default;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

enum class Activation { linear, relu, sigmoid };
std::string activation_name(Activation a);
Activation parse_activation(const std::string& s);

/// Square kernel, stride 1, zero "same" padding. weights[f][c][ky][kx].
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 3;
  Activation activation = Activation::relu;
  std::vector<float> weights;
  std::vector<float> bias;
  bool operator==(const Conv2d&) const = default;
};

struct Flatten {
  bool operator==(const Flatten&) const = default;
};

/// weights[out][in].
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::linear;
  std::vector<float> weights;
  std::vector<float> bias;
  bool operator==(const Dense&) const = default;
};

using Layer = std::variant<Conv2d, Flatten, Dense>;

std::string layer_name(const Layer& l, std::size_t index);

class Network {
 public:
  Network() = default;
  Network(std::vector<std::size_t> input_shape, std::vector<Layer> layers);

  const std::vector<std::size_t>& input_shape() const { return input_shape_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t parameter_count() const;

  /// Checks that layer shapes compose and every parameter is finite.
  void validate();

  /// Forward pass; throws NnError naming the offending layer on a shape mismatch.
  std::vector<float> infer(const Tensor& input) const;

  /// Writes `<path>` (JSON manifest) and `<path without .json>.bin` (float32 LE blob).
  void save(const std::string& manifest_path) const;
  /// Single JSON file with parameters inline.
  void save_inline(const std::string& path) const;
  nlohmann::json manifest(bool inline_weights) const;

  /// Loads a manifest (blob resolved relative to the manifest) or an inline file.
  static Network load(const std::string& manifest_path);
  /// From a parsed manifest; `blob` may be empty for inline manifests.
  static Network from_manifest(const nlohmann::json& m, const std::vector<char>& blob);

  bool operator==(const Network&) const = default;

 private:
  std::vector<std::size_t> input_shape_;
  std::vector<Layer> layers_;
  std::size_t output_dim_ = 0;
  // Per layer: dense weights as [in][out], conv weights as [c][ky][kx][f].
  std::vector<std::vector<float>> transposed_;
};

/// Blob file name used by save() for a manifest path.
std::string blob_path_for(const std::string& manifest_path);

/// Seeded He-style random initialization (testing and fixtures).
Network random_network(const std::vector<std::size_t>& input_shape, std::size_t conv_filters,
                       const std::vector<std::size_t>& dense_widths, std::uint64_t seed,
                       Activation head = Activation::sigmoid);

}  // namespace polsyn::nn
