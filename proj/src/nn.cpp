#include "polsyn/nn.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "polsyn/rng.hpp"

namespace polsyn::nn {

static_assert(std::endian::native == std::endian::little, "weight blobs are read in native little-endian order");

namespace {

constexpr const char* kFormat = "polsyn-network";
constexpr int kVersion = 1;

float activate(Activation a, float x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0f ? x : 0.0f;
    case Activation::sigmoid: return 1.0f / (1.0f + std::exp(-x));
  }
  return x;
}

// filter stride inside the transposed conv weights and the accumulator
std::size_t padded(std::size_t nf) { return (nf + 7) / 8 * 8; }

#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define POLSYN_KERNEL __attribute__((target_clones("avx2", "default")))
#else
#define POLSYN_KERNEL
#endif

// out[0..n) += w[0..n) * v, n a multiple of 8
inline void axpy8(float* __restrict out, const float* __restrict w, float v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += w[i] * v;
}

inline void axpy(float* __restrict out, const float* __restrict w, float v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += w[i] * v;
}

bool all_finite(const std::vector<float>& v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return 0;
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + ")";
}

Tensor::Tensor(std::vector<std::size_t> shape_, float fill) : shape(std::move(shape_)), data(shape_size(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (data.size() != shape_size(shape))
    throw NnError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                  shape_string(shape));
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "linear") return Activation::linear;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw NnError("unknown activation: " + s);
}

std::string layer_name(const Layer& l, std::size_t index) {
  const char* kind = std::holds_alternative<Conv2d>(l) ? "conv2d" : (std::holds_alternative<Flatten>(l) ? "flatten" : "dense");
  return "layer " + std::to_string(index) + " (" + kind + ")";
}

Network::Network(std::vector<std::size_t> input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  validate();
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (const auto* c = std::get_if<Conv2d>(&l)) n += c->weights.size() + c->bias.size();
    if (const auto* d = std::get_if<Dense>(&l)) n += d->weights.size() + d->bias.size();
  }
  return n;
}

void Network::validate() {
  if (layers_.empty()) throw NnError("network has no layers");
  if (input_shape_.empty() || shape_size(input_shape_) == 0) throw NnError("network input shape is empty");
  std::vector<std::size_t> shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string name = layer_name(layers_[i], i);
    if (const auto* c = std::get_if<Conv2d>(&layers_[i])) {
      if (shape.size() != 3) throw NnError(name + ": expects a (C,H,W) input, got " + shape_string(shape));
      if (shape[0] != c->in_channels)
        throw NnError(name + ": expects " + std::to_string(c->in_channels) + " input channels, got " +
                      std::to_string(shape[0]));
      if (c->kernel % 2 == 0 || c->kernel == 0) throw NnError(name + ": kernel size must be odd");
      if (c->filters == 0) throw NnError(name + ": no filters");
      if (c->weights.size() != c->filters * c->in_channels * c->kernel * c->kernel)
        throw NnError(name + ": weight count does not match filters*in_channels*kernel*kernel");
      if (c->bias.size() != c->filters) throw NnError(name + ": bias count does not match filters");
      if (!all_finite(c->weights) || !all_finite(c->bias)) throw NnError(name + ": non-finite parameter");
      shape = {c->filters, shape[1], shape[2]};
    } else if (std::holds_alternative<Flatten>(layers_[i])) {
      shape = {shape_size(shape)};
    } else {
      const auto& d = std::get<Dense>(layers_[i]);
      if (shape.size() != 1) throw NnError(name + ": expects a flat input, got " + shape_string(shape));
      if (shape[0] != d.in)
        throw NnError(name + ": expects " + std::to_string(d.in) + " inputs, got " + std::to_string(shape[0]));
      if (d.out == 0) throw NnError(name + ": no outputs");
      if (d.weights.size() != d.in * d.out) throw NnError(name + ": weight count does not match in*out");
      if (d.bias.size() != d.out) throw NnError(name + ": bias count does not match out");
      if (!all_finite(d.weights) || !all_finite(d.bias)) throw NnError(name + ": non-finite parameter");
      shape = {d.out};
    }
  }
  if (shape.size() != 1) throw NnError("network output is not flat: " + shape_string(shape));
  output_dim_ = shape[0];
  transposed_.assign(layers_.size(), {});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& t = transposed_[i];
    if (const auto* c = std::get_if<Conv2d>(&layers_[i])) {
      const std::size_t ch = c->in_channels, k = c->kernel, nf = c->filters, np = padded(nf);
      t.assign(ch * k * k * np, 0.0f);
      for (std::size_t f = 0; f < nf; ++f)
        for (std::size_t ci = 0; ci < ch; ++ci)
          for (std::size_t q = 0; q < k * k; ++q) t[(ci * k * k + q) * np + f] = c->weights[(f * ch + ci) * k * k + q];
      continue;
    }
    const auto* d = std::get_if<Dense>(&layers_[i]);
    if (!d) continue;
    t.resize(d->weights.size());
    for (std::size_t o = 0; o < d->out; ++o)
      for (std::size_t j = 0; j < d->in; ++j) t[j * d->out + o] = d->weights[o * d->in + j];
  }
}

POLSYN_KERNEL std::vector<float> Network::infer(const Tensor& input) const {
  if (input.shape != input_shape_)
    throw NnError("input shape " + shape_string(input.shape) + " does not match network input " +
                  shape_string(input_shape_) + " at " + (layers_.empty() ? "input" : layer_name(layers_[0], 0)));
  std::vector<std::size_t> shape = input.shape;
  thread_local std::vector<float> xbuf, ybuf, acc;
  const float* x = input.data.data();
  std::size_t xn = input.data.size();
  auto& y = ybuf;
  auto advance = [&] {
    std::swap(xbuf, ybuf);
    x = xbuf.data();
    xn = xbuf.size();
  };
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& layer = layers_[li];
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      // scatter each nonzero input; encoded states are sparse
      const long ch = static_cast<long>(shape[0]), h = static_cast<long>(shape[1]), w = static_cast<long>(shape[2]);
      const long k = static_cast<long>(c->kernel), pad = k / 2;
      const std::size_t nf = c->filters, np = padded(nf);
      const float* wt = transposed_[li].data();
      acc.assign(static_cast<std::size_t>(h * w) * np, 0.0f);
      for (long ci = 0; ci < ch; ++ci) {
        for (long iy = 0; iy < h; ++iy) {
          for (long ix = 0; ix < w; ++ix) {
            const float v = x[static_cast<std::size_t>((ci * h + iy) * w + ix)];
            if (v == 0.0f) continue;
            for (long ky = std::max(0L, iy + pad - h + 1); ky <= std::min(k - 1, iy + pad); ++ky) {
              const long oy = iy - ky + pad;
              for (long kx = std::max(0L, ix + pad - w + 1); kx <= std::min(k - 1, ix + pad); ++kx) {
                const long ox = ix - kx + pad;
                axpy8(&acc[static_cast<std::size_t>(oy * w + ox) * np],
                      wt + static_cast<std::size_t>((ci * k + ky) * k + kx) * np, v, np);
              }
            }
          }
        }
      }
      y.resize(nf * static_cast<std::size_t>(h * w));
      for (std::size_t f = 0; f < nf; ++f)
        for (std::size_t p = 0; p < static_cast<std::size_t>(h * w); ++p)
          y[f * static_cast<std::size_t>(h * w) + p] = activate(c->activation, acc[p * np + f] + c->bias[f]);
      shape = {c->filters, shape[1], shape[2]};
      advance();
    } else if (std::holds_alternative<Flatten>(layer)) {
      shape = {xn};
    } else {
      const auto& d = std::get<Dense>(layer);
      const float* wt = transposed_[li].data();
      y.assign(d.bias.begin(), d.bias.end());
      float* out = y.data();
      for (std::size_t i = 0; i < d.in; ++i) {
        const float v = x[i];
        if (v == 0.0f) continue;
        axpy(out, wt + i * d.out, v, d.out);
      }
      for (auto& o : y) o = activate(d.activation, o);
      shape = {d.out};
      advance();
    }
  }
  return std::vector<float>(x, x + xn);
}

// -- serialization --------------------------------------------------------------

std::string blob_path_for(const std::string& manifest_path) {
  std::filesystem::path p(manifest_path);
  if (p.extension() == ".json") p.replace_extension(".bin");
  else p += ".bin";
  return p.string();
}

nlohmann::json Network::manifest(bool inline_weights) const {
  nlohmann::json m;
  m["format"] = kFormat;
  m["version"] = kVersion;
  m["input_shape"] = input_shape_;
  m["output_dim"] = output_dim_;
  nlohmann::json layers = nlohmann::json::array();
  std::size_t offset = 0;
  auto put = [&](nlohmann::json& l, const char* key, const std::vector<float>& v) {
    if (inline_weights) {
      l[key] = v;
    } else {
      l[std::string(key) + "_offset"] = offset;
      l[std::string(key) + "_count"] = v.size();
      offset += v.size() * sizeof(float);
    }
  };
  for (const auto& layer : layers_) {
    nlohmann::json l;
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      l["type"] = "conv2d";
      l["in_channels"] = c->in_channels;
      l["filters"] = c->filters;
      l["kernel"] = c->kernel;
      l["activation"] = activation_name(c->activation);
      put(l, "weights", c->weights);
      put(l, "bias", c->bias);
    } else if (std::holds_alternative<Flatten>(layer)) {
      l["type"] = "flatten";
    } else {
      const auto& d = std::get<Dense>(layer);
      l["type"] = "dense";
      l["in"] = d.in;
      l["out"] = d.out;
      l["activation"] = activation_name(d.activation);
      put(l, "weights", d.weights);
      put(l, "bias", d.bias);
    }
    layers.push_back(std::move(l));
  }
  m["layers"] = std::move(layers);
  if (!inline_weights) m["blob_bytes"] = offset;
  return m;
}

void Network::save(const std::string& manifest_path) const {
  const std::string blob = blob_path_for(manifest_path);
  nlohmann::json m = manifest(false);
  m["blob"] = std::filesystem::path(blob).filename().string();
  std::ofstream bin(blob, std::ios::binary | std::ios::trunc);
  if (!bin) throw NnError("cannot write " + blob);
  auto write = [&](const std::vector<float>& v) {
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  };
  for (const auto& layer : layers_) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      write(c->weights);
      write(c->bias);
    } else if (const auto* d = std::get_if<Dense>(&layer)) {
      write(d->weights);
      write(d->bias);
    }
  }
  if (!bin) throw NnError("write failed: " + blob);
  std::ofstream js(manifest_path, std::ios::trunc);
  if (!js) throw NnError("cannot write " + manifest_path);
  js << m.dump(2) << "\n";
}

void Network::save_inline(const std::string& path) const {
  std::ofstream js(path, std::ios::trunc);
  if (!js) throw NnError("cannot write " + path);
  js << manifest(true).dump() << "\n";
}

namespace {

std::vector<float> read_floats(const nlohmann::json& l, const std::string& key, const std::vector<char>& blob,
                               const std::string& name) {
  if (l.contains(key)) {
    std::vector<float> v;
    for (const auto& x : l.at(key)) {
      if (!x.is_number()) throw NnError(name + ": non-numeric " + key);
      v.push_back(x.get<float>());
    }
    return v;
  }
  if (!l.contains(key + "_offset") || !l.contains(key + "_count")) throw NnError(name + ": missing " + key);
  const auto off = l.at(key + "_offset").get<std::size_t>();
  const auto cnt = l.at(key + "_count").get<std::size_t>();
  if (off % sizeof(float) != 0) throw NnError(name + ": misaligned " + key + " offset");
  if (off > blob.size() || cnt > (blob.size() - off) / sizeof(float))
    throw NnError(name + ": " + key + " extends past the end of the blob");
  std::vector<float> v(cnt);
  std::memcpy(v.data(), blob.data() + off, cnt * sizeof(float));
  return v;
}

}  // namespace

Network Network::from_manifest(const nlohmann::json& m, const std::vector<char>& blob) {
  try {
    if (!m.is_object()) throw NnError("manifest is not a JSON object");
    if (m.value("format", std::string()) != kFormat) throw NnError("not a polsyn-network manifest");
    if (!m.contains("version") || m.at("version").get<int>() != kVersion)
      throw NnError("unsupported weight format version (expected " + std::to_string(kVersion) + ")");
    const auto input_shape = m.at("input_shape").get<std::vector<std::size_t>>();
    const auto& ls = m.at("layers");
    if (!ls.is_array() || ls.empty()) throw NnError("manifest has no layers");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const auto& l = ls[i];
      const std::string type = l.at("type").get<std::string>();
      const std::string name = "layer " + std::to_string(i) + " (" + type + ")";
      if (type == "conv2d") {
        Conv2d c;
        c.in_channels = l.at("in_channels").get<std::size_t>();
        c.filters = l.at("filters").get<std::size_t>();
        c.kernel = l.value("kernel", std::size_t{3});
        c.activation = parse_activation(l.value("activation", std::string("relu")));
        c.weights = read_floats(l, "weights", blob, name);
        c.bias = read_floats(l, "bias", blob, name);
        layers.emplace_back(std::move(c));
      } else if (type == "flatten") {
        layers.emplace_back(Flatten{});
      } else if (type == "dense") {
        Dense d;
        d.in = l.at("in").get<std::size_t>();
        d.out = l.at("out").get<std::size_t>();
        d.activation = parse_activation(l.value("activation", std::string("linear")));
        d.weights = read_floats(l, "weights", blob, name);
        d.bias = read_floats(l, "bias", blob, name);
        layers.emplace_back(std::move(d));
      } else {
        throw NnError(name + ": unknown layer type");
      }
    }
    Network net(input_shape, std::move(layers));
    if (m.contains("output_dim") && m.at("output_dim").get<std::size_t>() != net.output_dim())
      throw NnError("manifest output_dim disagrees with the layer shapes");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw NnError(std::string("malformed weight manifest: ") + e.what());
  }
}

Network Network::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw NnError("cannot open " + manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw NnError("cannot parse " + manifest_path + ": " + e.what());
  }
  std::vector<char> blob;
  if (m.is_object() && m.contains("blob")) {
    const auto blob_path = std::filesystem::path(manifest_path).parent_path() / m.at("blob").get<std::string>();
    std::ifstream b(blob_path, std::ios::binary);
    if (!b) throw NnError("cannot open weight blob " + blob_path.string());
    blob.assign(std::istreambuf_iterator<char>(b), std::istreambuf_iterator<char>());
    if (m.contains("blob_bytes") && m.at("blob_bytes").get<std::size_t>() != blob.size())
      throw NnError("weight blob size disagrees with the manifest");
  }
  return from_manifest(m, blob);
}

Network random_network(const std::vector<std::size_t>& input_shape, std::size_t conv_filters,
                       const std::vector<std::size_t>& dense_widths, std::uint64_t seed, Activation head) {
  Rng rng(seed);
  auto normal = [&]() {
    // Box-Muller on the library generator.
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  };
  std::vector<Layer> layers;
  std::size_t flat = shape_size(input_shape);
  if (input_shape.size() == 3 && conv_filters > 0) {
    Conv2d c;
    c.in_channels = input_shape[0];
    c.filters = conv_filters;
    c.kernel = 3;
    const double scale = std::sqrt(2.0 / static_cast<double>(c.in_channels * 9));
    c.weights.resize(c.filters * c.in_channels * 9);
    for (auto& w : c.weights) w = static_cast<float>(normal() * scale);
    c.bias.assign(c.filters, 0.0f);
    layers.emplace_back(std::move(c));
    flat = conv_filters * input_shape[1] * input_shape[2];
  }
  if (input_shape.size() != 1) layers.emplace_back(Flatten{});
  for (std::size_t i = 0; i < dense_widths.size(); ++i) {
    Dense d;
    d.in = flat;
    d.out = dense_widths[i];
    d.activation = i + 1 == dense_widths.size() ? head : Activation::relu;
    const double scale = std::sqrt(2.0 / static_cast<double>(d.in));
    d.weights.resize(d.in * d.out);
    for (auto& w : d.weights) w = static_cast<float>(normal() * scale);
    d.bias.assign(d.out, 0.0f);
    flat = d.out;
    layers.emplace_back(std::move(d));
  }
  return Network(input_shape, std::move(layers));
}

}  // namespace polsyn::nn
