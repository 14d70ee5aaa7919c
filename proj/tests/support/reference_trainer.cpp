// Small deterministic trainer used as a test fixture for the trainer process
// contract: reads a JSONL dataset and a training config, trains a
// conv + dense network with Adam on MSE, and writes network.json/.bin,
// test_vectors.json and metrics.json into the output directory.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polsyn/nn.hpp"
#include "polsyn/rng.hpp"

namespace {

using polsyn::Rng;
namespace nn = polsyn::nn;

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
};

struct Param {
  std::vector<double> w, g, m, v;
  void init(std::size_t n) {
    w.assign(n, 0.0);
    g.assign(n, 0.0);
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

double normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

class Model {
 public:
  Model(std::vector<std::size_t> in_shape, std::size_t filters, std::vector<std::size_t> dense, std::size_t out,
        Rng& rng)
      : shape_(std::move(in_shape)), filters_(shape_.size() == 3 ? filters : 0) {
    std::size_t flat = 1;
    for (auto d : shape_) flat *= d;
    if (filters_ > 0) {
      ch_ = shape_[0];
      h_ = shape_[1];
      w_ = shape_[2];
      conv_w_.init(filters_ * ch_ * 9);
      conv_b_.init(filters_);
      const double s = std::sqrt(2.0 / static_cast<double>(ch_ * 9));
      for (auto& x : conv_w_.w) x = normal(rng) * s;
      flat = filters_ * h_ * w_;
    }
    dense.push_back(out);
    for (std::size_t i = 0; i < dense.size(); ++i) {
      Layer l;
      l.in = flat;
      l.out = dense[i];
      l.w.init(l.in * l.out);
      l.b.init(l.out);
      const double s = std::sqrt(2.0 / static_cast<double>(l.in));
      for (auto& x : l.w.w) x = normal(rng) * s;
      layers_.push_back(std::move(l));
      flat = dense[i];
    }
  }

  /// Rounds every parameter to float32, the precision of the export.
  void round_to_float() {
    for (Param* p : params())
      for (auto& x : p->w) x = static_cast<double>(static_cast<float>(x));
  }

  std::vector<double> forward(const std::vector<double>& x) {
    acts_.clear();
    std::vector<double> cur = x;
    if (filters_ > 0) {
      conv_in_ = x;
      std::vector<double> y(filters_ * h_ * w_);
      for (std::size_t f = 0; f < filters_; ++f)
        for (std::size_t oy = 0; oy < h_; ++oy)
          for (std::size_t ox = 0; ox < w_; ++ox) {
            double acc = conv_b_.w[f];
            for (std::size_t c = 0; c < ch_; ++c)
              for (int ky = 0; ky < 3; ++ky) {
                const long iy = static_cast<long>(oy) + ky - 1;
                if (iy < 0 || iy >= static_cast<long>(h_)) continue;
                for (int kx = 0; kx < 3; ++kx) {
                  const long ix = static_cast<long>(ox) + kx - 1;
                  if (ix < 0 || ix >= static_cast<long>(w_)) continue;
                  acc += conv_w_.w[((f * ch_ + c) * 3 + ky) * 3 + kx] * x[(c * h_ + iy) * w_ + ix];
                }
              }
            y[(f * h_ + oy) * w_ + ox] = acc > 0.0 ? acc : 0.0;
          }
      cur = std::move(y);
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      acts_.push_back(cur);
      const auto& l = layers_[i];
      std::vector<double> y(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        double acc = l.b.w[o];
        for (std::size_t k = 0; k < l.in; ++k) acc += l.w.w[o * l.in + k] * cur[k];
        y[o] = i + 1 == layers_.size() ? 1.0 / (1.0 + std::exp(-acc)) : (acc > 0.0 ? acc : 0.0);
      }
      cur = std::move(y);
    }
    out_ = cur;
    return cur;
  }

  /// Accumulates gradients of the squared error for the last forward pass.
  void backward(const std::vector<double>& target) {
    std::vector<double> delta(out_.size());
    for (std::size_t o = 0; o < out_.size(); ++o)
      delta[o] = 2.0 * (out_[o] - target[o]) / static_cast<double>(out_.size()) * out_[o] * (1.0 - out_[o]);
    for (std::size_t i = layers_.size(); i-- > 0;) {
      auto& l = layers_[i];
      const auto& in = acts_[i];
      std::vector<double> prev(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        l.b.g[o] += delta[o];
        for (std::size_t k = 0; k < l.in; ++k) {
          l.w.g[o * l.in + k] += delta[o] * in[k];
          prev[k] += l.w.w[o * l.in + k] * delta[o];
        }
      }
      // ReLU derivative of the layer input (conv output or hidden dense).
      if (i > 0 || filters_ > 0)
        for (std::size_t k = 0; k < l.in; ++k)
          if (in[k] <= 0.0) prev[k] = 0.0;
      delta = std::move(prev);
    }
    if (filters_ > 0) {
      const auto& x = conv_in_;
      for (std::size_t f = 0; f < filters_; ++f)
        for (std::size_t oy = 0; oy < h_; ++oy)
          for (std::size_t ox = 0; ox < w_; ++ox) {
            const double d = delta[(f * h_ + oy) * w_ + ox];
            if (d == 0.0) continue;
            conv_b_.g[f] += d;
            for (std::size_t c = 0; c < ch_; ++c)
              for (int ky = 0; ky < 3; ++ky) {
                const long iy = static_cast<long>(oy) + ky - 1;
                if (iy < 0 || iy >= static_cast<long>(h_)) continue;
                for (int kx = 0; kx < 3; ++kx) {
                  const long ix = static_cast<long>(ox) + kx - 1;
                  if (ix < 0 || ix >= static_cast<long>(w_)) continue;
                  conv_w_.g[((f * ch_ + c) * 3 + ky) * 3 + kx] += d * x[(c * h_ + iy) * w_ + ix];
                }
              }
          }
    }
  }

  void adam_step(double lr, std::size_t batch, std::size_t t) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t)), c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (Param* p : params()) {
      for (std::size_t i = 0; i < p->w.size(); ++i) {
        const double g = p->g[i] / static_cast<double>(batch);
        p->m[i] = b1 * p->m[i] + (1 - b1) * g;
        p->v[i] = b2 * p->v[i] + (1 - b2) * g * g;
        p->w[i] -= lr * (p->m[i] / c1) / (std::sqrt(p->v[i] / c2) + eps);
        p->g[i] = 0.0;
      }
    }
  }

  std::vector<std::vector<double>> snapshot() {
    std::vector<std::vector<double>> s;
    for (Param* p : params()) s.push_back(p->w);
    return s;
  }
  void restore(const std::vector<std::vector<double>>& s) {
    auto ps = params();
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->w = s[i];
  }

  nn::Network export_network() const {
    auto f32 = [](const std::vector<double>& v) {
      std::vector<float> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
      return out;
    };
    std::vector<nn::Layer> layers;
    if (filters_ > 0) {
      nn::Conv2d c;
      c.in_channels = ch_;
      c.filters = filters_;
      c.kernel = 3;
      c.activation = nn::Activation::relu;
      c.weights = f32(conv_w_.w);
      c.bias = f32(conv_b_.w);
      layers.emplace_back(std::move(c));
    }
    if (shape_.size() != 1) layers.emplace_back(nn::Flatten{});
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      nn::Dense d;
      d.in = layers_[i].in;
      d.out = layers_[i].out;
      d.activation = i + 1 == layers_.size() ? nn::Activation::sigmoid : nn::Activation::relu;
      d.weights = f32(layers_[i].w.w);
      d.bias = f32(layers_[i].b.w);
      layers.emplace_back(std::move(d));
    }
    return nn::Network(shape_, std::move(layers));
  }

 private:
  struct Layer {
    std::size_t in = 0, out = 0;
    Param w, b;
  };
  std::vector<Param*> params() {
    std::vector<Param*> ps;
    if (filters_ > 0) {
      ps.push_back(&conv_w_);
      ps.push_back(&conv_b_);
    }
    for (auto& l : layers_) {
      ps.push_back(&l.w);
      ps.push_back(&l.b);
    }
    return ps;
  }

  std::vector<std::size_t> shape_;
  std::size_t filters_ = 0, ch_ = 0, h_ = 0, w_ = 0;
  Param conv_w_, conv_b_;
  std::vector<Layer> layers_;
  std::vector<double> conv_in_, out_;
  std::vector<std::vector<double>> acts_;
};

double mse(Model& m, const std::vector<Sample>& data, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  double acc = 0.0;
  std::size_t count = 0;
  for (auto i : idx) {
    const auto y = m.forward(data[i].x);
    for (std::size_t o = 0; o < y.size(); ++o) {
      acc += (y[o] - data[i].y[o]) * (y[o] - data[i].y[o]);
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

std::vector<double> local_normalize(const std::vector<double>& s) {
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  std::vector<double> out(s.size(), 0.5);
  if (!(*hi > *lo)) return out;
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = s[i] == *lo ? 0.0 : (s[i] == *hi ? 1.0 : (s[i] - *lo) / (*hi - *lo));
  return out;
}

int run(const std::string& dataset_path, const std::string& config_path, const std::string& out_dir) {
  std::ifstream cf(config_path);
  if (!cf) throw std::runtime_error("cannot open config " + config_path);
  const auto cfg = nlohmann::json::parse(cf);
  const auto seed = cfg.value("seed", std::uint64_t{0});
  const auto epochs = cfg.value("epochs", std::size_t{60});
  const auto batch = std::max<std::size_t>(1, cfg.value("batch_size", std::size_t{32}));
  const double lr = cfg.value("learning_rate", 0.003);
  const auto arch = cfg.value("architecture", nlohmann::json::object());
  const auto filters = arch.value("conv_filters", std::size_t{6});
  const auto dense = arch.value("dense", std::vector<std::size_t>{64, 32});
  const bool normalize = cfg.value("normalization", std::string("local")) == "local";
  auto split = cfg.value("split", std::vector<double>{5, 2, 3});
  if (split.size() != 3 || split[0] <= 0 || split[1] < 0 || split[2] < 0)
    throw std::runtime_error("split must have three non-negative ratios with a positive train share");

  std::vector<Sample> data;
  std::vector<std::size_t> shape;
  {
    std::ifstream in(dataset_path);
    if (!in) throw std::runtime_error("cannot open dataset " + dataset_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      const auto s = j.at("input").at("shape").get<std::vector<std::size_t>>();
      if (shape.empty()) shape = s;
      if (s != shape) throw std::runtime_error("dataset records differ in input shape");
      Sample smp;
      smp.x = j.at("input").at("data").get<std::vector<double>>();
      smp.y = j.at("scores").get<std::vector<double>>();
      if (normalize) smp.y = local_normalize(smp.y);
      data.push_back(std::move(smp));
    }
  }
  if (data.empty()) throw std::runtime_error("empty dataset");
  const std::size_t out_dim = data[0].y.size();
  if (cfg.contains("input_shape") && cfg.at("input_shape").get<std::vector<std::size_t>>() != shape)
    throw std::runtime_error("dataset input shape disagrees with the config");

  Rng rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const double total = split[0] + split[1] + split[2];
  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(data.size() * split[0] / total)));
  const std::size_t n_val = std::min(data.size() - n_train,
                                     static_cast<std::size_t>(std::floor(data.size() * split[1] / total)));
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> val(order.begin() + n_train, order.begin() + n_train + n_val);
  std::vector<std::size_t> test(order.begin() + n_train + n_val, order.end());

  Model model(shape, filters, dense, out_dim, rng);
  std::size_t step = 0, best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  auto best = model.snapshot();
  const auto& select = val.empty() ? train : val;
  for (std::size_t e = 1; e <= epochs; ++e) {
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.below(i)]);
    for (std::size_t b = 0; b < train.size(); b += batch) {
      const std::size_t end = std::min(train.size(), b + batch);
      for (std::size_t k = b; k < end; ++k) {
        model.forward(data[train[k]].x);
        model.backward(data[train[k]].y);
      }
      model.adam_step(lr, end - b, ++step);
    }
    const double v = mse(model, data, select);
    if (v < best_val) {
      best_val = v;
      best_epoch = e;
      best = model.snapshot();
    }
  }
  model.restore(best);
  model.round_to_float();

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto net = model.export_network();
  net.save((fs::path(out_dir) / "network.json").string());

  nlohmann::json vectors = nlohmann::json::array();
  const std::size_t nv = cfg.value("test_vectors", std::size_t{32});
  for (std::size_t k = 0; k < nv; ++k) {
    std::vector<double> x;
    if (k % 2 == 0) {
      x = data[rng.below(data.size())].x;
    } else {
      x.resize(data[0].x.size());
      for (auto& v : x) v = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    const auto y = model.forward(x);
    vectors.push_back({{"input", {{"shape", shape}, {"data", x}}}, {"output", y}});
  }
  std::ofstream((fs::path(out_dir) / "test_vectors.json").string())
      << nlohmann::json{{"format", "polsyn-test-vectors"}, {"version", 1}, {"vectors", vectors}}.dump() << "\n";

  nlohmann::json metrics = {{"train_mse", mse(model, data, train)},
                            {"val_mse", mse(model, data, val)},
                            {"test_mse", mse(model, data, test)},
                            {"epochs", epochs},
                            {"best_epoch", best_epoch},
                            {"split", {{"train", train.size()}, {"val", val.size()}, {"test", test.size()}}},
                            {"split_indices", {{"train", train}, {"val", val}, {"test", test}}}};
  std::ofstream((fs::path(out_dir) / "metrics.json").string()) << metrics.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference trainer (test fixture)"};
  std::string dataset, config, out;
  app.add_option("--dataset", dataset)->required();
  app.add_option("--config", config)->required();
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);
  try {
    return run(dataset, config, out);
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":" << nlohmann::json(e.what()).dump() << "}\n";
    return 1;
  }
}
