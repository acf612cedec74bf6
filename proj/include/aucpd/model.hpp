#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <string>

#include <json.hpp>

#include "aucpd/data.hpp"
#include "aucpd/errors.hpp"
#include "aucpd/numerics.hpp"

namespace aucpd {

// Three scorer families:
//   linear_sigmoid  h = sigmoid(w.x), output in (0,1)
//   leaky_relu_raw  h = lrelu(w.x), unbounded; positively homogeneous in w
//   mlp_sigmoid     one hidden layer, leaky-relu activations, sigmoid output
enum class ModelKind { linear_sigmoid, leaky_relu_raw, mlp_sigmoid };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::linear_sigmoid: return "linear_sigmoid";
    case ModelKind::leaky_relu_raw: return "leaky_relu_raw";
    case ModelKind::mlp_sigmoid: return "mlp_sigmoid";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear_sigmoid") return ModelKind::linear_sigmoid;
  if (s == "leaky_relu_raw") return ModelKind::leaky_relu_raw;
  if (s == "mlp_sigmoid") return ModelKind::mlp_sigmoid;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct ModelArch {
  ModelKind kind = ModelKind::linear_sigmoid;
  std::size_t input_dim = 0;
  std::size_t hidden = 16;  // mlp_sigmoid only
  double c1 = 1.0;          // leaky-relu slope, z > 0
  double c2 = 0.01;         // leaky-relu slope, z <= 0

  std::size_t param_count() const {
    switch (kind) {
      case ModelKind::linear_sigmoid:
      case ModelKind::leaky_relu_raw:
        return input_dim;
      case ModelKind::mlp_sigmoid:
        // [W1 (hidden x d), b1 (hidden), w2 (hidden), b2]
        return hidden * input_dim + 2 * hidden + 1;
    }
    return 0;
  }

  bool sigmoid_output() const { return kind != ModelKind::leaky_relu_raw; }
};

struct Model {
  ModelArch arch;
  Vec w;
};

struct ScoreAndGrad {
  double h = 0.0;
  Vec grad_w;
};

namespace detail {

// Saturation clamp keeps sigmoid outputs strictly inside (0,1) even when the
// pre-activation overflows the representable range.
inline double sigmoid(double z) {
  double h;
  if (z >= 0.0) {
    h = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    h = e / (1.0 + e);
  }
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;  // largest double < 1
  const double lo = std::numeric_limits<double>::min();
  return std::min(std::max(h, lo), hi);
}

inline double lrelu(double z, double c1, double c2) { return z > 0.0 ? c1 * z : c2 * z; }
inline double lrelu_slope(double z, double c1, double c2) { return z > 0.0 ? c1 : c2; }

inline void check_input(const ModelArch& arch, std::span<const double> w,
                        std::span<const double> x) {
  if (x.size() != arch.input_dim)
    throw DimensionError("model: input has dim " + std::to_string(x.size()) + ", arch expects " +
                         std::to_string(arch.input_dim));
  if (w.size() != arch.param_count())
    throw DimensionError("model: parameter vector has length " + std::to_string(w.size()) +
                         ", arch expects " + std::to_string(arch.param_count()));
}

}  // namespace detail

inline double forward(const ModelArch& arch, std::span<const double> w,
                      std::span<const double> x) {
  detail::check_input(arch, w, x);
  switch (arch.kind) {
    case ModelKind::linear_sigmoid:
      return detail::sigmoid(dot(w, x));
    case ModelKind::leaky_relu_raw:
      return detail::lrelu(dot(w, x), arch.c1, arch.c2);
    case ModelKind::mlp_sigmoid: {
      const std::size_t d = arch.input_dim, hdim = arch.hidden;
      const double* W1 = w.data();
      const double* b1 = W1 + hdim * d;
      const double* w2 = b1 + hdim;
      const double b2 = w2[hdim];
      double z2 = b2;
      for (std::size_t i = 0; i < hdim; ++i) {
        double z1 = b1[i];
        for (std::size_t j = 0; j < d; ++j) z1 += W1[i * d + j] * x[j];
        z2 += w2[i] * detail::lrelu(z1, arch.c1, arch.c2);
      }
      return detail::sigmoid(z2);
    }
  }
  throw ConfigError("forward: unknown model kind");
}

inline ScoreAndGrad forward_grad(const ModelArch& arch, std::span<const double> w,
                                 std::span<const double> x) {
  detail::check_input(arch, w, x);
  ScoreAndGrad out;
  out.grad_w.assign(w.size(), 0.0);
  switch (arch.kind) {
    case ModelKind::linear_sigmoid: {
      const double h = detail::sigmoid(dot(w, x));
      out.h = h;
      const double s = h * (1.0 - h);
      for (std::size_t j = 0; j < x.size(); ++j) out.grad_w[j] = s * x[j];
      return out;
    }
    case ModelKind::leaky_relu_raw: {
      const double z = dot(w, x);
      out.h = detail::lrelu(z, arch.c1, arch.c2);
      const double s = detail::lrelu_slope(z, arch.c1, arch.c2);
      for (std::size_t j = 0; j < x.size(); ++j) out.grad_w[j] = s * x[j];
      return out;
    }
    case ModelKind::mlp_sigmoid: {
      const std::size_t d = arch.input_dim, hdim = arch.hidden;
      const double* W1 = w.data();
      const double* b1 = W1 + hdim * d;
      const double* w2 = b1 + hdim;
      const double b2 = w2[hdim];
      Vec z1(hdim), a1(hdim);
      double z2 = b2;
      for (std::size_t i = 0; i < hdim; ++i) {
        double z = b1[i];
        for (std::size_t j = 0; j < d; ++j) z += W1[i * d + j] * x[j];
        z1[i] = z;
        a1[i] = detail::lrelu(z, arch.c1, arch.c2);
        z2 += w2[i] * a1[i];
      }
      const double h = detail::sigmoid(z2);
      out.h = h;
      const double dz2 = h * (1.0 - h);
      double* gW1 = out.grad_w.data();
      double* gb1 = gW1 + hdim * d;
      double* gw2 = gb1 + hdim;
      gw2[hdim] = dz2;  // b2
      for (std::size_t i = 0; i < hdim; ++i) {
        gw2[i] = dz2 * a1[i];
        const double da1 = dz2 * w2[i] * detail::lrelu_slope(z1[i], arch.c1, arch.c2);
        gb1[i] = da1;
        for (std::size_t j = 0; j < d; ++j) gW1[i * d + j] = da1 * x[j];
      }
      return out;
    }
  }
  throw ConfigError("forward_grad: unknown model kind");
}

inline double forward(const Model& m, std::span<const double> x) {
  return forward(m.arch, m.w, x);
}

inline ScoreAndGrad forward_grad(const Model& m, std::span<const double> x) {
  return forward_grad(m.arch, m.w, x);
}

// Gaussian init, per-layer std 1/sqrt(fan_in); biases zero.
inline Model make_model(const ModelArch& arch, Rng& rng) {
  Model m;
  m.arch = arch;
  m.w.assign(arch.param_count(), 0.0);
  switch (arch.kind) {
    case ModelKind::linear_sigmoid:
    case ModelKind::leaky_relu_raw: {
      const double s = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, arch.input_dim)));
      for (auto& v : m.w) v = s * rng.normal();
      break;
    }
    case ModelKind::mlp_sigmoid: {
      const std::size_t d = arch.input_dim, hdim = arch.hidden;
      const double s1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, d)));
      const double s2 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, hdim)));
      for (std::size_t i = 0; i < hdim * d; ++i) m.w[i] = s1 * rng.normal();
      for (std::size_t i = 0; i < hdim; ++i) m.w[hdim * d + hdim + i] = s2 * rng.normal();
      break;
    }
  }
  return m;
}

// Empirical lower bound for the score-gradient Lipschitz constant:
// max over the data of ||grad_w h||_2.
inline double lipschitz_estimate(const Model& m, const Dataset& data) {
  if (data.empty()) throw EmptyInputError("lipschitz_estimate: empty dataset");
  double best = 0.0;
  for (const auto& e : data.examples) {
    const auto sg = forward_grad(m, e.x);
    best = std::max(best, norm2(sg.grad_w));
  }
  return best;
}

inline nlohmann::ordered_json model_to_json(const Model& m) {
  nlohmann::ordered_json j;
  j["arch"] = {{"kind", to_string(m.arch.kind)},
               {"input_dim", m.arch.input_dim},
               {"hidden", m.arch.hidden},
               {"c1", m.arch.c1},
               {"c2", m.arch.c2}};
  j["w"] = m.w;
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  Model m;
  const auto& a = j.at("arch");
  m.arch.kind = model_kind_from_string(a.at("kind").get<std::string>());
  m.arch.input_dim = a.at("input_dim").get<std::size_t>();
  m.arch.hidden = a.at("hidden").get<std::size_t>();
  m.arch.c1 = a.at("c1").get<double>();
  m.arch.c2 = a.at("c2").get<double>();
  m.w = j.at("w").get<Vec>();
  if (m.w.size() != m.arch.param_count())
    throw ConfigError("model checkpoint: parameter count does not match arch");
  return m;
}

inline void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << model_to_json(m).dump(2) << '\n';
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace aucpd
