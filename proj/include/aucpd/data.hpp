#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aucpd/errors.hpp"
#include "aucpd/numerics.hpp"

namespace aucpd {

// One labeled sample. Binary labels are -1/+1; multi-class labels are 0..c-1.
struct Example {
  Vec x;
  int y = 0;
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t dim = 0;
  int num_classes = 2;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  std::size_t count_label(int y) const {
    std::size_t n = 0;
    for (const auto& e : examples) n += (e.y == y);
    return n;
  }
};

namespace detail {

inline void shuffle_examples(std::vector<Example>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

inline int parse_binary_label(double raw, std::size_t line) {
  if (raw == 1.0 || raw == +1.0) return +1;
  if (raw == 0.0 || raw == -1.0) return -1;
  throw ParseError("label must be one of {0, 1, +1, -1}, got " + std::to_string(raw), line);
}

inline double parse_double(std::string_view tok, std::size_t line, const char* what) {
  double value = 0.0;
  std::string_view body = tok;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);  // from_chars rejects '+'
  const char* first = body.data();
  const char* last = body.data() + body.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || body.empty())
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line);
  return value;
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Bernoulli(p) labels mapped to +1/-1, features Gaussian around the class
// mean with isotropic spread `scale`. mean_pos/mean_neg must have length dim.
inline Dataset gen_two_gaussians(std::size_t n, std::size_t dim, const Vec& mean_pos,
                                 const Vec& mean_neg, double scale, double p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("gen_two_gaussians: p must lie in (0,1)");
  if (!(scale > 0.0)) throw ConfigError("gen_two_gaussians: scale must be positive");
  if (mean_pos.size() != dim || mean_neg.size() != dim)
    throw DimensionError("gen_two_gaussians: mean length != dim");
  Dataset d;
  d.dim = dim;
  d.num_classes = 2;
  d.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.uniform() < p ? +1 : -1;
    const Vec& mean = (y > 0) ? mean_pos : mean_neg;
    Example e;
    e.y = y;
    e.x.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) e.x[k] = mean[k] + scale * rng.normal();
    d.examples.push_back(std::move(e));
  }
  return d;
}

// Keeps floor((1 - drop_frac) * #neg) negatives chosen uniformly without
// replacement, keeps every positive, and shuffles the result. Training-split
// tool; evaluation data should stay untouched.
inline Dataset make_imbalanced(const Dataset& d, double drop_frac, Rng& rng) {
  if (!(drop_frac >= 0.0 && drop_frac < 1.0))
    throw ConfigError("make_imbalanced: drop_frac must lie in [0,1)");
  if (d.num_classes != 2) throw ConfigError("make_imbalanced: binary datasets only");
  std::vector<std::size_t> neg_idx;
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    const int y = d.examples[i].y;
    if (y != +1 && y != -1) throw LabelError("make_imbalanced: non-binary label");
    if (y == -1) neg_idx.push_back(i);
  }
  // nudge before flooring so e.g. (1 - 0.9) * 100 lands on 10, not 9
  const std::size_t keep = static_cast<std::size_t>(
      std::floor((1.0 - drop_frac) * static_cast<double>(neg_idx.size()) + 1e-9));
  // partial Fisher-Yates: the first `keep` entries form the retained sample
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.uniform_index(neg_idx.size() - i);
    std::swap(neg_idx[i], neg_idx[j]);
  }
  neg_idx.resize(keep);

  Dataset out;
  out.dim = d.dim;
  out.num_classes = 2;
  for (const auto& e : d.examples)
    if (e.y == +1) out.examples.push_back(e);
  for (std::size_t i : neg_idx) out.examples.push_back(d.examples[i]);
  detail::shuffle_examples(out.examples, rng);
  return out;
}

// LIBSVM text format: "label idx:val ...", indices 1-based on disk, 0-based in
// memory. dim is the maximum feature index seen across the file.
inline Dataset read_libsvm(const std::string& path, bool binary = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  int max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;
    std::istringstream ss{std::string(sv)};
    std::string tok;
    if (!(ss >> tok)) continue;
    Example e;
    const double raw_label = detail::parse_double(tok, line_no, "label");
    if (binary) {
      e.y = detail::parse_binary_label(raw_label, line_no);
    } else {
      if (raw_label < 0 || raw_label != static_cast<int>(raw_label))
        throw ParseError("multi-class label must be a nonnegative integer", line_no);
      e.y = static_cast<int>(raw_label);
      max_label = std::max(max_label, e.y);
    }
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected idx:val, got '" + tok + "'", line_no);
      const double idx_raw = detail::parse_double(tok.substr(0, colon), line_no, "feature index");
      if (idx_raw < 1 || idx_raw != static_cast<std::size_t>(idx_raw))
        throw ParseError("feature index must be a positive integer", line_no);
      const std::size_t idx = static_cast<std::size_t>(idx_raw) - 1;
      const double val = detail::parse_double(tok.substr(colon + 1), line_no, "feature value");
      if (e.x.size() <= idx) e.x.resize(idx + 1, 0.0);
      e.x[idx] = val;
      d.dim = std::max(d.dim, idx + 1);
    }
    d.examples.push_back(std::move(e));
  }
  if (d.examples.empty()) throw EmptyInputError("empty libsvm file: " + path);
  for (auto& e : d.examples) e.x.resize(d.dim, 0.0);
  d.num_classes = binary ? 2 : max_label + 1;
  return d;
}

inline void write_libsvm(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[64];
  for (const auto& e : d.examples) {
    out << (d.num_classes == 2 ? (e.y > 0 ? "+1" : "-1") : std::to_string(e.y));
    for (std::size_t i = 0; i < e.x.size(); ++i) {
      if (e.x[i] == 0.0) continue;
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), e.x[i]);
      out << ' ' << (i + 1) << ':' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

// CSV with a header row; label_column is a 0-based column index. Missing
// cells are an error rather than imputed.
inline Dataset read_csv(const std::string& path, std::size_t label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw EmptyInputError("empty csv file: " + path);
  ++line_no;
  const std::size_t num_cols =
      static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (label_column >= num_cols)
    throw ConfigError("read_csv: label_column " + std::to_string(label_column) +
                      " out of range for " + std::to_string(num_cols) + " columns");
  Dataset d;
  d.dim = num_cols - 1;
  d.num_classes = 2;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = detail::strip_cr(line);
    if (sv.empty()) continue;
    Example e;
    e.x.reserve(d.dim);
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = sv.find(',', start);
      const std::string_view cell =
          sv.substr(start, comma == std::string_view::npos ? comma : comma - start);
      if (cell.empty()) throw ParseError("missing cell in column " + std::to_string(col), line_no);
      const double v = detail::parse_double(cell, line_no, "cell");
      if (col == label_column)
        e.y = detail::parse_binary_label(v, line_no);
      else
        e.x.push_back(v);
      ++col;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (col != num_cols)
      throw ParseError("expected " + std::to_string(num_cols) + " columns, got " +
                           std::to_string(col),
                       line_no);
    d.examples.push_back(std::move(e));
  }
  if (d.examples.empty()) throw EmptyInputError("csv has a header but no rows: " + path);
  return d;
}

// Deterministic i.i.d. example source. Single consumer; derive per-worker
// streams from split seeds when running in parallel.
class ExampleStream {
 public:
  static ExampleStream two_gaussians(std::size_t dim, Vec mean_pos, Vec mean_neg, double scale,
                                     double p, Rng rng) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("ExampleStream: p must lie in (0,1)");
    ExampleStream s;
    s.dim_ = dim;
    s.gen_ = [dim, mp = std::move(mean_pos), mn = std::move(mean_neg), scale, p,
              rng]() mutable -> Example {
      const int y = rng.uniform() < p ? +1 : -1;
      const Vec& mean = (y > 0) ? mp : mn;
      Example e;
      e.y = y;
      e.x.resize(dim);
      for (std::size_t k = 0; k < dim; ++k) e.x[k] = mean[k] + scale * rng.normal();
      return e;
    };
    return s;
  }

  // Uniform draws with replacement; `d` must outlive the stream.
  static ExampleStream from_dataset(const Dataset* d, Rng rng) {
    if (d == nullptr || d->empty()) throw EmptyInputError("ExampleStream: empty dataset");
    ExampleStream s;
    s.dim_ = d->dim;
    s.gen_ = [d, rng]() mutable -> Example {
      return d->examples[rng.uniform_index(d->examples.size())];
    };
    return s;
  }

  Example next() { return gen_(); }
  std::size_t dim() const { return dim_; }

 private:
  std::function<Example()> gen_;
  std::size_t dim_ = 0;
};

}  // namespace aucpd
