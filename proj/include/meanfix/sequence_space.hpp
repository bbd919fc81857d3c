#pragma once

// Finitely supported elements of ℓ^p.
//
// An infinite sequence is represented by its leading coefficients; every
// coordinate past the stored support is zero. Two vectors compare equal when
// they agree after zero-padding, so trailing zeros are immaterial.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "meanfix/errors.hpp"

namespace meanfix {

/// Shortest decimal string that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  return value;
}

class SeqVector {
 public:
  SeqVector() = default;

  explicit SeqVector(std::vector<double> coeffs, double p = 2.0)
      : coeffs_(std::move(coeffs)), p_(p) {
    validate();
  }

  SeqVector(std::initializer_list<double> coeffs, double p = 2.0)
      : SeqVector(std::vector<double>(coeffs), p) {}

  static SeqVector zero(double p = 2.0) { return SeqVector(std::vector<double>{}, p); }

  double p() const noexcept { return p_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  /// Coordinate `index` (1-based); zero beyond the stored support.
  double coord(std::size_t index) const noexcept {
    return index >= 1 && index <= coeffs_.size() ? coeffs_[index - 1] : 0.0;
  }

  /// Number of coordinates up to and including the last nonzero one.
  std::size_t support() const noexcept {
    std::size_t n = coeffs_.size();
    while (n > 0 && coeffs_[n - 1] == 0.0) --n;
    return n;
  }

  bool is_zero() const noexcept { return support() == 0; }

  /// Copy restricted to the first `dim` coordinates.
  SeqVector truncated(std::size_t dim) const {
    std::vector<double> c(coeffs_.begin(), coeffs_.begin() + std::min(dim, coeffs_.size()));
    return SeqVector(std::move(c), p_);
  }

  /// Same coefficients viewed in another ℓ^p.
  SeqVector with_p(double p) const { return SeqVector(coeffs_, p); }

  friend bool operator==(const SeqVector& a, const SeqVector& b) noexcept {
    if (a.p_ != b.p_) return false;
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 1; i <= n; ++i)
      if (a.coord(i) != b.coord(i)) return false;
    return true;
  }

 private:
  void validate() const {
    if (!(p_ >= 1.0) || !std::isfinite(p_))
      throw InvalidArgument("SeqVector: exponent p must be a finite real >= 1");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw InvalidArgument("SeqVector: coefficients must be finite");
  }

  std::vector<double> coeffs_;
  double p_ = 2.0;
};

/// ℓ^p norm (Σ|x_j|^p)^{1/p}, rescaled by the largest entry to avoid overflow.
inline double norm(const SeqVector& x) {
  double scale = 0.0;
  for (double c : x.coeffs()) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return 0.0;
  const double p = x.p();
  double sum = 0.0;
  if (p == 2.0) {
    for (double c : x.coeffs()) {
      const double t = c / scale;
      sum += t * t;
    }
    return scale * std::sqrt(sum);
  }
  if (p == 1.0) {
    for (double c : x.coeffs()) sum += std::abs(c);
    return sum;
  }
  for (double c : x.coeffs()) sum += std::pow(std::abs(c) / scale, p);
  return scale * std::pow(sum, 1.0 / p);
}

namespace detail {

inline void require_same_space(const SeqVector& a, const SeqVector& b, const char* op) {
  if (a.p() != b.p())
    throw AmbientSpaceError(std::string(op) + ": operands live in l^" + format_double(a.p()) +
                            " and l^" + format_double(b.p()));
}

template <class F>
SeqVector zip(const SeqVector& a, const SeqVector& b, F f) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a.coord(i + 1), b.coord(i + 1));
  return SeqVector(std::move(out), a.p());
}

}  // namespace detail

inline SeqVector operator+(const SeqVector& a, const SeqVector& b) {
  detail::require_same_space(a, b, "add");
  return detail::zip(a, b, [](double u, double v) { return u + v; });
}

inline SeqVector operator-(const SeqVector& a, const SeqVector& b) {
  detail::require_same_space(a, b, "subtract");
  return detail::zip(a, b, [](double u, double v) { return u - v; });
}

inline SeqVector operator*(double c, const SeqVector& x) {
  std::vector<double> out(x.coeffs());
  for (double& v : out) v *= c;
  return SeqVector(std::move(out), x.p());
}

inline SeqVector operator-(const SeqVector& x) { return -1.0 * x; }

inline double distance(const SeqVector& a, const SeqVector& b) { return norm(a - b); }

/// Canonical unit vector e_n (n is 1-based).
inline SeqVector basis(std::size_t n, double p = 2.0) {
  if (n == 0) throw InvalidArgument("basis: index must be >= 1");
  std::vector<double> c(n, 0.0);
  c[n - 1] = 1.0;
  return SeqVector(std::move(c), p);
}

/// x ↦ x_index, the coordinate functionals that metrize the weak topology on
/// bounded subsets of ℓ^p.
class CoordinateFunctional {
 public:
  explicit CoordinateFunctional(std::size_t index) : index_(index) {
    if (index == 0) throw InvalidArgument("CoordinateFunctional: index must be >= 1");
  }
  std::size_t index() const noexcept { return index_; }
  double operator()(const SeqVector& x) const noexcept { return x.coord(index_); }

 private:
  std::size_t index_;
};

/// Pairing Σ f_j x_j of a dual sequence with a primal one.
inline double pairing(const SeqVector& functional, const SeqVector& x) {
  const std::size_t n = std::min(functional.size(), x.size());
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) s += functional.coord(i) * x.coord(i);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const SeqVector& x) {
  j = nlohmann::json{{"p", x.p()}, {"coeffs", x.coeffs()}};
}

inline void from_json(const nlohmann::json& j, SeqVector& x) {
  x = SeqVector(j.at("coeffs").get<std::vector<double>>(), j.at("p").get<double>());
}

/// "index,value" rows (1-based index) under a header line.
inline std::string to_csv(const SeqVector& x) {
  std::string out = "index,value\n";
  for (std::size_t i = 1; i <= x.size(); ++i)
    out += std::to_string(i) + "," + format_double(x.coord(i)) + "\n";
  return out;
}

inline SeqVector from_csv(const std::string& text, double p) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> coeffs;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "index,value") continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("from_csv: expected 'index,value'");
    const double idx = parse_double(std::string_view(line).substr(0, comma));
    if (idx < 1 || idx != std::floor(idx)) throw InvalidArgument("from_csv: bad index");
    const auto i = static_cast<std::size_t>(idx);
    if (coeffs.size() < i) coeffs.resize(i, 0.0);
    coeffs[i - 1] = parse_double(std::string_view(line).substr(comma + 1));
  }
  return SeqVector(std::move(coeffs), p);
}

inline std::string to_string(const SeqVector& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += format_double(x.coeffs()[i]);
  }
  return s + ")";
}

}  // namespace meanfix
