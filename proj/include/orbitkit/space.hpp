#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>
#include <vector>

#include "orbitkit/errors.hpp"

namespace orbitkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class NormKind { sup, euclidean, l1 };

inline std::string_view to_string(NormKind kind) {
  switch (kind) {
    case NormKind::sup: return "sup";
    case NormKind::euclidean: return "euclidean";
    case NormKind::l1: return "l1";
  }
  return "euclidean";
}

inline double norm(const Vector& v, NormKind kind) {
  switch (kind) {
    case NormKind::sup: return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    case NormKind::euclidean: return v.norm();
    case NormKind::l1: return v.cwiseAbs().sum();
  }
  return v.norm();
}

/// Operator norm of a matrix induced by `kind` on both sides. Also returns a
/// unit vector at which the norm is attained.
inline std::pair<double, Vector> induced_norm(const Matrix& m, NormKind kind) {
  const auto cols = m.cols();
  Vector arg = Vector::Zero(cols);
  if (cols == 0 || m.rows() == 0) return {0.0, arg};
  switch (kind) {
    case NormKind::l1: {
      Eigen::Index j = 0;
      const double best = m.cwiseAbs().colwise().sum().maxCoeff(&j);
      arg(j) = 1.0;
      return {best, arg};
    }
    case NormKind::sup: {
      Eigen::Index i = 0;
      const double best = m.cwiseAbs().rowwise().sum().maxCoeff(&i);
      for (Eigen::Index j = 0; j < cols; ++j) arg(j) = m(i, j) < 0.0 ? -1.0 : 1.0;
      return {best, arg};
    }
    case NormKind::euclidean: {
      Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
      arg = svd.matrixV().col(0);
      return {svd.singularValues()(0), arg};
    }
  }
  return {0.0, arg};
}

/// Coordinate chart standing for an open set of a Banach space: either R^n or
/// the first n coordinates of l1(N).
struct ChartSpace {
  int dimension = 1;
  NormKind norm_kind = NormKind::euclidean;
  bool truncation_of_l1 = false;

  ChartSpace() = default;
  ChartSpace(int dim, NormKind kind, bool l1_truncation = false)
      : dimension(dim), norm_kind(kind), truncation_of_l1(l1_truncation) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "chart dimension must be >= 1");
  }

  /// l1 for truncations of l1(N), euclidean otherwise.
  static ChartSpace with_default_norm(int dim, bool l1_truncation) {
    return ChartSpace(dim, l1_truncation ? NormKind::l1 : NormKind::euclidean, l1_truncation);
  }

  double norm(const Vector& v) const { return orbitkit::norm(v, norm_kind); }
};

struct Ball {
  Vector center;
  double radius = 1.0;
  NormKind norm_kind = NormKind::euclidean;

  Ball() = default;
  Ball(Vector c, double r, NormKind kind) : center(std::move(c)), radius(r), norm_kind(kind) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
  }

  double distance_from_center(const Vector& p) const { return norm(p - center, norm_kind); }

  bool contains(const Vector& p, double slack = 0.0) const {
    return p.size() == center.size() && distance_from_center(p) <= radius * (1.0 + slack) + slack;
  }

  /// Closed-ball inclusion of `inner` in this ball (same norm assumed).
  bool contains(const Ball& inner) const {
    return inner.center.size() == center.size() &&
           distance_from_center(inner.center) + inner.radius <= radius * (1.0 + 1e-12);
  }
};

/// A finitely supported element of R^A plus an explicit bound on the l1 mass
/// of everything not stored.
class L1Coefficients {
 public:
  struct Entry {
    std::size_t index;
    double value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  L1Coefficients() = default;

  L1Coefficients(std::vector<Entry> entries, double tail_bound = 0.0) : tail_bound_(tail_bound) {
    if (!(tail_bound >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tail bound must be non-negative");
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.index < b.index; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].index == entries[i - 1].index)
        throw Error(ErrorKind::InvalidArgument, "duplicate index in l1 coefficients");
    }
    for (const auto& e : entries) {
      if (!std::isfinite(e.value)) throw Error(ErrorKind::InvalidArgument, "non-finite coefficient");
      if (e.value != 0.0) entries_.push_back(e);
    }
    recompute();
  }

  L1Coefficients(std::initializer_list<Entry> entries, double tail_bound = 0.0)
      : L1Coefficients(std::vector<Entry>(entries), tail_bound) {}

  /// Dense vector -> coefficients on indices 0..n-1.
  static L1Coefficients from_dense(const Vector& v, double tail_bound = 0.0) {
    std::vector<Entry> out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({static_cast<std::size_t>(i), v(i)});
    return L1Coefficients(std::move(out), tail_bound);
  }

  static L1Coefficients unit(std::size_t index, double value = 1.0) { return L1Coefficients({{index, value}}); }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  double tail_bound() const noexcept { return tail_bound_; }
  double norm1() const noexcept { return cached_norm1_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  double value_at(std::size_t index) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const Entry& e, std::size_t i) { return e.index < i; });
    return (it != entries_.end() && it->index == index) ? it->value : 0.0;
  }

  std::size_t max_index() const { return entries_.empty() ? 0 : entries_.back().index; }

  L1Coefficients scaled(double factor) const {
    std::vector<Entry> out;
    for (const auto& e : entries_) out.push_back({e.index, e.value * factor});
    return L1Coefficients(std::move(out), tail_bound_ * std::abs(factor));
  }

  friend L1Coefficients operator+(const L1Coefficients& a, const L1Coefficients& b) {
    std::vector<Entry> out;
    std::size_t i = 0, j = 0;
    const auto& ea = a.entries_;
    const auto& eb = b.entries_;
    while (i < ea.size() || j < eb.size()) {
      if (j == eb.size() || (i < ea.size() && ea[i].index < eb[j].index)) {
        out.push_back(ea[i++]);
      } else if (i == ea.size() || eb[j].index < ea[i].index) {
        out.push_back(eb[j++]);
      } else {
        out.push_back({ea[i].index, ea[i].value + eb[j].value});
        ++i;
        ++j;
      }
    }
    return L1Coefficients(std::move(out), a.tail_bound_ + b.tail_bound_);
  }

  friend bool operator==(const L1Coefficients& a, const L1Coefficients& b) {
    return a.entries_ == b.entries_ && a.tail_bound_ == b.tail_bound_;
  }

 private:
  void recompute() {
    double s = tail_bound_;
    for (const auto& e : entries_) s += std::abs(e.value);
    cached_norm1_ = s;
  }

  std::vector<Entry> entries_;
  double tail_bound_ = 0.0;
  double cached_norm1_ = 0.0;
};

inline double norm1(const L1Coefficients& tau) { return tau.norm1(); }

struct Truncation {
  L1Coefficients kept;
  double tail = 0.0;
};

/// Keeps the first n stored entries in index order; the dropped l1 mass and
/// the incoming tail bound are returned as the new tail.
inline Truncation truncate(const L1Coefficients& tau, std::size_t n) {
  std::vector<L1Coefficients::Entry> kept;
  double dropped = 0.0;
  const auto& entries = tau.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i < n) {
      kept.push_back(entries[i]);
    } else {
      dropped += std::abs(entries[i].value);
    }
  }
  const double tail = dropped + tau.tail_bound();
  return {L1Coefficients(std::move(kept)), tail};
}

}  // namespace orbitkit
