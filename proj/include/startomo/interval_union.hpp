#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace startomo {

template <class T>
struct BasicInterval {
  T lo;
  T hi;

  T length() const { return hi - lo; }
  bool operator==(const BasicInterval&) const = default;
};

/// Finite union of disjoint closed intervals, sorted, with strictly positive
/// gaps between consecutive members. Overlapping or touching inputs are merged
/// on construction.
template <class T>
class BasicIntervalUnion {
 public:
  BasicIntervalUnion() = default;

  explicit BasicIntervalUnion(std::vector<BasicInterval<T>> intervals) {
    for (const auto& iv : intervals) {
      if (iv.hi < iv.lo) throw std::invalid_argument("IntervalUnion: interval with hi < lo");
    }
    std::sort(intervals.begin(), intervals.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
    for (const auto& iv : intervals) {
      if (!intervals_.empty() && !(intervals_.back().hi < iv.lo)) {
        if (intervals_.back().hi < iv.hi) intervals_.back().hi = iv.hi;
      } else {
        intervals_.push_back(iv);
      }
    }
  }

  const std::vector<BasicInterval<T>>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  bool empty() const { return intervals_.empty(); }

  T total_length() const {
    T sum = T(0);
    for (const auto& iv : intervals_) sum += iv.length();
    return sum;
  }

  bool contains(const T& x) const {
    for (const auto& iv : intervals_) {
      if (iv.lo <= x && x <= iv.hi) return true;
    }
    return false;
  }

  bool operator==(const BasicIntervalUnion&) const = default;

 private:
  std::vector<BasicInterval<T>> intervals_;
};

using Interval = BasicInterval<double>;
using IntervalUnion = BasicIntervalUnion<double>;

namespace detail {

template <class T>
T collision_slack() {
  if constexpr (std::is_floating_point_v<T>) {
    return T(16) * std::numeric_limits<T>::epsilon();
  } else {
    return T(0);
  }
}

}  // namespace detail

/// Continuous Steiner symmetrization of a finite interval union at time t.
///
/// Every interval [c - l, c + l] moves as (1 - t) c + [-l, l] until the first
/// time tau at which two neighbours touch; touching intervals merge (all
/// simultaneous contacts in one sweep) and the motion restarts from S^tau J in
/// rescaled time (t - tau) / (1 - tau). Total length is conserved and
/// t = 1 yields [-L/2, L/2]. Works for any ordered field T; with an exact
/// rational type every step is exact.
template <class T>
BasicIntervalUnion<T> css_1d(const BasicIntervalUnion<T>& set, const T& t) {
  if (t < T(0) || t > T(1)) throw std::invalid_argument("css_1d: t must lie in [0, 1]");
  struct Piece {
    T center;
    T half;
  };
  std::vector<Piece> pieces;
  pieces.reserve(set.size());
  for (const auto& iv : set.intervals()) pieces.push_back({(iv.lo + iv.hi) / T(2), (iv.hi - iv.lo) / T(2)});

  T remaining = t;
  const T slack = detail::collision_slack<T>();
  while (pieces.size() > 1) {
    // Contact time of each neighbouring pair: (1-s)(c_{k+1} - c_k) = l_k + l_{k+1}.
    std::vector<T> contact(pieces.size() - 1);
    T tau = T(1);
    for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
      const T distance = pieces[k + 1].center - pieces[k].center;
      T s = T(1) - (pieces[k].half + pieces[k + 1].half) / distance;
      if (s < T(0)) s = T(0);
      contact[k] = s;
      if (s < tau) tau = s;
    }
    // A time within rounding of the contact time counts as the contact.
    if (remaining + slack * (T(1) + tau) < tau) break;
    if (!(tau < T(1))) {
      // Only zero-length pieces meet no earlier than t = 1; everything lands at 0.
      T total = T(0);
      for (const auto& p : pieces) total += p.half;
      pieces = {{T(0), total}};
      remaining = T(0);
      break;
    }

    const T shrink = T(1) - tau;
    std::vector<Piece> merged;
    merged.reserve(pieces.size());
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const T center = shrink * pieces[k].center;
      if (k > 0 && contact[k - 1] <= tau + slack * (T(1) + tau)) {
        // Extend the current group by this piece; the left end stays fixed.
        Piece& group = merged.back();
        const T left = group.center - group.half;
        group.half += pieces[k].half;
        group.center = left + group.half;
      } else {
        merged.push_back({center, pieces[k].half});
      }
    }
    pieces = std::move(merged);
    remaining = (remaining - tau) / shrink;
    if (remaining < T(0)) remaining = T(0);
  }

  const T shrink = T(1) - remaining;
  std::vector<BasicInterval<T>> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back({shrink * p.center - p.half, shrink * p.center + p.half});
  return BasicIntervalUnion<T>(std::move(out));
}

}  // namespace startomo
