#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace modlab {

// Points live in [0,1]^dim with dim 2 or 3; unused trailing coordinates are 0.
using Point = std::array<double, 3>;

struct Box {
  Point lo{};
  Point hi{};
};

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double squared_distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Smallest distance between two closed boxes (0 when they intersect).
inline double box_distance(const Box& a, const Box& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double gap = std::max({0.0, a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

// Largest distance between a point of `a` and a point of `b`.
inline double box_far_distance(const Box& a, const Box& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = std::max(std::abs(a.hi[i] - b.lo[i]), std::abs(b.hi[i] - a.lo[i]));
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool boxes_intersect(const Box& a, const Box& b, int dim, double eps) {
  for (int i = 0; i < dim; ++i) {
    if (a.lo[i] > b.hi[i] + eps || b.lo[i] > a.hi[i] + eps) return false;
  }
  return true;
}

inline bool box_within(const Box& inner, const Box& outer, int dim, double eps) {
  for (int i = 0; i < dim; ++i) {
    if (inner.lo[i] < outer.lo[i] - eps || inner.hi[i] > outer.hi[i] + eps) return false;
  }
  return true;
}

// Distance from p to the segment [a,b].
inline double point_segment_distance(const Point& p, const Point& a, const Point& b, int dim) {
  double len2 = squared_distance(a, b, dim);
  double t = 0.0;
  if (len2 > 0.0) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot += (p[i] - a[i]) * (b[i] - a[i]);
    t = std::clamp(dot / len2, 0.0, 1.0);
  }
  Point q{};
  for (int i = 0; i < dim; ++i) q[i] = a[i] + t * (b[i] - a[i]);
  return distance(p, q, dim);
}

}  // namespace modlab
