#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "wptlab/error.hpp"

namespace wptlab {

struct QuadratureSettings {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int max_subdivisions = 4000;

  void validate() const {
    require(rel_tol > 0.0 && abs_tol > 0.0, "quadrature: tolerances must be > 0");
    require(max_subdivisions >= 1, "quadrature: max_subdivisions must be >= 1");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
};

namespace detail {

struct Gk15Estimate {
  double kronrod = 0.0;
  double gauss = 0.0;
};

// 15-point Kronrod extension of the 7-point Gauss rule. No node sits on an
// interval end point.
template <class F>
Gk15Estimate gk15(F& f, double lo, double hi) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                   0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * sum;
    if (j % 2 == 1) gauss += wg[j / 2] * sum;
  }
  return {kronrod * half, gauss * half};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod on a finite interval: repeatedly bisects the
// interval with the largest |K15 - G7| until the summed error is within
// max(abs_tol, rel_tol |I|). Throws ConvergenceError past max_subdivisions.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi, double abs_tol, double rel_tol,
                                    int max_subdivisions) {
  struct Segment {
    double lo, hi, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
  };
  QuadratureResult result;
  if (hi == lo) return result;
  auto make = [&](double a, double b) {
    const auto est = detail::gk15(f, a, b);
    return Segment{a, b, est.kronrod, std::abs(est.kronrod - est.gauss)};
  };
  std::priority_queue<Segment> heap;
  std::vector<Segment> frozen;  // too narrow to split further
  Segment first = make(lo, hi);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (heap.empty()) break;
    if (result.subdivisions >= max_subdivisions) {
      throw ConvergenceError("adaptive quadrature: tolerance not met within the subdivision budget");
    }
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      frozen.push_back(worst);
      continue;
    }
    const Segment left = make(worst.lo, mid);
    const Segment right = make(mid, worst.hi);
    ++result.subdivisions;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the leaves so the incremental updates leave no drift.
  total = 0.0;
  error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    total += heap.top().value;
    error += heap.top().error;
  }
  for (const auto& s : frozen) {
    total += s.value;
    error += s.error;
  }
  if (error > std::max(abs_tol, rel_tol * std::abs(total))) {
    throw ConvergenceError("adaptive quadrature: round-off limits accuracy below the requested tolerance");
  }
  result.value = total;
  result.abs_error = error;
  return result;
}

}  // namespace wptlab
