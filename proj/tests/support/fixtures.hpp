#pragma once

#include "amedlab/rng.hpp"
#include "amedlab/score_model.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

namespace amedlab::testing {

// K components with means of norm `radius` in random directions and stds in
// [std_lo, std_hi]. Deterministic in `seed`.
inline GaussianMixture random_mixture(int K, int d, std::uint64_t seed, double radius = 2.0, double std_lo = 0.3,
                                      double std_hi = 0.8) {
  CounterRng rng(seed, 0x6A77);
  std::vector<double> w;
  std::vector<Vector> mu;
  std::vector<double> s;
  for (int k = 0; k < K; ++k) {
    Vector m(d);
    for (int i = 0; i < d; ++i) m[i] = rng.normal();
    mu.push_back(m * (radius / m.norm()));
    w.push_back(0.5 + rng.uniform());
    s.push_back(std_lo + (std_hi - std_lo) * rng.uniform());
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  // renormalising can leave the sum one ulp away from 1
  double rest = 1.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) rest -= w[k];
  w.back() = rest;
  return GaussianMixture(w, mu, s);
}

inline GaussianMixture k1_model(int d = 4, double s = 1.0) {
  Vector mu(d);
  for (int i = 0; i < d; ++i) mu[i] = 0.7 * std::sin(1.3 * i + 0.4) + 0.2 * i;
  return GaussianMixture::single(mu, s);
}

// Adaptive Simpson on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int level) {
        double mid = 0.5 * (lo + hi);
        double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        double flm = f(lm), frm = f(rm);
        double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (level <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, eps / 2.0, level - 1) +
               rec(mid, hi, fmid, frm, fhi, right, eps / 2.0, level - 1);
      };
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

inline bool bitwise_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace amedlab::testing
