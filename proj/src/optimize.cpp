#include "stimtomo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace stimtomo {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr int kMaxBracket = 40;
constexpr int kMaxZoom = 40;
// Gradient level accepted when the line search stalls at rounding noise.
constexpr double kStallGradient = 1e-7;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Probe {
  double alpha;
  double f;
  double slope;  // directional derivative
  std::vector<double> x;
  std::vector<double> g;
};

class LineSearch {
 public:
  LineSearch(const Objective& objective, std::span<const double> x,
             std::span<const double> p, double f0, double slope0)
      : objective_(objective), x_(x), p_(p), f0_(f0), slope0_(slope0) {}

  Probe eval(double alpha) const {
    Probe pr{alpha, 0.0, 0.0, std::vector<double>(x_.size()),
             std::vector<double>(x_.size())};
    for (std::size_t i = 0; i < x_.size(); ++i) pr.x[i] = x_[i] + alpha * p_[i];
    pr.f = objective_(pr.x, pr.g);
    pr.slope = dot(pr.g, p_);
    return pr;
  }

  bool armijo(const Probe& pr) const {
    return pr.f <= f0_ + kC1 * pr.alpha * slope0_;
  }
  bool curvature(const Probe& pr) const {
    return std::abs(pr.slope) <= -kC2 * slope0_;
  }

  // Strong-Wolfe search; returns the best decreasing probe if Wolfe fails.
  std::optional<Probe> run(double alpha1) const {
    Probe prev{0.0, f0_, slope0_, {x_.begin(), x_.end()}, {}};
    std::optional<Probe> best;
    auto keep = [&](const Probe& pr) {
      if (pr.f < f0_ && (!best || pr.f < best->f)) best = pr;
    };
    double alpha = alpha1;
    for (int i = 0; i < kMaxBracket; ++i) {
      Probe cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha *= 0.1;
        continue;
      }
      keep(cur);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, best);
      }
      if (curvature(cur)) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev, best);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return best;
  }

 private:
  std::optional<Probe> zoom(Probe lo, Probe hi, std::optional<Probe> best) const {
    for (int i = 0; i < kMaxZoom; ++i) {
      const double a = lo.alpha, b = hi.alpha;
      const double width = b - a;
      // Quadratic through (lo.f, lo.slope) and hi.f, safeguarded.
      double alpha = 0.5 * (a + b);
      const double denom = 2.0 * (hi.f - lo.f - lo.slope * width);
      if (denom != 0.0) {
        const double cand = a - lo.slope * width * width / denom;
        const double lo_b = std::min(a, b) + 0.1 * std::abs(width);
        const double hi_b = std::max(a, b) - 0.1 * std::abs(width);
        if (std::isfinite(cand) && cand > lo_b && cand < hi_b) alpha = cand;
      }
      if (std::abs(width) < 1e-18 * std::max(1.0, std::abs(a))) break;
      Probe cur = eval(alpha);
      if (std::isfinite(cur.f) && cur.f < f0_ && (!best || cur.f < best->f)) {
        best = cur;
      }
      if (!std::isfinite(cur.f) || !armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (curvature(cur)) return cur;
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return best;
  }

  const Objective& objective_;
  std::span<const double> x_;
  std::span<const double> p_;
  double f0_;
  double slope0_;
};

void set_identity(std::vector<double>& h, std::size_t n, double scale) {
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& objective, std::vector<double> x0,
                             const MinimizeOptions& opts) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  std::vector<double> g(n);
  res.value = objective(res.x, g);

  std::vector<double> h(n * n);
  set_identity(h, n, 1.0);
  bool fresh = true;  // h is a (scaled) identity
  std::vector<double> p(n), s(n), y(n), hy(n);

  for (res.iterations = 0; res.iterations < opts.max_iterations;
       ++res.iterations) {
    if (res.value <= opts.target_value || max_abs(g) <= opts.gradient_tolerance) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= h[i * n + j] * g[j];
      p[i] = acc;
    }
    double slope = dot(p, g);
    if (!(slope < 0.0)) {
      set_identity(h, n, 1.0);
      fresh = true;
      for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
      slope = dot(p, g);
    }
    const double alpha1 =
        fresh ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
    const LineSearch search(objective, res.x, p, res.value, slope);
    auto probe = search.run(alpha1);
    if (!probe) {
      if (!fresh) {
        // Stale curvature; retry along steepest descent.
        set_identity(h, n, 1.0);
        fresh = true;
        continue;
      }
      res.converged = max_abs(g) <= kStallGradient;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = probe->x[i] - res.x[i];
      y[i] = probe->g[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-14 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (fresh) set_identity(h, n, sy / dot(y, y));
      fresh = false;
      // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
      const double r = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += h[i * n + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h[i * n + j] += -r * (hy[i] * s[j] + s[i] * hy[j]) +
                          (r * r * yhy + r) * s[i] * s[j];
    }
    res.x = std::move(probe->x);
    g = std::move(probe->g);
    res.value = probe->f;
  }
  res.converged =
      res.value <= opts.target_value || max_abs(g) <= opts.gradient_tolerance;
  return res;
}

}  // namespace stimtomo
