#include "cfmpp/skorohod.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace cfmpp {

// ---------------------------------------------------------------------------
// Warp

Warp::Warp(std::vector<double> from, std::vector<double> to)
    : from_(std::move(from)), to_(std::move(to)) {
  if (from_.size() != to_.size() || from_.size() < 2) {
    throw ValidationError("warp: need at least two matching knots");
  }
  for (std::size_t k = 1; k < from_.size(); ++k) {
    if (!(from_[k] > from_[k - 1]) || !(to_[k] > to_[k - 1])) {
      throw ValidationError("warp: knots must be strictly increasing");
    }
  }
}

Warp Warp::identity(double start, double end) { return Warp({start, end}, {start, end}); }

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto k = static_cast<std::size_t>(it - xs.begin()) - 1;
  return ys[k] + (ys[k + 1] - ys[k]) * (x - xs[k]) / (xs[k + 1] - xs[k]);
}

}  // namespace

double Warp::operator()(double t) const { return interpolate(from_, to_, t); }

double Warp::inverse(double s) const { return interpolate(to_, from_, s); }

double Warp::log_slope_bound() const {
  double gamma = 0.0;
  for (std::size_t k = 1; k < from_.size(); ++k) {
    const double slope = (to_[k] - to_[k - 1]) / (from_[k] - from_[k - 1]);
    gamma = std::max(gamma, std::abs(std::log(slope)));
  }
  return gamma;
}

// ---------------------------------------------------------------------------
// Warp cost

namespace {

void check_pair(const CadlagPath& f, const CadlagPath& g) {
  if (f.empty() || g.empty()) throw ValidationError("skorohod: empty path");
  if (f.front() != g.front() || f.back() != g.back()) {
    throw ValidationError("skorohod: paths live on different ambient intervals");
  }
  if (!(f.back() > f.front())) throw ValidationError("skorohod: degenerate ambient interval");
}

std::vector<double> breakpoints(const CadlagPath& p) {
  std::vector<double> b = p.grid();
  const double lo = p.front();
  const double hi = p.back();
  for (double e : {p.support().start, p.support().end}) {
    if (e >= lo && e <= hi) b.push_back(e);
  }
  return b;
}

void sort_unique_clip(std::vector<double>& v, double lo, double hi) {
  for (double& x : v) x = std::clamp(x, lo, hi);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

double capped(double d) { return std::min(std::abs(d), 1.0); }

}  // namespace

double warped_mismatch_integral(const CadlagPath& f, const CadlagPath& g, const Warp& warp) {
  check_pair(f, g);
  const double lo = f.front();
  const double hi = f.back();

  const std::vector<double> bf = breakpoints(f);
  const std::vector<double> bg = breakpoints(g);

  std::vector<double> candidates = bf;
  for (double s : bg) candidates.push_back(warp.inverse(s));
  candidates.insert(candidates.end(), warp.from().begin(), warp.from().end());
  candidates.push_back(lo);
  candidates.push_back(hi);
  sort_unique_clip(candidates, lo, hi);

  std::vector<double> us = candidates;
  us.insert(us.end(), bg.begin(), bg.end());
  for (double t : bf) us.push_back(warp(t));
  us.insert(us.end(), warp.to().begin(), warp.to().end());
  sort_unique_clip(us, lo, hi);

  // Values along the candidate times do not depend on u.
  std::vector<double> warped(candidates.size());
  std::vector<double> f_at(candidates.size());
  std::vector<double> g_at(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    warped[k] = warp(candidates[k]);
    f_at[k] = f(candidates[k]);
    g_at[k] = g(warped[k]);
  }

  std::vector<double> sup(us.size(), 0.0);
  for (std::size_t k = 0; k < us.size(); ++k) {
    const double u = us[k];
    const double fu = f(u);
    const double gu = g(u);
    double s = capped(f(u) - g(std::min(warp(u), u)));
    const double back = warp.inverse(u);
    s = std::max(s, capped(f(std::min(back, u)) - g(u)));
    for (std::size_t c = 0; c < candidates.size() && s < 1.0; ++c) {
      const double fv = candidates[c] <= u ? f_at[c] : fu;
      const double gv = warped[c] <= u ? g_at[c] : gu;
      s = std::max(s, capped(fv - gv));
    }
    sup[k] = s;
  }

  const bool linear =
      f.mode() == Interpolation::Linear || g.mode() == Interpolation::Linear;
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < us.size(); ++k) {
    const double mass = std::exp(-us[k]) - std::exp(-us[k + 1]);
    integral += mass * (linear ? 0.5 * (sup[k] + sup[k + 1]) : sup[k]);
  }
  return integral;
}

double warp_cost(const CadlagPath& f, const CadlagPath& g, const Warp& warp) {
  return std::max(warp.log_slope_bound(), warped_mismatch_integral(f, g, warp));
}

// ---------------------------------------------------------------------------
// Lattice dynamic program

namespace {

/// Minimizer of the decomposable lower bound over lattice warps.
Warp lattice_candidate(const CadlagPath& f, const CadlagPath& g, int n) {
  const double lo = f.front();
  const double hi = f.back();
  const double h = (hi - lo) / static_cast<double>(n - 1);
  const auto N = static_cast<std::size_t>(n);

  std::vector<double> tau(N);
  for (std::size_t i = 0; i < N; ++i) tau[i] = lo + h * static_cast<double>(i);
  tau.back() = hi;

  std::vector<double> f_at(N);
  for (std::size_t i = 0; i < N; ++i) f_at[i] = f(tau[i]);
  std::vector<double> log_int(N);
  for (std::size_t k = 1; k < N; ++k) log_int[k] = std::log(static_cast<double>(k));

  const double tail = std::exp(-hi);
  auto mismatch = [&](std::size_t i, double s) {
    const double weight = std::exp(-std::max(tau[i], s)) - tail;
    return weight * capped(f_at[i] - g(s));
  };

  std::vector<double> best(N * N, kInfinity);
  std::vector<std::size_t> parent(N * N, 0);
  auto at = [N](std::size_t a, std::size_t c) { return a * N + c; };
  best[at(0, 0)] = mismatch(0, tau[0]);

  for (std::size_t a = 1; a < N; ++a) {
    for (std::size_t c = 1; c < N; ++c) {
      double current = kInfinity;
      std::size_t from = 0;
      for (std::size_t a0 = a; a0-- > 0;) {
        for (std::size_t c0 = c; c0-- > 0;) {
          const double base = best[at(a0, c0)];
          if (base >= current) continue;
          const double slope_cost = std::abs(log_int[c - c0] - log_int[a - a0]);
          double bound = std::max(base, slope_cost);
          if (bound >= current) continue;
          const double span_t = static_cast<double>(a - a0);
          bool pruned = false;
          for (std::size_t i = a0 + 1; i <= a; ++i) {
            const double s = (i == a) ? tau[c]
                                      : tau[c0] + (tau[c] - tau[c0]) *
                                                      static_cast<double>(i - a0) / span_t;
            bound = std::max(bound, mismatch(i, s));
            if (bound >= current) {
              pruned = true;
              break;
            }
          }
          if (!pruned) {
            current = bound;
            from = at(a0, c0);
          }
        }
      }
      best[at(a, c)] = current;
      parent[at(a, c)] = from;
    }
  }

  std::vector<double> from_knots;
  std::vector<double> to_knots;
  std::size_t node = at(N - 1, N - 1);
  while (true) {
    const std::size_t a = node / N;
    const std::size_t c = node % N;
    from_knots.push_back(tau[a]);
    to_knots.push_back(tau[c]);
    if (a == 0) break;
    node = parent[node];
  }
  std::reverse(from_knots.begin(), from_knots.end());
  std::reverse(to_knots.begin(), to_knots.end());
  return Warp(std::move(from_knots), std::move(to_knots));
}

void collect_candidates(const CadlagPath& f, const CadlagPath& g, int n, std::vector<Warp>& out) {
  if (n < 3) return;
  out.push_back(lattice_candidate(f, g, n));
  if ((n - 1) % 2 == 0) collect_candidates(f, g, (n - 1) / 2 + 1, out);
}

auto path_key(const CadlagPath& p) {
  return std::tie(p.grid(), p.values(), p.support().start, p.support().end);
}

}  // namespace

SkorohodMatch skorohod_match(const CadlagPath& f, const CadlagPath& g, int warp_grid_resolution) {
  check_pair(f, g);
  if (warp_grid_resolution < 2) throw ValidationError("skorohod: warp grid resolution must be >= 2");

  // Work on a canonical ordering of the pair so the result is exactly symmetric.
  const bool swapped = path_key(g) < path_key(f) ||
                       (path_key(g) == path_key(f) && g.mode() < f.mode());
  const CadlagPath& first = swapped ? g : f;
  const CadlagPath& second = swapped ? f : g;

  std::vector<Warp> candidates{Warp::identity(first.front(), first.back())};
  collect_candidates(first, second, warp_grid_resolution, candidates);

  SkorohodMatch result{kInfinity, candidates.front()};
  for (const Warp& w : candidates) {
    const double cost = warp_cost(first, second, w);
    if (cost < result.distance) result = SkorohodMatch{cost, w};
  }
  if (swapped) result.warp = result.warp.inverted();
  return result;
}

double skorohod_distance(const CadlagPath& f, const CadlagPath& g, int warp_grid_resolution) {
  return skorohod_match(f, g, warp_grid_resolution).distance;
}

}  // namespace cfmpp
