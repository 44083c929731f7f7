#pragma once

// Scaling-law analysis over sweep results: closed-form regret ceilings,
// log-log slope fits, and two-piece breakpoint detection.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "swob/core.hpp"
#include "swob/engine.hpp"
#include "swob/error.hpp"

namespace swob {

// Closed-form ceiling on expected total regret for a resolved mode at
// horizon T with K arms and budget B. The bandit form carries an additive
// B because that schedule may switch at every one of its B batches.
inline double theoretical_bound(FeedbackMode mode, std::size_t T,
                                std::size_t K, std::size_t B) {
  if (K < 2) throw DomainError("theoretical_bound: need K >= 2");
  if (T == 0 || B == 0) throw DomainError("theoretical_bound: need T, B >= 1");
  const double dT = static_cast<double>(T);
  const double dK = static_cast<double>(K);
  const double dB = static_cast<double>(B);
  switch (mode) {
    case FeedbackMode::FULL:
    case FeedbackMode::FLEX:
      return dT * std::sqrt(6.0 * dK * std::log(dK) / dB);
    case FeedbackMode::BANDIT:
      return dT * std::sqrt(2.0 * dK * std::log(dK) / dB) + dB;
  }
  throw DomainError("theoretical_bound: unknown mode");
}

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;     // in log space
  double slope_stderr = 0.0;
};

namespace detail {

struct OlsFit {
  double slope = 0.0, intercept = 0.0, ssr = 0.0, sxx = 0.0;
  std::size_t n = 0;
};

inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  OlsFit f;
  f.n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= f.n;
  my /= f.n;
  double sxy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    f.sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (f.sxx <= 0.0) throw DomainError("slope fit: x values are all equal");
  f.slope = sxy / f.sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double resid = y[i] - (f.intercept + f.slope * x[i]);
    f.ssr += resid * resid;
  }
  return f;
}

inline void to_logs(const std::vector<std::pair<double, double>>& pts,
                    std::vector<double>& lx, std::vector<double>& ly) {
  lx.reserve(pts.size());
  ly.reserve(pts.size());
  for (const auto& [x, y] : pts) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw DomainError("slope fit: log-log fit needs positive coordinates");
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
}

}  // namespace detail

// Ordinary least squares of log y on log x. The slope standard error is
// sqrt(SSR / (n - 2) / Sxx); an exact power law reports (near) zero.
inline FitResult fit_loglog_slope(
    const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3) {
    throw InsufficientData("slope fit: need at least 3 points, got " +
                           std::to_string(pts.size()));
  }
  std::vector<double> lx, ly;
  detail::to_logs(pts, lx, ly);
  const auto f = detail::ols(lx, ly);
  FitResult out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  const double variance = std::max(0.0, f.ssr) / static_cast<double>(f.n - 2);
  out.slope_stderr = std::sqrt(variance / f.sxx);
  return out;
}

struct PhaseTransition {
  double breakpoint = 0.0;
  double left_slope = 0.0;
  double right_slope = 0.0;
};

// Fits two log-log lines split at a candidate breakpoint (left: x <= b,
// right: x > b) and keeps the candidate with the smallest total squared
// residual, ties going to the smallest breakpoint. Candidates leaving
// fewer than 3 points on either side are skipped; if that skips them all,
// the data is insufficient.
inline PhaseTransition detect_phase_transition(
    const std::vector<std::pair<double, double>>& pts,
    const std::vector<double>& breakpoint_grid) {
  if (breakpoint_grid.empty()) {
    throw DomainError("phase transition: empty breakpoint grid");
  }
  std::vector<double> lx, ly;
  detail::to_logs(pts, lx, ly);

  bool found = false;
  double best_sse = std::numeric_limits<double>::infinity();
  PhaseTransition best;
  for (const double candidate : breakpoint_grid) {
    std::vector<double> lxl, lyl, lxr, lyr;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].first <= candidate) {
        lxl.push_back(lx[i]);
        lyl.push_back(ly[i]);
      } else {
        lxr.push_back(lx[i]);
        lyr.push_back(ly[i]);
      }
    }
    if (lxl.size() < 3 || lxr.size() < 3) continue;
    const auto left = detail::ols(lxl, lyl);
    const auto right = detail::ols(lxr, lyr);
    const double sse = left.ssr + right.ssr;
    // Strict less-than keeps the smallest breakpoint on ties because the
    // grid is scanned in the caller's order; sort guards below.
    if (!found || sse < best_sse - 1e-15 * std::max(1.0, best_sse) ||
        (std::abs(sse - best_sse) <=
             1e-15 * std::max(1.0, best_sse) &&
         candidate < best.breakpoint)) {
      found = true;
      best_sse = sse;
      best.breakpoint = candidate;
      best.left_slope = left.slope;
      best.right_slope = right.slope;
    }
  }
  if (!found) {
    throw InsufficientData(
        "phase transition: fewer than 3 points on either side of every "
        "candidate breakpoint");
  }
  return best;
}

// One sweep point: the axis value, the aggregate it produced, and the
// closed-form ceiling for the schedule that ran there (NaN when no ceiling
// applies).
struct SweepPoint {
  double x = 0.0;
  AggregateStats stats;
  double bound = std::numeric_limits<double>::quiet_NaN();
  FeedbackMode resolved_mode = FeedbackMode::FULL;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepPoint> points;
  FitResult fit;  // log-log fit of mean regret against the axis
};

}  // namespace swob
