#include "fgibbs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fgibbs {

double log_sum_exp(const std::vector<double>& x) {
  double m = kLogZero;
  for (double v : x) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double acc = 0;
  for (double v : x)
    if (v != kLogZero) acc += std::exp(v - m);
  return m + std::log(acc);
}

MeanVar mean_var(const std::vector<double>& x) {
  MeanVar r;
  r.count = x.size();
  if (x.empty()) return r;
  double s = 0;
  for (double v : x) s += v;
  r.mean = s / x.size();
  if (x.size() > 1) {
    double q = 0;
    for (double v : x) q += (v - r.mean) * (v - r.mean);
    r.variance = q / (x.size() - 1);
  }
  return r;
}

LogMeanExp log_mean_exp(const std::vector<double>& logw) {
  LogMeanExp r;
  r.total = logw.size();
  if (logw.empty()) return r;
  double log_total = log_sum_exp(logw);
  double log_max = kLogZero;
  for (double v : logw)
    if (v != kLogZero) {
      ++r.accepted;
      log_max = std::max(log_max, v);
    }
  if (r.accepted == 0) return r;
  const double S = static_cast<double>(r.total);
  r.log_mean = log_total - std::log(S);
  r.max_share = std::exp(log_max - log_total);
  if (r.total < 2 || r.accepted < 2) return r;  // se stays infinite

  // Jackknife on theta_i = log((sum w - w_i)/(S-1)). Rejected samples share
  // one common leave-one-out value.
  const double log_Sm1 = std::log(S - 1.0);
  double theta_rej = log_total - log_Sm1;
  double sum_t = 0, sum_t2 = 0;
  bool degenerate = false;
  for (double v : logw) {
    double t;
    if (v == kLogZero) {
      t = theta_rej;
    } else {
      double frac = std::exp(v - log_total);
      if (frac >= 1.0) {
        degenerate = true;  // one sample carries the whole sum
        continue;
      }
      t = log_total + std::log1p(-frac) - log_Sm1;
    }
    sum_t += t;
    sum_t2 += t * t;
  }
  if (degenerate) return r;
  double mean_t = sum_t / S;
  double var_t = std::max(0.0, sum_t2 / S - mean_t * mean_t);
  r.se = std::sqrt((S - 1.0) * var_t);
  return r;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs at least two (x, y) pairs");
  LineFit f;
  f.points = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_line: degenerate abscissae");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    f.max_abs_residual = std::max(f.max_abs_residual, std::abs(y[i] - (f.intercept + f.slope * x[i])));
  return f;
}

}  // namespace fgibbs
