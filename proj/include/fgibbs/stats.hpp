#pragma once
#include <cstddef>
#include <limits>
#include <vector>

namespace fgibbs {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log sum_i exp(x_i); entries equal to kLogZero contribute nothing.
double log_sum_exp(const std::vector<double>& x);

struct MeanVar {
  double mean = 0;
  double variance = 0;  // unbiased
  std::size_t count = 0;
};
MeanVar mean_var(const std::vector<double>& x);

/// Summary of log( (1/S) sum exp(logw_i) ) over S = logw.size() samples,
/// rejected samples carrying logw = kLogZero. The standard error is a
/// leave-one-out jackknife on the log scale; max_share is the largest single
/// weight's fraction of the total, the heavy-tail flag of record.
struct LogMeanExp {
  double log_mean = kLogZero;
  double se = std::numeric_limits<double>::infinity();
  double max_share = 0;
  std::size_t accepted = 0;
  std::size_t total = 0;
};
LogMeanExp log_mean_exp(const std::vector<double>& logw);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double max_abs_residual = 0;
  std::size_t points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fgibbs
