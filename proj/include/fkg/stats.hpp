#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fkg {

struct Estimate {
    double value = 0.0;
    double error = 0.0;  // one standard error
};

double mean(std::span<const double> x);

/// Integrated autocorrelation time 1/2 + sum_t rho(t) with the self-consistent
/// window W >= c tau(W).
double integrated_autocorrelation_time(std::span<const double> x, double c = 6.0);

/// Delete-one-block jackknife of f(column means).
///
/// Every column holds one value per sample; samples are split into `blocks`
/// contiguous blocks (fewer if there are fewer samples).
Estimate jackknife(const std::vector<std::vector<double>>& columns, std::size_t blocks,
                   const std::function<double(std::span<const double>)>& f);

Estimate jackknife_mean(std::span<const double> x, std::size_t blocks = 50);

} // namespace fkg
