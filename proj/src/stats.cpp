#include "fkg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fkg/error.hpp"

namespace fkg {

double mean(std::span<const double> x) {
    require(!x.empty(), Errc::invalid_argument, "mean of an empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double integrated_autocorrelation_time(std::span<const double> x, double c) {
    const std::size_t n = x.size();
    if (n < 4) return 0.5;
    const double m = mean(x);
    auto autocov = [&](std::size_t t) {
        double s = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - m) * (x[i + t] - m);
        return s / static_cast<double>(n - t);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0)) return 0.5;
    double tau = 0.5;
    for (std::size_t w = 1; w < n / 2; ++w) {
        tau += autocov(w) / c0;
        if (static_cast<double>(w) >= c * tau) break;
    }
    return std::max(tau, 0.5);
}

Estimate jackknife(const std::vector<std::vector<double>>& columns, std::size_t blocks,
                   const std::function<double(std::span<const double>)>& f) {
    require(!columns.empty(), Errc::invalid_argument, "jackknife needs at least one column");
    const std::size_t n = columns.front().size();
    for (const auto& c : columns) require(c.size() == n, Errc::invalid_argument, "jackknife columns differ in length");
    require(n > 0, Errc::invalid_argument, "jackknife of an empty series");
    const std::size_t k = columns.size();
    const std::size_t B = std::max<std::size_t>(1, std::min(blocks, n));

    std::vector<double> total(k, 0.0);
    std::vector<std::vector<double>> block_sum(B, std::vector<double>(k, 0.0));
    std::vector<std::size_t> block_count(B, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i * B / n;
        ++block_count[b];
        for (std::size_t j = 0; j < k; ++j) {
            block_sum[b][j] += columns[j][i];
            total[j] += columns[j][i];
        }
    }
    std::vector<double> means(k);
    for (std::size_t j = 0; j < k; ++j) means[j] = total[j] / static_cast<double>(n);
    Estimate out;
    out.value = f(means);
    if (B < 2) return out;

    std::vector<double> theta(B);
    std::vector<double> loo(k);
    for (std::size_t b = 0; b < B; ++b) {
        const double rest = static_cast<double>(n - block_count[b]);
        for (std::size_t j = 0; j < k; ++j) loo[j] = (total[j] - block_sum[b][j]) / rest;
        theta[b] = f(loo);
    }
    const double tbar = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(B);
    double var = 0.0;
    for (double t : theta) var += (t - tbar) * (t - tbar);
    out.error = std::sqrt(var * static_cast<double>(B - 1) / static_cast<double>(B));
    return out;
}

Estimate jackknife_mean(std::span<const double> x, std::size_t blocks) {
    std::vector<std::vector<double>> cols{std::vector<double>(x.begin(), x.end())};
    return jackknife(cols, blocks, [](std::span<const double> m) { return m[0]; });
}

} // namespace fkg
