#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fkg/estimators.hpp"
#include "fkg/run.hpp"
#include "fkg/stats.hpp"

namespace fkg {

inline constexpr double kMagnetizationExponent = 1.0 / 15.0;
inline constexpr double kMassExponent = 8.0 / 15.0;
inline constexpr double kPrefactorExponent = 2.0 / 15.0;
inline constexpr double kOneArmExponent = 1.0 / 8.0;

struct SeriesPoint {
    double x = 0.0;
    double y = 0.0;
    double error = 0.0;
};

/// Estimates y(x) with standard errors; x strictly monotone and positive.
struct ScalingSeries {
    std::string observable;
    std::string control;
    std::vector<SeriesPoint> points;

    void validate() const;
};

struct FitResult {
    std::string observable;
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double amplitude = 0.0;
    double amplitude_stderr = 0.0;
    double window_lo = 0.0;  // smallest and largest x used
    double window_hi = 0.0;
    std::size_t n_points = 0;
    double chi2 = 0.0;
    std::vector<std::string> warnings;
};

/// Weighted least squares of log y = log A + k log x with weights (y / error)^2.
/// Errors are inflated by sqrt(chi2 / dof) when that exceeds one.
FitResult fit_power_law(const ScalingSeries& series);
/// Fit restricted to points [lo, hi).
FitResult fit_power_law(const ScalingSeries& series, std::size_t lo, std::size_t hi);

/// Column mean with jackknife error.
Estimate column_estimate(const RecordTable& t, std::string_view name, std::size_t blocks = 50);

struct MagnetizationFit {
    FitResult fit;
    double plateau_ratio = 0.0;  // max / min of <sigma>/H^{1/15}
};
/// Fit of <sigma> against H; flags grid points whose H^{-8/15} exceeds L/4.
MagnetizationFit magnetization_fit(const ScalingSeries& sigma_vs_H, double L);

struct CorrelatorPoint {
    double r = 0.0;
    double value = 0.0;
    double error = 0.0;
};

/// Connected zero-momentum correlator between lines of the central window,
/// from the wc_r, wr_j and wk_j columns.
std::vector<CorrelatorPoint> wall_correlator(const RecordTable& t, std::size_t blocks = 50);
/// <s_0 s_r> - <s_0><s_r> along the axes, from pc_r, pe_r and s_center.
std::vector<CorrelatorPoint> point_correlator(const RecordTable& t, std::size_t blocks = 50);

struct MassEstimate {
    bool valid = false;
    double mass = 0.0;
    double error = 0.0;
    double log_amplitude = 0.0;
    double r_lo = 0.0, r_hi = 0.0;
    std::string reason;  // why no window was accepted
};
/// Effective mass from the largest window of distances >= r_min where consecutive
/// local log-slopes agree within `tolerance` combined standard errors.
MassEstimate effective_mass(const std::vector<CorrelatorPoint>& f, double r_min = 1.0, double tolerance = 1.5);

struct MassFit {
    FitResult fit;
    double bound_constant = 0.0;  // max_H m(H) / H^{8/15}
    double bound_spread = 0.0;    // max / min of m(H) / H^{8/15}
};
MassFit mass_fit(const ScalingSeries& mass_vs_H);

/// Mean of f(r) e^{m r} over the mass window.
Estimate correlator_prefactor(const std::vector<CorrelatorPoint>& f, const MassEstimate& m);

/// Fit of the one-arm probability against a; points with a >= 1 (origin on the
/// boundary) are dropped, and fewer than 100 successes at the smallest a is flagged.
FitResult one_arm_fit(const ScalingSeries& prob_vs_a, const std::vector<double>& successes);

struct IdentityReport {
    double a = 0.0;
    double H = 0.0;  // a^{15/8} at h = 1
    double lhs = 0.0;  // mean renormalized magnetization
    double rhs = 0.0;  // a^{15/8} N(a) mean spin
    Estimate rescaled_lhs, rescaled_rhs;  // both times H^{1/15}
    double abs_diff() const;
    bool holds(double tol = 1e-12) const;
};
IdentityReport identity_check(std::span<const double> m, std::span<const double> mean_spin, double a,
                              double vertex_count, std::size_t blocks = 50);

struct MgfFit {
    double shift = 0.0;
    std::vector<double> t;
    std::vector<MgfEstimate> estimates;
    double constant = 0.0;
};
MgfFit mgf_fit(std::span<const double> x, std::vector<double> t, double shift, std::size_t blocks = 50);
/// |c2 - c1| / |c1|
double relative_change(double c1, double c2);

} // namespace fkg
