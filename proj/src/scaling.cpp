#include "fkg/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkg/error.hpp"

namespace fkg {

namespace {

struct LineFit {
    double slope = 0.0, intercept = 0.0;
    double slope_err = 0.0, intercept_err = 0.0;
    double chi2 = 0.0;
};

/// Weighted straight-line fit v = intercept + slope u with standard deviations s.
LineFit weighted_line(std::span<const double> u, std::span<const double> v, std::span<const double> s) {
    double S = 0, Su = 0, Sv = 0, Suu = 0, Suv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double w = 1.0 / (s[i] * s[i]);
        S += w;
        Su += w * u[i];
        Sv += w * v[i];
        Suu += w * u[i] * u[i];
        Suv += w * u[i] * v[i];
    }
    const double det = S * Suu - Su * Su;
    require(det > 0 && std::isfinite(det), Errc::numeric, "degenerate fit: control values coincide");
    LineFit f;
    f.slope = (S * Suv - Su * Sv) / det;
    f.intercept = (Suu * Sv - Su * Suv) / det;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = (v[i] - f.intercept - f.slope * u[i]) / s[i];
        f.chi2 += r * r;
    }
    const auto dof = static_cast<double>(u.size()) - 2.0;
    const double inflate = dof > 0 ? std::max(1.0, std::sqrt(f.chi2 / dof)) : 1.0;
    f.slope_err = inflate * std::sqrt(S / det);
    f.intercept_err = inflate * std::sqrt(Suu / det);
    return f;
}

} // namespace

void ScalingSeries::validate() const {
    require(points.size() >= 3, Errc::invalid_argument,
            observable + ": a power-law fit needs at least 3 points, got " + std::to_string(points.size()));
    const bool up = points[1].x > points[0].x;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        require(p.x > 0 && std::isfinite(p.x), Errc::invalid_argument, observable + ": control values must be positive");
        require(p.y > 0 && std::isfinite(p.y), Errc::numeric,
                observable + ": nonpositive estimate at x = " + std::to_string(p.x));
        require(p.error > 0 && std::isfinite(p.error), Errc::invalid_argument,
                observable + ": standard errors must be positive");
        if (i > 0) {
            require(up ? p.x > points[i - 1].x : p.x < points[i - 1].x, Errc::invalid_argument,
                    observable + ": control values must be strictly monotone");
        }
    }
}

FitResult fit_power_law(const ScalingSeries& series) { return fit_power_law(series, 0, series.points.size()); }

FitResult fit_power_law(const ScalingSeries& series, std::size_t lo, std::size_t hi) {
    require(lo <= hi && hi <= series.points.size(), Errc::invalid_argument, "fit window out of range");
    ScalingSeries window{series.observable, series.control,
                         {series.points.begin() + static_cast<long>(lo), series.points.begin() + static_cast<long>(hi)}};
    window.validate();
    std::vector<double> u, v, s;
    for (const auto& p : window.points) {
        u.push_back(std::log(p.x));
        v.push_back(std::log(p.y));
        s.push_back(p.error / p.y);
    }
    const LineFit f = weighted_line(u, v, s);
    FitResult r;
    r.observable = series.observable;
    r.exponent = f.slope;
    r.exponent_stderr = f.slope_err;
    r.amplitude = std::exp(f.intercept);
    r.amplitude_stderr = r.amplitude * f.intercept_err;
    r.window_lo = std::min(window.points.front().x, window.points.back().x);
    r.window_hi = std::max(window.points.front().x, window.points.back().x);
    r.n_points = window.points.size();
    r.chi2 = f.chi2;
    return r;
}

Estimate column_estimate(const RecordTable& t, std::string_view name, std::size_t blocks) {
    const auto x = t.column(name);
    require(!x.empty(), Errc::config, "no records for column '" + std::string(name) + "'");
    return jackknife_mean(x, blocks);
}

MagnetizationFit magnetization_fit(const ScalingSeries& sigma_vs_H, double L) {
    MagnetizationFit out;
    out.fit = fit_power_law(sigma_vs_H);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : sigma_vs_H.points) {
        const double b = p.y / std::pow(p.x, kMagnetizationExponent);
        lo = std::min(lo, b);
        hi = std::max(hi, b);
        if (std::pow(p.x, -kMassExponent) > L / 4) {
            out.fit.warnings.push_back("H = " + std::to_string(p.x) + ": correlation length comparable to L/4");
        }
    }
    out.plateau_ratio = hi / lo;
    return out;
}

namespace {

std::size_t window_side(const RecordTable& t) {
    std::size_t w = 0;
    while (t.has("wr_" + std::to_string(w))) ++w;
    require(w > 0, Errc::config, "records carry no window correlator columns");
    return w;
}

std::vector<std::vector<double>> columns_of(const RecordTable& t, const std::vector<std::size_t>& idx) {
    std::vector<std::vector<double>> cols(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        cols[k].reserve(t.rows.size());
        for (const auto& row : t.rows) cols[k].push_back(row[idx[k]]);
    }
    return cols;
}

} // namespace

std::vector<CorrelatorPoint> wall_correlator(const RecordTable& t, std::size_t blocks) {
    const std::size_t W = window_side(t);
    require(!t.rows.empty(), Errc::config, "no records for the window correlator");
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < W; ++j) idx.push_back(t.index_of("wr_" + std::to_string(j)));
    for (std::size_t j = 0; j < W; ++j) idx.push_back(t.index_of("wk_" + std::to_string(j)));
    idx.push_back(0);
    auto cols = columns_of(t, idx);
    std::vector<CorrelatorPoint> out;
    for (std::size_t r = 0; t.has("wc_" + std::to_string(r)); ++r) {
        cols.back() = t.column("wc_" + std::to_string(r));
        const auto e = jackknife(cols, blocks, [&](std::span<const double> m) {
            const std::size_t pairs = W - r;
            double disc = 0.0;
            for (std::size_t j = 0; j < pairs; ++j) disc += m[j] * m[j + r] + m[W + j] * m[W + j + r];
            return m[2 * W] - static_cast<double>(W) * disc / (2.0 * static_cast<double>(pairs));
        });
        out.push_back({static_cast<double>(r), e.value, e.error});
    }
    return out;
}

std::vector<CorrelatorPoint> point_correlator(const RecordTable& t, std::size_t blocks) {
    require(!t.rows.empty(), Errc::config, "no records for the point correlator");
    std::vector<CorrelatorPoint> out;
    const std::size_t centre = t.index_of("s_center");
    for (std::size_t r = 1; t.has("pc_" + std::to_string(r)); ++r) {
        const auto cols = columns_of(t, {t.index_of("pc_" + std::to_string(r)), centre, t.index_of("pe_" + std::to_string(r))});
        const auto e = jackknife(cols, blocks, [](std::span<const double> m) { return m[0] - m[1] * m[2]; });
        out.push_back({static_cast<double>(r), e.value, e.error});
    }
    return out;
}

MassEstimate effective_mass(const std::vector<CorrelatorPoint>& f, double r_min, double tolerance) {
    MassEstimate out;
    std::vector<CorrelatorPoint> pts;
    for (const auto& p : f) {
        if (p.r < r_min) continue;
        // stop at the first distance where the signal is lost
        if (!(p.value > 2.0 * p.error) || !(p.error > 0)) break;
        pts.push_back(p);
    }
    if (pts.size() < 3) {
        out.reason = "correlator indistinguishable from zero beyond r = " +
                     std::to_string(pts.empty() ? r_min : pts.back().r);
        return out;
    }
    const std::size_t ns = pts.size() - 1;
    std::vector<double> slope(ns), err(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const double dr = pts[i + 1].r - pts[i].r;
        slope[i] = (std::log(pts[i].value) - std::log(pts[i + 1].value)) / dr;
        err[i] = std::hypot(pts[i].error / pts[i].value, pts[i + 1].error / pts[i + 1].value) / dr;
    }
    std::size_t best_lo = 0, best_len = 1, lo = 0;
    for (std::size_t i = 1; i <= ns; ++i) {
        const bool agree = i < ns && std::abs(slope[i] - slope[i - 1]) <= tolerance * std::hypot(err[i], err[i - 1]);
        if (!agree) {
            if (i - lo > best_len) best_len = i - lo, best_lo = lo;
            lo = i;
        }
    }
    if (best_len < 2) {
        out.reason = "no two consecutive local slopes agree";
        return out;
    }
    // slopes best_lo .. best_lo+len-1 span points best_lo .. best_lo+len
    std::vector<double> u, v, s;
    for (std::size_t i = best_lo; i <= best_lo + best_len; ++i) {
        u.push_back(pts[i].r);
        v.push_back(std::log(pts[i].value));
        s.push_back(pts[i].error / pts[i].value);
    }
    const LineFit fit = weighted_line(u, v, s);
    out.valid = fit.slope < 0;
    out.mass = -fit.slope;
    out.error = fit.slope_err;
    out.log_amplitude = fit.intercept;
    out.r_lo = u.front();
    out.r_hi = u.back();
    if (!out.valid) out.reason = "correlator does not decay over the stable window";
    return out;
}

MassFit mass_fit(const ScalingSeries& mass_vs_H) {
    MassFit out;
    out.fit = fit_power_law(mass_vs_H);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : mass_vs_H.points) {
        const double c = p.y / std::pow(p.x, kMassExponent);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    out.bound_constant = hi;
    out.bound_spread = hi / lo;
    return out;
}

Estimate correlator_prefactor(const std::vector<CorrelatorPoint>& f, const MassEstimate& m) {
    require(m.valid, Errc::invalid_argument, "prefactor needs an accepted mass window");
    double sw = 0.0, swx = 0.0;
    for (const auto& p : f) {
        if (p.r < m.r_lo || p.r > m.r_hi) continue;
        const double g = std::exp(m.mass * p.r);
        const double w = 1.0 / (p.error * g * p.error * g);
        sw += w;
        swx += w * p.value * g;
    }
    require(sw > 0, Errc::numeric, "empty prefactor window");
    return {swx / sw, 1.0 / std::sqrt(sw)};
}

FitResult one_arm_fit(const ScalingSeries& prob_vs_a, const std::vector<double>& successes) {
    require(successes.size() == prob_vs_a.points.size(), Errc::invalid_argument, "one success count per point");
    ScalingSeries kept{prob_vs_a.observable, prob_vs_a.control, {}};
    std::vector<double> kept_successes;
    for (std::size_t i = 0; i < prob_vs_a.points.size(); ++i) {
        if (prob_vs_a.points[i].x >= 1.0) continue;
        kept.points.push_back(prob_vs_a.points[i]);
        kept_successes.push_back(successes[i]);
    }
    FitResult r = fit_power_law(kept);
    const auto smallest = std::min_element(kept.points.begin(), kept.points.end(),
                                           [](const auto& p, const auto& q) { return p.x < q.x; });
    const double s = kept_successes[static_cast<std::size_t>(smallest - kept.points.begin())];
    if (s < 100) {
        r.warnings.push_back("only " + std::to_string(static_cast<long long>(s)) +
                             " one-arm successes at the smallest a; the estimate is noisy");
    }
    return r;
}

double IdentityReport::abs_diff() const { return std::abs(lhs - rhs); }

bool IdentityReport::holds(double tol) const { return abs_diff() <= tol * std::max(1.0, std::abs(lhs)); }

IdentityReport identity_check(std::span<const double> m, std::span<const double> mean_spin, double a,
                              double vertex_count, std::size_t blocks) {
    require(m.size() == mean_spin.size() && !m.empty(), Errc::invalid_argument, "identity needs paired samples");
    require(a > 0, Errc::invalid_argument, "lattice spacing must be positive");
    IdentityReport r;
    r.a = a;
    const double unit = std::pow(a, 15.0 / 8.0);
    r.H = unit;
    r.lhs = mean(m);
    r.rhs = unit * vertex_count * mean(mean_spin);
    const double scale = std::pow(r.H, 1.0 / 15.0);
    const Estimate em = jackknife_mean(m, blocks);
    const Estimate es = jackknife_mean(mean_spin, blocks);
    r.rescaled_lhs = {scale * em.value, scale * em.error};
    const double k = scale * unit * vertex_count;
    r.rescaled_rhs = {k * es.value, k * es.error};
    return r;
}

MgfFit mgf_fit(std::span<const double> x, std::vector<double> t, double shift, std::size_t blocks) {
    MgfFit out;
    out.shift = shift;
    for (double tt : t) out.estimates.push_back(mgf_estimate(x, tt, blocks));
    out.t = std::move(t);
    out.constant = fit_mgf_constant(out.t, out.estimates, shift);
    return out;
}

double relative_change(double c1, double c2) {
    require(c1 != 0.0, Errc::numeric, "relative change from zero");
    return std::abs(c2 - c1) / std::abs(c1);
}

} // namespace fkg
