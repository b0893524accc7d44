#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gdist/errors.hpp"

namespace gdist {

//! Gauss–Legendre nodes/weights on [-1,1], computed once by Newton iteration
//! on the Legendre polynomial (machine-accurate for the sizes used here).
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::vector<std::pair<std::vector<double>, std::vector<double>>> cache(65);
    auto& entry = cache.at(static_cast<std::size_t>(n));
    if (!entry.first.empty()) return entry;
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::fabs(dt) < 1e-16) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    entry = {std::move(x), std::move(w)};
    return entry;
}

//! Single Gauss–Legendre panel of f over [a,b].
template <class Fn>
double gl_panel(Fn&& f, double a, double b, int n = 16) {
    const auto& [x, w] = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += w[i] * f(c + h * x[i]);
    return s * h;
}

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;       //!< refinement-based estimate
    bool converged = false;
    int evaluations = 0;
    int max_depth_used = 0;
};

namespace detail {

template <class Fn>
void adaptive_gl_rec(Fn& f, double a, double b, double coarse, double tol, int depth,
                     int max_depth, QuadratureResult& out) {
    const double mid = 0.5 * (a + b);
    const double left = gl_panel(f, a, mid, 16);
    const double right = gl_panel(f, mid, b, 16);
    out.evaluations += 32;
    const double fine = left + right;
    const double err = std::fabs(fine - coarse);
    if (depth > out.max_depth_used) out.max_depth_used = depth;
    if (!std::isfinite(fine)) {
        out.converged = false;
        out.value += fine;
        return;
    }
    if (err <= tol || depth >= max_depth) {
        out.value += fine;
        out.error += err;
        if (err > tol) out.converged = false;
        return;
    }
    adaptive_gl_rec(f, a, mid, left, 0.5 * tol, depth + 1, max_depth, out);
    adaptive_gl_rec(f, mid, b, right, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace detail

//! Adaptive Gauss–Legendre with a refinement-based error estimate: each
//! interval is accepted when the two-panel refinement moves the value by less
//! than its share of the tolerance, otherwise it is bisected.
template <class Fn>
QuadratureResult adaptive_gl(Fn&& f, double a, double b, double abs_tol = 1e-12,
                             double rel_tol = 1e-10, int max_depth = 48) {
    QuadratureResult out;
    out.converged = true;
    if (a == b) return out;
    const double coarse = gl_panel(f, a, b, 16);
    out.evaluations = 16;
    const double tol = std::max(abs_tol, rel_tol * std::fabs(coarse));
    detail::adaptive_gl_rec(f, a, b, coarse, tol, 0, max_depth, out);
    if (!std::isfinite(out.value)) out.converged = false;
    return out;
}

//! Adaptive integral that throws NonIntegrable when the estimate has not
//! settled after the refinement cascade.
template <class Fn>
double integrate_or_throw(Fn&& f, double a, double b, double abs_tol, double rel_tol,
                          const std::string& what) {
    QuadratureResult r = adaptive_gl(f, a, b, abs_tol, rel_tol);
    if (!r.converged)
        throw NonIntegrable(what + ": quadrature failed to converge (error estimate " +
                            std::to_string(r.error) + ")");
    return r.value;
}

//! Cumulative trapezoid of tabulated values: out[i] = ∫_{x0}^{xi}.
inline std::vector<double> cumtrapz(const std::vector<double>& x,
                                    const std::vector<double>& y) {
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return out;
}

}  // namespace gdist
