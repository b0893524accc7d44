#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gdist/bsde.hpp"
#include "gdist/distkit.hpp"
#include "gdist/drivers.hpp"
#include "gdist/quadrature.hpp"

namespace gdist {

struct PdeResidual {
    double max_abs = 0.0;
    double dt = 0.0, dy = 0.0;  //!< grid steps
    double h_grid_sq = 0.0;     //!< dt² + dy², the discretization scale
    double threshold = 0.0;     //!< warn level used by build_phi
    bool within_threshold = true;
};

//! Max-abs residual of the law-invariance compatibility condition
//!   2 f_y h + 2 f h_y − h_yy + 2 f_t = 0
//! over the interior grid, all partials by centered differences of the
//! sampled values (so exact solution pairs show the O(h²) truncation error).
inline PdeResidual pde_residual(const ScalarField2D& f, const ScalarField2D& h,
                                const std::vector<double>& t_grid,
                                const std::vector<double>& y_grid) {
    const std::size_t nt = t_grid.size(), ny = y_grid.size();
    if (nt < 3 || ny < 3)
        throw InvalidArgument("pde_residual: need at least a 3x3 grid");
    std::vector<std::vector<double>> fv(nt, std::vector<double>(ny));
    std::vector<std::vector<double>> hv(nt, std::vector<double>(ny));
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            fv[i][j] = f(t_grid[i], y_grid[j]);
            hv[i][j] = h(t_grid[i], y_grid[j]);
        }
    PdeResidual out;
    out.dt = t_grid[1] - t_grid[0];
    out.dy = y_grid[1] - y_grid[0];
    out.h_grid_sq = out.dt * out.dt + out.dy * out.dy;
    double third = 0.0;  // third-derivative scale for the warn threshold
    for (std::size_t i = 1; i + 1 < nt; ++i)
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            const double ht = t_grid[i + 1] - t_grid[i - 1];
            const double hy = y_grid[j + 1] - y_grid[j - 1];
            const double f_t = (fv[i + 1][j] - fv[i - 1][j]) / ht;
            const double f_y = (fv[i][j + 1] - fv[i][j - 1]) / hy;
            const double h_y = (hv[i][j + 1] - hv[i][j - 1]) / hy;
            const double h_yy = (hv[i][j + 1] - 2.0 * hv[i][j] + hv[i][j - 1]) /
                                (0.25 * hy * hy);
            const double res =
                2.0 * f_y * hv[i][j] + 2.0 * fv[i][j] * h_y - h_yy + 2.0 * f_t;
            out.max_abs = std::max(out.max_abs, std::fabs(res));
            if (j + 2 < ny && j >= 2) {
                const double d3 = (hv[i][j + 2] - 2 * hv[i][j + 1] + 2 * hv[i][j - 1] -
                                   hv[i][j - 2]) /
                                  (2.0 * std::pow(0.5 * hy, 3));
                third = std::max(third, std::fabs(d3));
            }
        }
    out.threshold = 1e-6 + 10.0 * out.h_grid_sq * third;
    out.within_threshold = out.max_abs <= out.threshold;
    return out;
}

//! The strictly increasing transform making φ(t, Y_t) a martingale for the
//! driver g = f‖z‖² + h:
//!   φ(t,y) = e^{∫₀ᵗ[2f(s,0)h(s,0)−h_y(s,0)]ds} ∫₀^y e^{−2∫₀^z f(t,x)dx} dz
//!            − ∫₀ᵗ e^{∫₀ᵘ[...]ds} h(u,0) du,
//! with φ_y taken from the closed exponential rather than by differencing φ.
//!
//! Integrals are composite 8-point Gauss–Legendre over cells of the grid
//! spacing, swept outward from 0, so a single evaluation costs O(|y|) and the
//! node tabulation is one cumulative sweep per time node.
class PhiTransform {
  public:
    PhiTransform(ZSeparableDriver driver, std::vector<double> t_grid,
                 std::vector<double> y_grid)
        : driver_(std::move(driver)),
          t_grid_(std::move(t_grid)),
          y_grid_(std::move(y_grid)) {
        if (t_grid_.size() < 3 || y_grid_.size() < 3)
            throw InvalidArgument("PhiTransform: need at least 3 grid nodes per axis");
        wy_ = (y_grid_.back() - y_grid_.front()) / (y_grid_.size() - 1);
        wt_ = (t_grid_.back() - t_grid_.front()) / (t_grid_.size() - 1);
        pde_ = pde_residual(driver_.f, driver_.h, t_grid_, y_grid_);
        tabulate();
    }

    double phi(double t, double y) const {
        const long ti = t_node(t);
        if (ti >= 0) return phi_anchored(static_cast<std::size_t>(ti), y);
        return time_factor(t) * outer_integral(t, y) - drift_term(t);
    }

    //! φ_y(t,y) = e^{∫₀ᵗ[2f(s,0)h(s,0)−h_y(s,0)]ds} e^{−2∫₀^y f(t,x)dx} > 0.
    double phi_y(double t, double y) const {
        const double e = -2.0 * inner_exponent(t, y);
        if (std::fabs(e) > 700.0)
            throw QuadratureOverflow("PhiTransform: space exponent out of range");
        return time_factor(t) * std::exp(e);
    }

    //! ∫_0^y f(t,x) dx.
    double inner_exponent(double t, double y) const {
        if (y == 0.0) return 0.0;
        const long ti = t_node(t);
        if (ti >= 0) {
            // anchor at the nearest tabulated node; the in-grid remainder is a
            // sub-cell panel, anything beyond the grid integrates adaptively
            const std::size_t i = static_cast<std::size_t>(ti);
            const std::size_t j = nearest_y_node(y);
            const double a = y_grid_[j];
            double rest;
            if (std::fabs(y - a) <= wy_)
                rest = gl_panel([&](double x) { return driver_.f(t, x); }, a, y, 8);
            else
                rest = adaptive_gl([&](double x) { return driver_.f(t, x); },
                                   std::min(a, y), std::max(a, y), 1e-13, 1e-12)
                           .value *
                       (y > a ? 1.0 : -1.0);
            return inner_nodes_[i][j] + rest;
        }
        const double s = y > 0.0 ? 1.0 : -1.0;
        const double ay = std::fabs(y);
        double acc = 0.0;
        for (double a = 0.0; a < ay; a += wy_) {
            const double b = std::min(ay, a + wy_);
            acc += gl_panel([&](double x) { return driver_.f(t, s * x); }, a, b, 8);
        }
        return s * acc;
    }

    double time_factor(double t) const {
        const double e = time_exponent(t);
        if (std::fabs(e) > 700.0)
            throw QuadratureOverflow("PhiTransform: time factor exponent out of range");
        return std::exp(e);
    }

    //! ∫_0^t e^{I(u)} h(u,0) du.
    double drift_term(double t) const {
        if (t == 0.0 || trivial_h_) return 0.0;
        double acc = 0.0, ibase = 0.0;
        for (double a = 0.0; a < t; a += wt_) {
            const double b = std::min(t, a + wt_);
            acc += gl_panel(
                [&](double u) {
                    const double e = ibase + time_panel(a, u);
                    if (std::fabs(e) > 700.0)
                        throw QuadratureOverflow("PhiTransform: drift exponent overflow");
                    return std::exp(e) * driver_.h(u, 0.0);
                },
                a, b, 8);
            ibase += time_panel(a, b);
        }
        return acc;
    }

    //! Solve φ(0, y) = v on the strictly increasing initial slice
    //! (bisection bracket, Newton polish with the exact φ_y).
    double phi0_inverse(double v) const {
        double lo = -1.0, hi = 1.0;
        int guard = 0;
        while (phi(0.0, lo) > v) {
            lo *= 2.0;
            if (++guard > 40) throw RootBracketFailure("phi0_inverse: no lower bracket");
        }
        guard = 0;
        while (phi(0.0, hi) < v) {
            hi *= 2.0;
            if (++guard > 40) throw RootBracketFailure("phi0_inverse: no upper bracket");
        }
        double y = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const double val = phi(0.0, y);
            const double err = val - v;
            if (std::fabs(err) <= 1e-10 * (1.0 + std::fabs(v))) return y;
            (err > 0.0 ? hi : lo) = y;
            const double newton = y - err / phi_y(0.0, y);
            y = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
        }
        throw RootBracketFailure("phi0_inverse: did not meet the residual target");
    }

    //! Bilinear interpolation on the tabulated nodes — for bulk consumers
    //! (path sweeps); quadratures and root-finds use the exact evaluators.
    double phi_interp(double t, double y) const {
        const auto [it, at] = locate(t_grid_, t);
        const auto [iy, ay] = locate(y_grid_, y);
        const double lo = values_[it][iy] * (1 - ay) + values_[it][iy + 1] * ay;
        const double hi = values_[it + 1][iy] * (1 - ay) + values_[it + 1][iy + 1] * ay;
        return lo * (1 - at) + hi * at;
    }

    const ZSeparableDriver& driver() const { return driver_; }
    double horizon() const { return driver_.horizon; }
    const std::vector<double>& t_grid() const { return t_grid_; }
    const std::vector<double>& y_grid() const { return y_grid_; }
    const std::vector<std::vector<double>>& values() const { return values_; }
    const std::vector<std::vector<double>>& dvalues() const { return dvalues_; }
    const std::vector<double>& time_factor_nodes() const { return time_factor_; }
    const std::vector<double>& drift_term_nodes() const { return drift_term_; }
    const PdeResidual& pde() const { return pde_; }

  private:
    static std::pair<std::size_t, double> locate(const std::vector<double>& g, double x) {
        std::size_t i = std::upper_bound(g.begin(), g.end(), x) - g.begin();
        if (i == 0) i = 1;
        if (i >= g.size()) i = g.size() - 1;
        const double w = (x - g[i - 1]) / (g[i] - g[i - 1]);
        return {i - 1, std::clamp(w, 0.0, 1.0)};
    }

    //! Index of t in the tabulated time nodes, or -1 when not a node.
    long t_node(double t) const {
        const auto it = std::lower_bound(t_grid_.begin(), t_grid_.end(), t);
        if (it != t_grid_.end() && *it == t) return it - t_grid_.begin();
        return -1;
    }

    std::size_t nearest_y_node(double y) const {
        const auto it = std::lower_bound(y_grid_.begin(), y_grid_.end(), y);
        if (it == y_grid_.begin()) return 0;
        if (it == y_grid_.end()) return y_grid_.size() - 1;
        const std::size_t hi = static_cast<std::size_t>(it - y_grid_.begin());
        return (y - y_grid_[hi - 1] < y_grid_[hi] - y) ? hi - 1 : hi;
    }

    //! φ at a tabulated time node: nearest-node value plus a local panel; far
    //! beyond the grid the remainder integrates adaptively with the exponent
    //! anchored at the boundary node.
    double phi_anchored(std::size_t ti, double y) const {
        const double t = t_grid_[ti];
        const std::size_t j = nearest_y_node(y);
        const double a = y_grid_[j];
        const double base = inner_nodes_[ti][j];
        auto weight = [&](double z) {
            // e^{−2∫_0^z f} with the inner integral anchored at node j
            double e;
            if (std::fabs(z - a) <= wy_)
                e = base + gl_panel([&](double x) { return driver_.f(t, x); }, a, z, 8);
            else
                e = base + adaptive_gl([&](double x) { return driver_.f(t, x); },
                                       std::min(a, z), std::max(a, z), 1e-13, 1e-12)
                               .value *
                               (z > a ? 1.0 : -1.0);
            e *= -2.0;
            if (std::fabs(e) > 700.0)
                throw QuadratureOverflow("PhiTransform: space exponent out of range");
            return std::exp(e);
        };
        double outer_from_node;
        if (std::fabs(y - a) <= wy_)
            outer_from_node = gl_panel(weight, a, y, 8);
        else
            outer_from_node = adaptive_gl(weight, std::min(a, y), std::max(a, y), 1e-13,
                                          1e-12)
                                  .value *
                              (y > a ? 1.0 : -1.0);
        return values_[ti][j] + time_factor_[ti] * outer_from_node;
    }

    //! ∫_0^y e^{−2∫_0^z f(t,x)dx} dz by one outward sweep with an incremental
    //! inner exponent.
    double outer_integral(double t, double y) const {
        if (y == 0.0) return 0.0;
        const double s = y > 0.0 ? 1.0 : -1.0;
        const double ay = std::fabs(y);
        auto fs = [&](double x) { return driver_.f(t, s * x); };
        double inner = 0.0, acc = 0.0;
        for (double a = 0.0; a < ay; a += wy_) {
            const double b = std::min(ay, a + wy_);
            acc += gl_panel(
                [&](double z) {
                    const double e = -2.0 * s * (inner + gl_panel(fs, a, z, 8));
                    if (std::fabs(e) > 700.0)
                        throw QuadratureOverflow(
                            "PhiTransform: space exponent out of range");
                    return std::exp(e);
                },
                a, b, 8);
            inner += gl_panel(fs, a, b, 8);
        }
        return s * acc;
    }

    //! ∫_a^b [2 f(s,0) h(s,0) − h_y(s,0)] ds with h_y by centered difference.
    double time_panel(double a, double b) const {
        if (trivial_h_) return 0.0;
        return gl_panel(
            [&](double s) {
                const double h_y =
                    (driver_.h(s, wy_) - driver_.h(s, -wy_)) / (2.0 * wy_);
                return 2.0 * driver_.f(s, 0.0) * driver_.h(s, 0.0) - h_y;
            },
            a, b, 8);
    }

    double time_exponent(double t) const {
        if (t == 0.0 || trivial_h_) return 0.0;
        double acc = 0.0;
        for (double a = 0.0; a < t; a += wt_) acc += time_panel(a, std::min(t, a + wt_));
        return acc;
    }

    void tabulate() {
        // h ≡ 0 short-circuits every time integral; detect it on the pde grid
        trivial_h_ = true;
        for (double t : t_grid_)
            for (double y : y_grid_)
                if (driver_.h(t, y) != 0.0) {
                    trivial_h_ = false;
                    break;
                }
        std::size_t zero_idx = y_grid_.size();
        for (std::size_t j = 0; j < y_grid_.size(); ++j)
            if (y_grid_[j] == 0.0) zero_idx = j;
        if (zero_idx == y_grid_.size())
            throw InvalidArgument("PhiTransform: y_grid must contain 0");
        values_.assign(t_grid_.size(), std::vector<double>(y_grid_.size()));
        dvalues_.assign(t_grid_.size(), std::vector<double>(y_grid_.size()));
        inner_nodes_.assign(t_grid_.size(), std::vector<double>(y_grid_.size()));
        time_factor_.resize(t_grid_.size());
        drift_term_.resize(t_grid_.size());
        for (std::size_t i = 0; i < t_grid_.size(); ++i) {
            const double t = t_grid_[i];
            time_factor_[i] = time_factor(t);
            drift_term_[i] = drift_term(t);
            // cumulative sweeps from the 0 node in both directions
            auto sweep = [&](bool up) {
                double inner = 0.0, outer = 0.0;
                std::size_t j = zero_idx;
                values_[i][j] = time_factor_[i] * 0.0 - drift_term_[i];
                dvalues_[i][j] = time_factor_[i];
                inner_nodes_[i][j] = 0.0;
                while (up ? j + 1 < y_grid_.size() : j > 0) {
                    const double a = y_grid_[j];
                    const std::size_t jn = up ? j + 1 : j - 1;
                    const double b = y_grid_[jn];
                    const double base = inner;
                    outer += gl_panel(
                        [&](double z) {
                            const double e =
                                -2.0 * (base +
                                        gl_panel([&](double x) { return driver_.f(t, x); },
                                                 a, z, 8));
                            if (std::fabs(e) > 700.0)
                                throw QuadratureOverflow(
                                    "PhiTransform: space exponent out of range");
                            return std::exp(e);
                        },
                        a, b, 8);
                    inner += gl_panel([&](double x) { return driver_.f(t, x); }, a, b, 8);
                    const double e = -2.0 * inner;
                    if (std::fabs(e) > 700.0)
                        throw QuadratureOverflow(
                            "PhiTransform: space exponent out of range");
                    values_[i][jn] = time_factor_[i] * outer - drift_term_[i];
                    dvalues_[i][jn] = time_factor_[i] * std::exp(e);
                    inner_nodes_[i][jn] = inner;
                    j = jn;
                }
            };
            sweep(true);
            sweep(false);
        }
    }

    ZSeparableDriver driver_;
    std::vector<double> t_grid_, y_grid_;
    double wy_ = 1e-2, wt_ = 1e-2;
    bool trivial_h_ = true;
    std::vector<std::vector<double>> values_, dvalues_;
    std::vector<std::vector<double>> inner_nodes_;  //!< ∫_0^{y_j} f(t_i,·)
    std::vector<double> time_factor_, drift_term_;
    PdeResidual pde_;
};

//! Build the transform for a z-separable driver; a residual above the warn
//! threshold is recorded on the result, not fatal (near-invariant drivers are
//! legitimate probes).
inline PhiTransform build_phi(const ZSeparableDriver& driver,
                              const std::vector<double>& t_grid,
                              const std::vector<double>& y_grid) {
    return PhiTransform(driver, t_grid, y_grid);
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

inline PhiTransform build_phi(const ZSeparableDriver& driver, int nt = 33, int ny = 129,
                              double y_range = 12.0) {
    return PhiTransform(driver, uniform_grid(0.0, driver.horizon, nt),
                        uniform_grid(-y_range, y_range, ny));
}

//! Exponential-moment admissibility of quadratic-growth drivers:
//! E[exp(2α e^{βT} |μ|)] < ∞, checked with a 1.05 safety factor on α.
inline void check_admissible(const PhiTransform& phi, const DistributionLaw& mu) {
    const double alpha = 1.05 * phi.driver().alpha_bound;
    const double beta = phi.driver().beta_bound;
    const double scale = 2.0 * alpha * std::exp(beta * phi.horizon());
    try {
        const double m = expect(mu, [&](double x) {
            const double e = scale * std::fabs(x);
            return e > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(e);
        });
        if (!std::isfinite(m))
            throw InadmissibleDistribution(
                "law_invariant_expectation: E[exp(2 alpha e^{beta T}|mu|)] diverges");
    } catch (const NonIntegrable&) {
        throw InadmissibleDistribution(
            "law_invariant_expectation: exponential moment quadrature did not converge");
    }
}

//! Law-invariant price: the unique y₀ with φ(0,y₀) = E[φ(T,μ)].
inline double law_invariant_expectation(const PhiTransform& phi,
                                        const DistributionLaw& mu) {
    check_admissible(phi, mu);
    const double T = phi.horizon();
    const double v = expect(mu, [&](double x) { return phi.phi(T, x); });
    return phi.phi0_inverse(v);
}

//! One payoff construction for the invariance probe: samples with law μ plus
//! the grid index from which they are measurable.
struct PayoffConstruction {
    std::string name;
    std::function<std::vector<double>(const DistributionLaw&, const PathEnsemble&)> build;
    std::function<int(const PathEnsemble&)> measurable_from;
};

inline std::vector<PayoffConstruction> default_constructions() {
    std::vector<PayoffConstruction> out;
    auto from_node = [](const DistributionLaw& mu, const PathEnsemble& paths, int node,
                        bool flip) {
        std::vector<double> x(static_cast<std::size_t>(paths.n_paths()));
        const double scale = 1.0 / std::sqrt(paths.grid().t(node));
        for (long p = 0; p < paths.n_paths(); ++p) {
            double u = std_normal_cdf(paths.level(p, node, 0) * scale);
            if (flip) u = 1.0 - u;
            x[static_cast<std::size_t>(p)] =
                mu.quantile(std::clamp(u, 1e-15, 1.0 - 1e-15));
        }
        return x;
    };
    out.push_back({"comonotone@T",
                   [from_node](const DistributionLaw& mu, const PathEnsemble& p) {
                       return from_node(mu, p, p.n_steps(), false);
                   },
                   [](const PathEnsemble& p) { return p.n_steps(); }});
    out.push_back({"comonotone@T/2",
                   [from_node](const DistributionLaw& mu, const PathEnsemble& p) {
                       return from_node(mu, p, p.n_steps() / 2, false);
                   },
                   [](const PathEnsemble& p) { return p.n_steps() / 2; }});
    out.push_back({"antithetic@T",
                   [from_node](const DistributionLaw& mu, const PathEnsemble& p) {
                       return from_node(mu, p, p.n_steps(), true);
                   },
                   [](const PathEnsemble& p) { return p.n_steps(); }});
    return out;
}

struct InvarianceProbe {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> std_errs;
    std::vector<double> ks_stats;
    double spread = 0.0;      //!< max pairwise |value_i − value_j|
    double max_std_err = 0.0;
    bool consistent = false;  //!< spread ≤ 3·max std err
};

//! Solve the same distribution reached by several constructions and report the
//! spread of the BSDE initial values. A spread within Monte-Carlo error is
//! evidence of (never proof of) law invariance.
inline InvarianceProbe invariance_probe(
    const Driver& driver, const DistributionLaw& mu,
    const std::vector<PayoffConstruction>& constructions, const PathEnsemble& paths,
    LsmcOptions opts = {}) {
    if (constructions.empty())
        throw InvalidArgument("invariance_probe: need at least one construction");
    InvarianceProbe rep;
    for (const auto& c : constructions) {
        const auto samples = c.build(mu, paths);
        const double ks = ks_statistic(samples, [&](double x) { return mu.cdf(x); });
        if (ks >= ks_critical(static_cast<double>(samples.size())))
            throw LawMismatch("invariance_probe: construction '" + c.name +
                              "' fails the KS test at 1%");
        opts.measurable_from = c.measurable_from(paths);
        const auto sol = solve_lsmc(driver, samples, paths, opts);
        rep.names.push_back(c.name);
        rep.values.push_back(sol.y0);
        rep.std_errs.push_back(sol.std_err);
        rep.ks_stats.push_back(ks);
        rep.max_std_err = std::max(rep.max_std_err, sol.std_err);
    }
    for (std::size_t i = 0; i < rep.values.size(); ++i)
        for (std::size_t j = i + 1; j < rep.values.size(); ++j)
            rep.spread = std::max(rep.spread, std::fabs(rep.values[i] - rep.values[j]));
    rep.consistent = rep.spread <= 3.0 * rep.max_std_err;
    return rep;
}

//! Named builtin: the classical exponential-transform family. `constant_f: k`
//! is the driver g = −k‖z‖², whose transform is φ(x) = (e^{2kx}−1)/(2k) and
//! whose price is (2k)^{-1} log E[e^{2kμ}].
inline ZSeparableDriver constant_f_driver(double k, double horizon, int n = 1) {
    return ZSeparableDriver::make(n, horizon, ScalarField2D::constant(-k),
                                  ScalarField2D::constant(0.0), std::fabs(k) + 0.01,
                                  0.0);
}

//! Named builtin: the log-exponential example g = −½‖z‖², priced by log E[e^μ].
inline ZSeparableDriver example44_driver(double horizon, int n = 1) {
    return constant_f_driver(0.5, horizon, n);
}

}  // namespace gdist
