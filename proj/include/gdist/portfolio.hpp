#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gdist/distkit.hpp"
#include "gdist/drivers.hpp"
#include "gdist/efficiency.hpp"
#include "gdist/lawinv.hpp"

namespace gdist {

//! Increasing, strictly concave utility on (0,∞) with marginal and inverse
//! marginal. Tabulated utilities interpolate the log-marginal piecewise
//! linearly, so the marginal stays strictly decreasing and inverts exactly.
class Utility {
  public:
    enum class Kind { Power, Log, Exp, Tabulated };

    //! u(x) = x^γ/γ with γ in (0,1).
    static Utility power(double gamma) {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw InvalidArgument("Utility::power: gamma must lie in (0,1)");
        Utility u;
        u.kind_ = Kind::Power;
        u.a_ = gamma;
        u.validate();
        return u;
    }
    static Utility log_utility() {
        Utility u;
        u.kind_ = Kind::Log;
        u.validate();
        return u;
    }
    //! u(x) = −e^{−ax}/a with a > 0 (marginal bounded by 1 at x = 0).
    static Utility exponential(double a) {
        if (!(a > 0.0)) throw InvalidArgument("Utility::exponential: a must be positive");
        Utility u;
        u.kind_ = Kind::Exp;
        u.a_ = a;
        u.validate();
        return u;
    }
    //! Knots (x_i, u'(x_i)) with x increasing and marginal strictly decreasing.
    static Utility tabulated(std::vector<double> xs, std::vector<double> marginals) {
        Utility u;
        u.kind_ = Kind::Tabulated;
        if (xs.size() < 2 || xs.size() != marginals.size())
            throw InvalidArgument("Utility::tabulated: need matching knot arrays");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!(marginals[i] > 0.0))
                throw InvalidArgument("Utility::tabulated: marginals must be positive");
            if (i > 0 && (!(xs[i] > xs[i - 1]) || !(marginals[i] < marginals[i - 1])))
                throw InvalidArgument(
                    "Utility::tabulated: need increasing x and strictly decreasing u'");
        }
        u.xs_ = std::move(xs);
        u.log_marg_.resize(u.xs_.size());
        for (std::size_t i = 0; i < u.xs_.size(); ++i)
            u.log_marg_[i] = std::log(marginals[i]);
        u.validate();
        return u;
    }

    Kind kind() const { return kind_; }

    double value(double x) const {
        switch (kind_) {
            case Kind::Power: return std::pow(x, a_) / a_;
            case Kind::Log: return std::log(x);
            case Kind::Exp: return -std::exp(-a_ * x) / a_;
            case Kind::Tabulated: {
                // integrate the marginal from the first knot (trapezoid on the
                // tabulation; only used for reporting objectives)
                const double xc = std::clamp(x, xs_.front(), xs_.back());
                double acc = 0.0;
                for (std::size_t i = 1; i < xs_.size() && xs_[i - 1] < xc; ++i) {
                    const double b = std::min(xc, xs_[i]);
                    acc += 0.5 * (marginal(xs_[i - 1]) + marginal(b)) * (b - xs_[i - 1]);
                }
                return acc;
            }
        }
        return 0.0;
    }

    double marginal(double x) const {
        switch (kind_) {
            case Kind::Power: return std::pow(x, a_ - 1.0);
            case Kind::Log: return 1.0 / x;
            case Kind::Exp: return std::exp(-a_ * x);
            case Kind::Tabulated: {
                const double xc = std::clamp(x, xs_.front(), xs_.back());
                const auto it = std::upper_bound(xs_.begin(), xs_.end(), xc);
                std::size_t hi = std::clamp<std::size_t>(it - xs_.begin(), 1, xs_.size() - 1);
                const double w = (xc - xs_[hi - 1]) / (xs_[hi] - xs_[hi - 1]);
                return std::exp(log_marg_[hi - 1] * (1 - w) + log_marg_[hi] * w);
            }
        }
        return 0.0;
    }

    //! (u')^{-1}(v), floored at 0 where the marginal is bounded (exp utility).
    double inv_marginal(double v) const {
        if (!(v > 0.0)) throw InvalidArgument("Utility: inverse marginal needs v > 0");
        switch (kind_) {
            case Kind::Power: return std::pow(v, 1.0 / (a_ - 1.0));
            case Kind::Log: return 1.0 / v;
            case Kind::Exp: return v >= 1.0 ? 0.0 : -std::log(v) / a_;
            case Kind::Tabulated: {
                const double lv = std::log(v);
                if (lv >= log_marg_.front()) return xs_.front();
                if (lv <= log_marg_.back()) return xs_.back();
                std::size_t lo = 0, hi = log_marg_.size() - 1;
                while (hi - lo > 1) {
                    const std::size_t mid = (lo + hi) / 2;
                    (log_marg_[mid] > lv ? lo : hi) = mid;
                }
                const double w = (log_marg_[lo] - lv) / (log_marg_[lo] - log_marg_[hi]);
                return xs_[lo] + w * (xs_[hi] - xs_[lo]);
            }
        }
        return 0.0;
    }

    //! Declared marginal range (used to bracket Lagrange multipliers).
    std::pair<double, double> marginal_range() const {
        switch (kind_) {
            case Kind::Power:
            case Kind::Log: return {0.0, std::numeric_limits<double>::infinity()};
            case Kind::Exp: return {0.0, 1.0};
            case Kind::Tabulated:
                return {std::exp(log_marg_.back()), std::exp(log_marg_.front())};
        }
        return {0.0, 0.0};
    }

  private:
    void validate() const {
        std::vector<double> probes = {0.25, 0.5, 1.0, 2.0, 7.5};
        if (kind_ == Kind::Tabulated) {
            probes.clear();
            for (std::size_t i = 1; i < xs_.size(); ++i)
                probes.push_back(0.5 * (xs_[i - 1] + xs_[i]));
        }
        for (double x : probes) {
            const double back = inv_marginal(marginal(x));
            if (std::fabs(back - x) > 1e-10 * x)
                throw InvalidArgument("Utility: inverse marginal roundtrip failed");
        }
    }

    Kind kind_ = Kind::Log;
    double a_ = 0.5;
    std::vector<double> xs_, log_marg_;
};

//! Probability distortion w on [0,1] with w(0)=0, w(1)=1, strictly increasing.
class Distortion {
  public:
    enum class Kind { Power, Tabulated };

    //! w(p) = p^a; concave exactly when a <= 1.
    static Distortion power(double a) {
        if (!(a > 0.0)) throw InvalidArgument("Distortion::power: a must be positive");
        Distortion w;
        w.kind_ = Kind::Power;
        w.a_ = a;
        return w;
    }
    static Distortion tabulated(std::vector<double> ps, std::vector<double> ws) {
        Distortion w;
        w.kind_ = Kind::Tabulated;
        if (ps.size() < 2 || ps.size() != ws.size() || ps.front() != 0.0 ||
            ps.back() != 1.0 || ws.front() != 0.0 || ws.back() != 1.0)
            throw InvalidArgument("Distortion::tabulated: knots must span [0,1]");
        for (std::size_t i = 1; i < ps.size(); ++i)
            if (!(ps[i] > ps[i - 1]) || !(ws[i] > ws[i - 1]))
                throw InvalidArgument("Distortion::tabulated: must be strictly increasing");
        w.ps_ = std::move(ps);
        w.ws_ = std::move(ws);
        return w;
    }

    Kind kind() const { return kind_; }
    double param() const { return a_; }

    double operator()(double p) const {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        if (kind_ == Kind::Power) return std::pow(p, a_);
        const auto [i, t] = locate(ps_, p);
        return ws_[i] * (1 - t) + ws_[i + 1] * t;
    }

    double deriv(double p) const {
        if (kind_ == Kind::Power) {
            const double pc = std::clamp(p, 1e-300, 1.0);
            return a_ * std::pow(pc, a_ - 1.0);
        }
        const auto [i, t] = locate(ps_, std::clamp(p, 0.0, 1.0));
        (void)t;
        return (ws_[i + 1] - ws_[i]) / (ps_[i + 1] - ps_[i]);
    }

    double inverse(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= 1.0) return 1.0;
        if (kind_ == Kind::Power) return std::pow(s, 1.0 / a_);
        const auto it = std::upper_bound(ws_.begin(), ws_.end(), s);
        const std::size_t hi = std::clamp<std::size_t>(it - ws_.begin(), 1, ws_.size() - 1);
        const double t = (s - ws_[hi - 1]) / (ws_[hi] - ws_[hi - 1]);
        return ps_[hi - 1] + t * (ps_[hi] - ps_[hi - 1]);
    }

    //! w'' <= 0 checked on a grid (hypothesis of the law-invariant RDU theorem).
    bool concave(int grid = 257) const {
        if (kind_ == Kind::Power) return a_ <= 1.0;
        double prev = deriv(0.5 / grid);
        for (int i = 1; i < grid; ++i) {
            const double d = deriv((i + 0.5) / grid);
            if (d > prev + 1e-12) return false;
            prev = d;
        }
        return true;
    }

  private:
    static std::pair<std::size_t, double> locate(const std::vector<double>& g, double x) {
        std::size_t i = std::upper_bound(g.begin(), g.end(), x) - g.begin();
        i = std::clamp<std::size_t>(i, 1, g.size() - 1);
        return {i - 1, (x - g[i - 1]) / (g[i] - g[i - 1])};
    }

    Kind kind_ = Kind::Power;
    double a_ = 1.0;
    std::vector<double> ps_, ws_;
};

//! Upper concave envelope of a tabulated function on [0,1].
struct Envelope {
    std::vector<double> ps;      //!< input grid
    std::vector<double> fn;      //!< input values
    std::vector<double> env;     //!< envelope values at the grid nodes
    std::vector<std::size_t> hull;  //!< indices of the hull vertices

    //! Envelope value at arbitrary v (interpolation along the hull).
    double operator()(double v) const {
        const auto [i, t] = segment(v);
        const std::size_t a = hull[i], b = hull[i + 1];
        return fn[a] + t * (fn[b] - fn[a]);
    }

    //! Piecewise-constant derivative from the hull segments (nonincreasing).
    double derivative(double v) const {
        const auto [i, t] = segment(v);
        (void)t;
        const std::size_t a = hull[i], b = hull[i + 1];
        return (fn[b] - fn[a]) / (ps[b] - ps[a]);
    }

  private:
    std::pair<std::size_t, double> segment(double v) const {
        std::size_t lo = 0, hi = hull.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (ps[hull[mid]] <= v ? lo : hi) = mid;
        }
        const double pa = ps[hull[lo]], pb = ps[hull[lo + 1]];
        return {lo, std::clamp((v - pa) / (pb - pa), 0.0, 1.0)};
    }
};

//! Monotone-chain upper hull of the graph; exact on the grid nodes.
inline Envelope concave_envelope(std::vector<double> ps, std::vector<double> fn) {
    if (ps.size() < 2 || ps.size() != fn.size())
        throw InvalidArgument("concave_envelope: need matching grids of size >= 2");
    for (std::size_t i = 1; i < ps.size(); ++i)
        if (!(ps[i] > ps[i - 1]))
            throw InvalidArgument("concave_envelope: grid must be strictly increasing");
    for (double v : fn)
        if (!std::isfinite(v)) throw InvalidArgument("concave_envelope: non-finite value");
    Envelope e;
    e.hull.clear();
    for (std::size_t i = 0; i < ps.size(); ++i) {
        while (e.hull.size() >= 2) {
            const std::size_t o = e.hull[e.hull.size() - 2];
            const std::size_t a = e.hull[e.hull.size() - 1];
            const double cross = (ps[a] - ps[o]) * (fn[i] - fn[o]) -
                                 (fn[a] - fn[o]) * (ps[i] - ps[o]);
            if (cross >= 0.0)
                e.hull.pop_back();  // middle point on or below the chord
            else
                break;
        }
        e.hull.push_back(i);
    }
    e.env.resize(ps.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        while (seg + 1 < e.hull.size() - 1 && ps[e.hull[seg + 1]] <= ps[i]) ++seg;
        const std::size_t a = e.hull[seg], b = e.hull[seg + 1];
        if (i == a)
            e.env[i] = fn[i];
        else if (i == b)
            e.env[i] = fn[b];
        else
            e.env[i] = fn[a] + (fn[b] - fn[a]) * (ps[i] - ps[a]) / (ps[b] - ps[a]);
    }
    e.ps = std::move(ps);
    e.fn = std::move(fn);
    return e;
}

namespace detail {

//! Monotone bisection for a decreasing map on a log-spaced bracket.
template <class Fn>
double solve_decreasing(Fn&& value, double target, double lo, double hi,
                        double rel_tol, const std::string& what) {
    double vlo = value(lo), vhi = value(hi);
    if (!(vlo >= target && target >= vhi))
        throw BudgetInfeasible(what + ": target outside the bracketed range [" +
                               std::to_string(vhi) + ", " + std::to_string(vlo) + "]");
    double llo = std::log(lo), lhi = std::log(hi);
    double lam = std::exp(0.5 * (llo + lhi)), v = value(lam);
    for (int it = 0; it < 200; ++it) {
        if (std::fabs(v - target) <= rel_tol * (1.0 + std::fabs(target))) return lam;
        (v > target ? llo : lhi) = std::log(lam);
        lam = std::exp(0.5 * (llo + lhi));
        v = value(lam);
    }
    if (std::fabs(v - target) <= 100 * rel_tol * (1.0 + std::fabs(target))) return lam;
    throw RootBracketFailure(what + ": bisection did not meet the residual target");
}

}  // namespace detail

struct EuTwoRateResult {
    double lambda = 0.0;
    double budget_residual = 0.0;   //!< independent quadrature re-check
    double expected_utility = 0.0;
    bool deterministic_market = false;  //!< θ ≡ 0: the payoff degenerates to a point
    DistributionLaw rho_law = DistributionLaw::dirac(1.0);
    std::function<double(double)> quantile;      //!< p ↦ (u')^{-1}(λ F^{-1}(1−p))
    std::function<double(double)> payoff_of_rho; //!< ρ_T ↦ (u')^{-1}(λρ_T)
};

//! Expected-utility optimum in the two-rate market: X* = (u')^{-1}(λρ_T) with
//! λ fixed by E[ρ_T X*] = x0. Requires 1'(σ_t')^{-1}θ_t ≤ 0 on the grid, which
//! certifies X* efficient at the deposit-rate coupling.
inline EuTwoRateResult eu_two_rate(const Utility& u, const MarketParams& market,
                                   double x0) {
    if (!(x0 > 0.0)) throw InvalidArgument("eu_two_rate: initial wealth must be positive");
    for (int k = 0; k < market.grid.steps; ++k)
        if (market.one_sigmaT_theta(k) > 1e-14)
            throw HypothesisViolated(
                "eu_two_rate: requires 1'(sigma')^{-1} theta <= 0 at every node");
    const auto spd = density_law(market, DensityKind::Standard);
    EuTwoRateResult res;
    res.rho_law = spd.law();

    if (spd.log_var <= 0.0) {
        // deterministic density: the optimum is the point mass x0 e^{∫r}
        const double rho = std::exp(spd.log_mean);
        const double xstar = x0 / rho;
        res.deterministic_market = true;
        res.lambda = u.marginal(xstar) / rho;
        res.budget_residual = 0.0;
        res.expected_utility = u.value(xstar);
        res.quantile = [xstar](double) { return xstar; };
        res.payoff_of_rho = [xstar](double) { return xstar; };
        return res;
    }

    const double lm = spd.log_mean, ls = std::sqrt(spd.log_var);
    auto budget = [&](double lambda) {
        // E[rho (u')^{-1}(lambda rho)] over the lognormal law, in u-space
        auto integrand = [&](double z) {
            const double rho = std::exp(lm + ls * z);
            return rho * u.inv_marginal(lambda * rho) * std_normal_pdf(z);
        };
        return adaptive_gl(integrand, -detail::kGaussUMax, detail::kGaussUMax, 1e-13,
                           1e-11)
            .value;
    };
    res.lambda = detail::solve_decreasing(budget, x0, 1e-12, 1e12, 1e-9, "eu_two_rate");

    const double lambda = res.lambda;
    res.quantile = [u, lambda, lm, ls](double p) {
        const double fq = std::exp(lm + ls * std_normal_quantile(1.0 - p));
        return u.inv_marginal(lambda * fq);
    };
    res.payoff_of_rho = [u, lambda](double rho) { return u.inv_marginal(lambda * rho); };

    // budget identity re-evaluated as a p-space quantile integral
    const auto law = res.rho_law;
    auto pspace = [&](double z) {
        const double fq = std::exp(lm + ls * z);
        return fq * u.inv_marginal(lambda * fq) * std_normal_pdf(z);
    };
    const double recheck =
        adaptive_gl(pspace, -detail::kGaussUMax, detail::kGaussUMax, 1e-13, 1e-11)
            .value;
    res.budget_residual = std::fabs(recheck - x0) / x0;
    res.expected_utility = expect(DistributionLaw::lognormal(lm, ls), [&](double rho) {
        return u.value(std::max(u.inv_marginal(lambda * rho), 1e-300));
    });
    return res;
}

struct RduResult {
    double lambda = 0.0;
    double budget_residual = 0.0;
    double objective = 0.0;
    bool envelope_exact = false;  //!< concave case: analytic derivative in use
    Envelope envelope;
    std::function<double(double)> quantile;
    Attainment attainment = Attainment::Approached;
    double costless_measure = 0.0;
};

//! Rank-dependent utility under a sublinear driver (mean-budget pricing):
//! (μ*)^{-1}(p) = (u')^{-1}(λ φ'(1−w(1−p))) with φ the concave envelope of
//! v ↦ 1−w^{-1}(1−v) and λ fixed by ∫₀¹ (μ*)^{-1}(p) dp = y0. For concave w
//! the envelope is the function itself and φ'(1−w(1−p)) = 1/w'(1−p), the
//! classical first-order condition.
inline RduResult rdu_sublinear(const Utility& u, const Distortion& w, double y0,
                               int envelope_grid = 4097,
                               const SublinearDriver* driver = nullptr) {
    if (!(y0 > 0.0)) throw InvalidArgument("rdu_sublinear: initial wealth must be positive");
    RduResult res;
    std::vector<double> ps(static_cast<std::size_t>(envelope_grid));
    std::vector<double> fn(static_cast<std::size_t>(envelope_grid));
    for (int i = 0; i < envelope_grid; ++i) {
        const double v = static_cast<double>(i) / (envelope_grid - 1);
        ps[static_cast<std::size_t>(i)] = v;
        fn[static_cast<std::size_t>(i)] = 1.0 - w.inverse(1.0 - v);
    }
    res.envelope = concave_envelope(ps, fn);
    res.envelope_exact = true;
    for (std::size_t i = 0; i < res.envelope.env.size(); ++i)
        if (res.envelope.env[i] > fn[i] + 1e-12) {
            res.envelope_exact = false;
            break;
        }

    // self-contained evaluator (copies survive past this call)
    const auto quantile_at = [u, w, env = res.envelope,
                              exact = res.envelope_exact](double lambda, double p) {
        const double slope =
            exact ? 1.0 / w.deriv(1.0 - p) : env.derivative(1.0 - w(1.0 - p));
        return u.inv_marginal(lambda * slope);
    };
    auto budget = [&](double lambda) {
        return adaptive_gl([&](double p) { return quantile_at(lambda, p); }, 1e-12,
                           1.0 - 1e-12, 1e-12, 1e-10)
            .value;
    };
    res.lambda = detail::solve_decreasing(budget, y0, 1e-12, 1e12, 1e-9, "rdu_sublinear");

    const double lambda = res.lambda;
    res.quantile = [quantile_at, lambda](double p) { return quantile_at(lambda, p); };
    res.budget_residual = std::fabs(budget(lambda) - y0) / y0;
    res.objective = adaptive_gl(
                        [&](double p) {
                            return u.value(std::max(quantile_at(lambda, p), 1e-300)) *
                                   w.deriv(1.0 - p);
                        },
                        1e-12, 1.0 - 1e-12, 1e-12, 1e-10)
                        .value;
    if (driver) {
        res.costless_measure = driver->costless_measure();
        res.attainment = res.costless_measure > 0.0 ? Attainment::Attained
                                                    : Attainment::Approached;
    }
    return res;
}

struct RduLawInvariantResult {
    double lambda = 0.0;
    double budget_residual = 0.0;
    double foc_residual_max = 0.0;
    std::vector<double> x_grid;
    std::vector<double> cdf;  //!< μ*(x) on x_grid, clamped to [0,1]
    std::function<double(double)> quantile;
    double zero_mass = 0.0;   //!< mass placed at the x = 0 corner by clamping
};

//! Rank-dependent utility under a law-invariant z-separable driver:
//! μ* solves u'(x) w'(1−μ*(x)) = λ φ_y(T,x) with the multiplier fixed by
//! E[φ(T,μ*)] = φ(0,y0). Requires w concave strictly increasing and
//! f(T,·) ≤ 0 (so φ(T,·) is convex and the pointwise problems are concave).
inline RduLawInvariantResult rdu_law_invariant(const Utility& u, const Distortion& w,
                                               const PhiTransform& phi, double y0,
                                               int x_grid_n = 513) {
    if (!(y0 > 0.0))
        throw InvalidArgument("rdu_law_invariant: initial wealth must be positive");
    if (!w.concave())
        throw HypothesisViolated("rdu_law_invariant: distortion must be concave");
    for (double y : phi.y_grid())
        if (phi.driver().f(phi.horizon(), y) > 1e-12)
            throw HypothesisViolated("rdu_law_invariant: requires f(T,.) <= 0");
    const double T = phi.horizon();

    // quantile at p for a given multiplier: the unique x with
    // lambda phi_y(T,x) / u'(x) = w'(1-p); the ratio is increasing in x.
    // Copies keep the returned closure valid beyond the caller's arguments.
    const auto quantile_root = [u, w, phi, T](double lambda, double p) {
        const double target = w.deriv(1.0 - p);
        auto ratio = [&](double x) { return lambda * phi.phi_y(T, x) / u.marginal(x); };
        double lo = 1e-12, hi = 1.0;
        if (ratio(lo) >= target) return 0.0;  // corner: clamp at the floor
        int guard = 0;
        while (ratio(hi) < target) {
            hi *= 2.0;
            if (++guard > 80)
                throw RootBracketFailure("rdu_law_invariant: unbounded quantile");
        }
        // bisection in log-x: scale-free over the wide multiplier bracket
        double llo = std::log(lo), lhi = std::log(hi);
        for (int it = 0; it < 64 && lhi - llo > 1e-12; ++it) {
            const double mid = 0.5 * (llo + lhi);
            (ratio(std::exp(mid)) < target ? llo : lhi) = mid;
        }
        return std::exp(0.5 * (llo + lhi));
    };

    auto budget = [&](double lambda) {
        return adaptive_gl(
                   [&](double p) { return phi.phi(T, quantile_root(lambda, p)); }, 1e-12,
                   1.0 - 1e-12, 1e-12, 1e-10)
            .value;
    };
    const double target = phi.phi(0.0, y0);
    // monotonicity spot-check on the bracket before bisecting
    {
        const double b_lo = budget(1e-12), b_mid = budget(1.0), b_hi = budget(1e12);
        if (!(b_lo >= b_mid && b_mid >= b_hi))
            throw RootBracketFailure("rdu_law_invariant: budget map is not decreasing");
    }
    RduLawInvariantResult res;
    res.lambda = detail::solve_decreasing(budget, target, 1e-12, 1e12, 1e-9,
                                          "rdu_law_invariant");
    const double lambda = res.lambda;
    res.budget_residual = std::fabs(budget(lambda) - target) / (1.0 + std::fabs(target));
    res.quantile = [quantile_root, lambda](double p) { return quantile_root(lambda, p); };

    // tabulated CDF via the first-order condition, clamped to [0,1]
    const double x_max = 1.5 * quantile_root(lambda, 1.0 - 1e-6) + 1e-6;
    res.x_grid.resize(static_cast<std::size_t>(x_grid_n));
    res.cdf.resize(static_cast<std::size_t>(x_grid_n));
    for (int i = 0; i < x_grid_n; ++i) {
        const double x = x_max * i / (x_grid_n - 1.0);
        res.x_grid[static_cast<std::size_t>(i)] = x;
        double m;
        const double xeval = std::max(x, 1e-12);
        const double v = lambda * phi.phi_y(T, xeval) / u.marginal(xeval);
        // invert w' on (0,1): w'(1-mu) = v, w' decreasing away from 1
        if (v <= w.deriv(1.0)) {
            m = 0.0;  // marginal too low: CDF clamped at 0
        } else {
            double lo = 0.0, hi = 1.0 - 1e-15;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (w.deriv(1.0 - mid) < v ? lo : hi) = mid;
            }
            m = 0.5 * (lo + hi);
        }
        res.cdf[static_cast<std::size_t>(i)] = std::clamp(m, 0.0, 1.0);
    }
    for (std::size_t i = 1; i < res.cdf.size(); ++i)
        if (res.cdf[i] < res.cdf[i - 1] - 1e-12)
            throw NumericalFailure("rdu_law_invariant: CDF not monotone");
    res.zero_mass = res.cdf.front();

    // first-order condition residual on interior quantiles
    for (double p : uniform_grid(0.02, 0.98, 49)) {
        const double x = quantile_root(lambda, p);
        if (x <= 0.0) continue;
        const double lhs = u.marginal(x) * w.deriv(1.0 - p);
        const double rhs = lambda * phi.phi_y(T, x);
        res.foc_residual_max =
            std::max(res.foc_residual_max, std::fabs(lhs - rhs) / (1.0 + std::fabs(rhs)));
    }
    return res;
}

}  // namespace gdist
