#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gdist/errors.hpp"
#include "gdist/normal.hpp"
#include "gdist/pairwise.hpp"
#include "gdist/quadrature.hpp"

namespace gdist {

enum class Interp { PiecewiseConstant, PiecewiseLinear };

//! Parametric behaviour of a tabulated quantile outside its knot range.
struct TailSpec {
    enum class Kind { None, Normal, Lognormal, Bounded };
    Kind kind = Kind::None;
    double a = 0.0;  //!< location (m) for Normal/Lognormal, lower bound for Bounded
    double b = 0.0;  //!< scale (s) for Normal/Lognormal, upper bound for Bounded

    static TailSpec none() { return {}; }
    static TailSpec normal(double m, double s) { return {Kind::Normal, m, s}; }
    static TailSpec lognormal(double m, double s) { return {Kind::Lognormal, m, s}; }
    static TailSpec bounded(double lo, double hi) { return {Kind::Bounded, lo, hi}; }
};

//! A distribution represented by its right-continuous inverse CDF on (0,1).
//!
//! Piecewise-linear form: knots (p_i, x_i) interpolated linearly, tails per
//! TailSpec beyond the knot range. Piecewise-constant form: values v_0..v_{m-1}
//! on segments split at interior cut probabilities c_1..c_{m-1}, with
//! q(p) = v_j for p in [c_j, c_{j+1}) — right-continuous at every cut.
class QuantileFunction {
  public:
    static QuantileFunction piecewise_linear(std::vector<double> ps, std::vector<double> xs,
                                             TailSpec tails = TailSpec::none()) {
        QuantileFunction q;
        q.interp_ = Interp::PiecewiseLinear;
        q.ps_ = std::move(ps);
        q.xs_ = std::move(xs);
        q.tails_ = tails;
        q.validate();
        return q;
    }

    //! values on segments; cuts are the m-1 interior breakpoints.
    static QuantileFunction piecewise_constant(std::vector<double> cuts,
                                               std::vector<double> values,
                                               TailSpec tails = TailSpec::none()) {
        QuantileFunction q;
        q.interp_ = Interp::PiecewiseConstant;
        q.ps_ = std::move(cuts);
        q.xs_ = std::move(values);
        q.tails_ = tails;
        q.validate();
        return q;
    }

    //! Equal-weight discrete law from samples (sorted internally).
    static QuantileFunction discrete(std::vector<double> values) {
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        if (n == 0) throw InvalidArgument("QuantileFunction::discrete: empty sample set");
        std::vector<double> cuts(n - 1);
        for (std::size_t j = 1; j < n; ++j)
            cuts[j - 1] = static_cast<double>(j) / static_cast<double>(n);
        return piecewise_constant(std::move(cuts), std::move(values));
    }

    double operator()(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw InvalidArgument("QuantileFunction: p must lie in (0,1)");
        if (interp_ == Interp::PiecewiseConstant) {
            // index = number of cuts <= p, so the value jumps at each cut.
            const auto it = std::upper_bound(ps_.begin(), ps_.end(), p);
            std::size_t j = static_cast<std::size_t>(it - ps_.begin());
            // upper_bound counts cuts < p or == p? upper_bound -> first > p, so
            // distance counts cuts <= p. Right-continuity follows.
            return xs_[std::min(j, xs_.size() - 1)];
        }
        if (p < ps_.front()) return lower_tail(p);
        if (p > ps_.back()) return upper_tail(p);
        const auto it = std::lower_bound(ps_.begin(), ps_.end(), p);
        std::size_t hi = static_cast<std::size_t>(it - ps_.begin());
        if (ps_[hi] == p) return xs_[hi];
        const std::size_t lo = hi - 1;
        const double t = (p - ps_[lo]) / (ps_[hi] - ps_[lo]);
        return xs_[lo] + t * (xs_[hi] - xs_[lo]);
    }

    //! Quantile at p = Φ(u), evaluated without forming Φ(u) when the tails are
    //! Gaussian — keeps full accuracy for |u| beyond the knot range.
    double at_gauss_u(double u) const {
        const double p = std_normal_cdf(u);
        if (interp_ == Interp::PiecewiseLinear && !ps_.empty()) {
            if (p < ps_.front() || p > ps_.back() || p <= 0.0 || p >= 1.0) {
                switch (tails_.kind) {
                    case TailSpec::Kind::Normal: return tails_.a + tails_.b * u;
                    case TailSpec::Kind::Lognormal: return std::exp(tails_.a + tails_.b * u);
                    default: break;
                }
            }
        }
        const double pc = std::clamp(p, 1e-300, 1.0 - 1e-16);
        return (*this)(pc);
    }

    Interp interp() const { return interp_; }
    const TailSpec& tails() const { return tails_; }
    //! PL: knot probabilities; PC: interior cut probabilities.
    const std::vector<double>& ps() const { return ps_; }
    //! PL: knot values; PC: segment values.
    const std::vector<double>& xs() const { return xs_; }

    bool is_discrete() const {
        return interp_ == Interp::PiecewiseConstant && tails_.kind == TailSpec::Kind::None;
    }

  private:
    void validate() const {
        const std::size_t expected_ps =
            interp_ == Interp::PiecewiseConstant ? xs_.size() - 1 : xs_.size();
        if (xs_.empty() || ps_.size() != expected_ps)
            throw InvalidArgument("QuantileFunction: inconsistent knot arrays");
        for (double p : ps_)
            if (!(p > 0.0 && p < 1.0))
                throw InvalidArgument("QuantileFunction: knot p outside (0,1)");
        for (std::size_t i = 1; i < ps_.size(); ++i)
            if (!(ps_[i] > ps_[i - 1]))
                throw InvalidArgument("QuantileFunction: knot p not strictly increasing");
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            if (!std::isfinite(xs_[i]))
                throw InvalidArgument("QuantileFunction: non-finite knot value");
            if (i > 0 && xs_[i] < xs_[i - 1])
                throw InvalidArgument("QuantileFunction: x-values must be nondecreasing");
        }
        if (tails_.kind == TailSpec::Kind::Bounded &&
            (tails_.a > xs_.front() || tails_.b < xs_.back()))
            throw InvalidArgument("QuantileFunction: bounded tails tighter than knots");
        if ((tails_.kind == TailSpec::Kind::Normal ||
             tails_.kind == TailSpec::Kind::Lognormal) &&
            !(tails_.b > 0.0))
            throw InvalidArgument("QuantileFunction: parametric tail needs positive scale");
    }

    double lower_tail(double p) const {
        switch (tails_.kind) {
            case TailSpec::Kind::Normal: return tails_.a + tails_.b * std_normal_quantile(p);
            case TailSpec::Kind::Lognormal:
                return std::exp(tails_.a + tails_.b * std_normal_quantile(p));
            case TailSpec::Kind::Bounded: {
                const double t = p / ps_.front();
                return tails_.a + t * (xs_.front() - tails_.a);
            }
            case TailSpec::Kind::None: return xs_.front();
        }
        return xs_.front();
    }

    double upper_tail(double p) const {
        switch (tails_.kind) {
            case TailSpec::Kind::Normal: return tails_.a + tails_.b * std_normal_quantile(p);
            case TailSpec::Kind::Lognormal:
                return std::exp(tails_.a + tails_.b * std_normal_quantile(p));
            case TailSpec::Kind::Bounded: {
                const double t = (p - ps_.back()) / (1.0 - ps_.back());
                return xs_.back() + t * (tails_.b - xs_.back());
            }
            case TailSpec::Kind::None: return xs_.back();
        }
        return xs_.back();
    }

    Interp interp_ = Interp::PiecewiseLinear;
    std::vector<double> ps_, xs_;
    TailSpec tails_;
};

//! A probability law μ with CDF, right-continuous quantile, and the moment
//! functional E[f(μ)].
class DistributionLaw {
  public:
    enum class Kind { Dirac, TwoPoint, Normal, Lognormal, Empirical, Tabulated };

    static DistributionLaw dirac(double c) {
        DistributionLaw d;
        d.kind_ = Kind::Dirac;
        d.a_ = c;
        if (!std::isfinite(c)) throw InvalidArgument("Dirac: non-finite point");
        return d;
    }
    static DistributionLaw two_point(double lo, double hi, double p_hi) {
        DistributionLaw d;
        d.kind_ = Kind::TwoPoint;
        d.a_ = lo;
        d.b_ = hi;
        d.p_hi_ = p_hi;
        if (!(p_hi > 0.0 && p_hi < 1.0)) throw InvalidArgument("TwoPoint: p_hi outside (0,1)");
        if (!(lo <= hi)) throw InvalidArgument("TwoPoint: requires lo <= hi");
        return d;
    }
    static DistributionLaw normal(double m, double s) {
        DistributionLaw d;
        d.kind_ = Kind::Normal;
        d.a_ = m;
        d.b_ = s;
        if (!(s > 0.0)) throw InvalidArgument("Normal: s must be positive");
        return d;
    }
    static DistributionLaw lognormal(double m, double s) {
        DistributionLaw d;
        d.kind_ = Kind::Lognormal;
        d.a_ = m;
        d.b_ = s;
        if (!(s > 0.0)) throw InvalidArgument("Lognormal: s must be positive");
        return d;
    }
    static DistributionLaw empirical(std::vector<double> samples) {
        DistributionLaw d;
        d.kind_ = Kind::Empirical;
        std::sort(samples.begin(), samples.end());
        if (samples.empty()) throw InvalidArgument("Empirical: empty sample set");
        d.samples_ = std::move(samples);
        return d;
    }
    static DistributionLaw tabulated(QuantileFunction q) {
        DistributionLaw d;
        d.kind_ = Kind::Tabulated;
        d.tab_ = std::move(q);
        return d;
    }

    //! Only valid for Kind::Tabulated.
    const QuantileFunction& tabulated_fn() const {
        if (kind_ != Kind::Tabulated)
            throw InvalidArgument("tabulated_fn: law is not tabulated");
        return *tab_;
    }

    Kind kind() const { return kind_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    double param_p_hi() const { return p_hi_; }
    const std::vector<double>& samples() const { return samples_; }

    //! Right-continuous inverse CDF.
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0))
            throw InvalidArgument("DistributionLaw::quantile: p must lie in (0,1)");
        switch (kind_) {
            case Kind::Dirac: return a_;
            case Kind::TwoPoint: return p < 1.0 - p_hi_ ? a_ : b_;
            case Kind::Normal: return a_ + b_ * std_normal_quantile(p);
            case Kind::Lognormal: return std::exp(a_ + b_ * std_normal_quantile(p));
            case Kind::Empirical: {
                const std::size_t n = samples_.size();
                const double nd = static_cast<double>(n);
                std::size_t j = std::min<std::size_t>(
                    n - 1, static_cast<std::size_t>(p * nd));
                // settle against the exact double cuts k/n (right-continuous)
                while (j + 1 < n && static_cast<double>(j + 1) / nd <= p) ++j;
                while (j > 0 && static_cast<double>(j) / nd > p) --j;
                return samples_[j];
            }
            case Kind::Tabulated: return (*tab_)(p);
        }
        return a_;
    }

    //! Quantile at p = Φ(u); exact in u for Gaussian-backed kinds.
    double quantile_at_gauss_u(double u) const {
        switch (kind_) {
            case Kind::Dirac: return a_;
            case Kind::Normal: return a_ + b_ * u;
            case Kind::Lognormal: return std::exp(a_ + b_ * u);
            case Kind::TwoPoint: {
                const double ucut = std_normal_quantile(1.0 - p_hi_);
                return u < ucut ? a_ : b_;
            }
            case Kind::Tabulated: return tab_->at_gauss_u(u);
            case Kind::Empirical: {
                const double p = std::clamp(std_normal_cdf(u), 1e-300, 1.0 - 1e-16);
                return quantile(p);
            }
        }
        return a_;
    }

    double cdf(double x) const {
        switch (kind_) {
            case Kind::Dirac: return x < a_ ? 0.0 : 1.0;
            case Kind::TwoPoint:
                return x < a_ ? 0.0 : (x < b_ ? 1.0 - p_hi_ : 1.0);
            case Kind::Normal: return std_normal_cdf((x - a_) / b_);
            case Kind::Lognormal:
                return x <= 0.0 ? 0.0 : std_normal_cdf((std::log(x) - a_) / b_);
            case Kind::Empirical: {
                const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
                return static_cast<double>(it - samples_.begin()) /
                       static_cast<double>(samples_.size());
            }
            case Kind::Tabulated: {
                // F(x) = sup{p : q(p) <= x} by bisection on the monotone quantile.
                double lo = 1e-15, hi = 1.0 - 1e-15;
                if ((*tab_)(lo) > x) return 0.0;
                if ((*tab_)(hi) <= x) return 1.0;
                for (int it = 0; it < 80; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    ((*tab_)(mid) <= x ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        }
        return 0.0;
    }

    bool atomless() const {
        switch (kind_) {
            case Kind::Normal:
            case Kind::Lognormal: return true;
            case Kind::Dirac:
            case Kind::TwoPoint:
            case Kind::Empirical: return false;
            case Kind::Tabulated: {
                if (tab_->interp() != Interp::PiecewiseLinear) return false;
                const auto& xs = tab_->xs();
                for (std::size_t i = 1; i < xs.size(); ++i)
                    if (!(xs[i] > xs[i - 1])) return false;
                return true;
            }
        }
        return false;
    }

    //! Tabulated quantile representation: Chebyshev-spaced p-grid (clustered at
    //! both endpoints, where anti-comonotonic integrands concentrate) with the
    //! law's own parametric tails when it has them.
    QuantileFunction to_quantile(int n_knots = 2048) const {
        switch (kind_) {
            case Kind::Dirac:
                return QuantileFunction::piecewise_constant({}, {a_});
            case Kind::TwoPoint:
                return QuantileFunction::piecewise_constant({1.0 - p_hi_}, {a_, b_});
            case Kind::Empirical: {
                auto vals = samples_;
                return QuantileFunction::discrete(std::move(vals));
            }
            case Kind::Tabulated: return *tab_;
            case Kind::Normal:
            case Kind::Lognormal: {
                std::vector<double> ps(n_knots), xs(n_knots);
                for (int k = 1; k <= n_knots; ++k) {
                    const double p =
                        0.5 * (1.0 - std::cos(M_PI * k / (n_knots + 1.0)));
                    ps[k - 1] = p;
                    xs[k - 1] = quantile(p);
                }
                const TailSpec tails = kind_ == Kind::Normal
                                           ? TailSpec::normal(a_, b_)
                                           : TailSpec::lognormal(a_, b_);
                return QuantileFunction::piecewise_linear(std::move(ps), std::move(xs),
                                                          tails);
            }
        }
        throw InvalidArgument("to_quantile: unknown kind");
    }

    double mean() const;

  private:
    Kind kind_ = Kind::Dirac;
    double a_ = 0.0, b_ = 0.0, p_hi_ = 0.5;
    std::vector<double> samples_;
    std::optional<QuantileFunction> tab_;
};

namespace detail {

inline constexpr double kGaussUMax = 38.5;  // Φ(-38.5) underflows; full support
inline constexpr double kClipEps = 1e-10;   // p-space clipping for tabulated laws

}  // namespace detail

struct ExpectDiagnostics {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

//! E[f(μ)] = ∫ f(x) dμ(x). Finite laws are summed exactly; Gaussian-backed
//! laws integrate f(q(Φ(u)))·φ(u) over u with adaptive Gauss–Legendre; other
//! tabulated laws integrate over p in [ε, 1−ε] with parametric tail pieces
//! evaluated in u-space.
template <class Fn>
ExpectDiagnostics expect_diag(const DistributionLaw& law, Fn&& f) {
    ExpectDiagnostics out;
    using Kind = DistributionLaw::Kind;
    switch (law.kind()) {
        case Kind::Dirac:
            out.value = f(law.param_a());
            return out;
        case Kind::TwoPoint:
            out.value = (1.0 - law.param_p_hi()) * f(law.param_a()) +
                        law.param_p_hi() * f(law.param_b());
            return out;
        case Kind::Empirical: {
            const auto& s = law.samples();
            std::vector<double> vals(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) vals[i] = f(s[i]);
            out.value = pairwise_mean(vals);
            return out;
        }
        case Kind::Normal:
        case Kind::Lognormal: {
            auto integrand = [&](double u) {
                return f(law.quantile_at_gauss_u(u)) * std_normal_pdf(u);
            };
            QuadratureResult r = adaptive_gl(integrand, -detail::kGaussUMax,
                                             detail::kGaussUMax, 1e-13, 1e-10);
            out = {r.value, r.error, r.evaluations, r.converged};
            return out;
        }
        case Kind::Tabulated: {
            const double eps = detail::kClipEps;
            auto body = [&](double p) { return f(law.quantile(p)); };
            QuadratureResult r;
            const TailSpec tails = law.tabulated_fn().tails();
            const bool gauss_tails = tails.kind == TailSpec::Kind::Normal ||
                                     tails.kind == TailSpec::Kind::Lognormal;
            if (gauss_tails) {
                r = adaptive_gl(body, eps, 1.0 - eps, 1e-13, 1e-10);
                // tail corrections in u-space, where the parametric tails live
                const double u_eps = std_normal_quantile(eps);
                auto utail = [&](double u) {
                    return f(law.quantile_at_gauss_u(u)) * std_normal_pdf(u);
                };
                QuadratureResult lo =
                    adaptive_gl(utail, -detail::kGaussUMax, u_eps, 1e-14, 1e-10);
                QuadratureResult hi =
                    adaptive_gl(utail, -u_eps, detail::kGaussUMax, 1e-14, 1e-10);
                r.value += lo.value + hi.value;
                r.error += lo.error + hi.error;
                r.evaluations += lo.evaluations + hi.evaluations;
                r.converged = r.converged && lo.converged && hi.converged;
            } else {
                // bounded or clamped tails: q stays finite up to the endpoints,
                // so the clipped mass is below the tolerance already
                r = adaptive_gl(body, 1e-15, 1.0 - 1e-15, 1e-13, 1e-10);
            }
            out = {r.value, r.error, r.evaluations, r.converged};
            return out;
        }
    }
    return out;
}

template <class Fn>
double expect(const DistributionLaw& law, Fn&& f) {
    ExpectDiagnostics d = expect_diag(law, std::forward<Fn>(f));
    if (!d.converged)
        throw NonIntegrable("expect: quadrature failed to converge across refinements");
    return d.value;
}

inline double DistributionLaw::mean() const {
    return expect(*this, [](double x) { return x; });
}

//! ∫₀¹ F_η^{-1}(1−p) μ^{-1}(p) dp — the anti-comonotonic product integral,
//! the infimum of E[ηX] over couplings with the given marginals.
//!
//! When both arguments are discrete the integral is the exact finite sum over
//! merged cut points, accumulated left-to-right in p.
inline double hl_integral(const QuantileFunction& mu, const QuantileFunction& eta) {
    if (mu.is_discrete() && eta.is_discrete()) {
        if (mu.ps() == eta.ps()) {
            // Identical segment structure (e.g. two uniform laws on the same
            // number of points): pair μ's j-th segment with η's reversed one.
            // Accumulated left-to-right in p; no arithmetic on cut locations
            // beyond widths, so a brute-force coupling sum over the same
            // segments reproduces this value bit-for-bit.
            const std::size_t m = mu.xs().size();
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double a = j == 0 ? 0.0 : mu.ps()[j - 1];
                const double b = j + 1 == m ? 1.0 : mu.ps()[j];
                acc += (b - a) * (eta.xs()[m - 1 - j] * mu.xs()[j]);
            }
            return acc;
        }
        std::vector<double> cuts{0.0};
        cuts.insert(cuts.end(), mu.ps().begin(), mu.ps().end());
        for (double c : eta.ps()) cuts.push_back(1.0 - c);
        cuts.push_back(1.0);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double a = cuts[k], b = cuts[k + 1];
            const double pm = 0.5 * (a + b);
            acc += (b - a) * (eta(1.0 - pm) * mu(pm));
        }
        return acc;
    }
    auto integrand = [&](double u) {
        return eta.at_gauss_u(-u) * mu.at_gauss_u(u) * std_normal_pdf(u);
    };
    QuadratureResult r = adaptive_gl(integrand, -detail::kGaussUMax, detail::kGaussUMax,
                                     1e-13, 1e-10);
    if (!r.converged)
        throw NonIntegrable("hl_integral: quadrature failed to converge");
    return r.value;
}

//! Law-level overload using exact parametric quantiles where available.
inline double hl_integral(const DistributionLaw& mu, const DistributionLaw& eta) {
    if ((mu.kind() == DistributionLaw::Kind::Empirical ||
         mu.kind() == DistributionLaw::Kind::Dirac ||
         mu.kind() == DistributionLaw::Kind::TwoPoint ||
         mu.kind() == DistributionLaw::Kind::Tabulated) &&
        (eta.kind() == DistributionLaw::Kind::Empirical ||
         eta.kind() == DistributionLaw::Kind::Dirac ||
         eta.kind() == DistributionLaw::Kind::TwoPoint ||
         eta.kind() == DistributionLaw::Kind::Tabulated)) {
        const auto qm = mu.to_quantile();
        const auto qe = eta.to_quantile();
        if (qm.is_discrete() && qe.is_discrete()) return hl_integral(qm, qe);
    }
    auto integrand = [&](double u) {
        return eta.quantile_at_gauss_u(-u) * mu.quantile_at_gauss_u(u) *
               std_normal_pdf(u);
    };
    QuadratureResult r = adaptive_gl(integrand, -detail::kGaussUMax, detail::kGaussUMax,
                                     1e-13, 1e-10);
    if (!r.converged)
        throw NonIntegrable("hl_integral: quadrature failed to converge");
    return r.value;
}

//! Samplewise efficient payoff X*_i = μ^{-1}(1 − F_η(η_i)); the unique law-μ
//! payoff anti-comonotonic with η when η is atomless.
//!
//! atom_tol is the mass fraction of exactly-tied CDF values above which the
//! reference law is reported as carrying an atom.
inline std::vector<double> anticomonotone_payoff(
    const QuantileFunction& mu, std::span<const double> eta_samples,
    const std::function<double(double)>& eta_cdf, double atom_tol = 1e-3) {
    const std::size_t n = eta_samples.size();
    if (n == 0) return {};
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = eta_cdf(eta_samples[i]);
    std::vector<double> sorted_u = u;
    std::sort(sorted_u.begin(), sorted_u.end());
    std::size_t run = 1, worst = 0;
    for (std::size_t i = 1; i < n; ++i) {
        run = (sorted_u[i] == sorted_u[i - 1]) ? run + 1 : 1;
        if (run >= 2) worst = std::max(worst, run);
    }
    if (worst >= 2 && static_cast<double>(worst) / static_cast<double>(n) >= atom_tol)
        throw AtomDetected("anticomonotone_payoff: eta law has an atom of mass >= " +
                           std::to_string(atom_tol));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(1.0 - u[i], 1e-16, 1.0 - 1e-16);
        x[i] = mu(p);
    }
    return x;
}

//! Kolmogorov–Smirnov statistic of samples against a reference CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        d = std::max(d, std::fabs(F - static_cast<double>(i + 1) / n));
        d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
    }
    return d;
}

//! Asymptotic KS critical value; alpha = 0.01 gives c ≈ 1.6276.
inline double ks_critical(double n, double alpha = 0.01) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n);
}

}  // namespace gdist
