#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gdist/bsde.hpp"
#include "gdist/distkit.hpp"
#include "gdist/drivers.hpp"

namespace gdist {

enum class Attainment { Attained, Approached, BoundOnly };

//! Descriptor of a cost-efficient terminal payoff.
//!
//! AnticoComposition is the closed form X* = μ^{-1}(1 − F_η(η)) against a
//! reference density η; SupportedZ records the sublinear attainment case,
//! where an efficient X* = a + ∫ g dt + ∫ Z'dB exists for any Z supported on
//! the costless set (no pointwise evaluator).
struct EfficientPayoff {
    enum class Kind { AnticoComposition, SupportedZ };
    Kind kind = Kind::AnticoComposition;
    DistributionLaw mu = DistributionLaw::dirac(0.0);
    DistributionLaw eta = DistributionLaw::dirac(1.0);  //!< reference density law
    DensityKind density = DensityKind::Standard;
    double costless_measure = 0.0;  //!< SupportedZ: time measure of the costless set

    //! Samplewise payoff for the composition kind.
    double operator()(double eta_value) const {
        if (kind != Kind::AnticoComposition)
            throw InvalidArgument("EfficientPayoff: no pointwise form for this kind");
        const double p = std::clamp(1.0 - eta.cdf(eta_value), 1e-16, 1.0 - 1e-16);
        return mu.quantile(p);
    }
    std::vector<double> apply(const std::vector<double>& eta_samples) const {
        std::vector<double> out(eta_samples.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*this)(eta_samples[i]);
        return out;
    }
};

struct EfficiencyResult {
    double value = 0.0;
    Attainment attained = Attainment::BoundOnly;
    std::optional<EfficientPayoff> efficient_payoff;
    std::string certificate;
    double grid_lo = 0.0, grid_hi = 0.0;  //!< x-range scanned by condition checks
};

//! ρ_T law carried by linear driver data: lognormal with
//! log_mean = −∫(r+½‖θ‖²), log_var = ∫‖θ‖² (piecewise-constant, exact sums).
inline std::pair<double, double> linear_density_log_params(const LinearDriver& d) {
    const double dt = d.grid.dt();
    double lm = 0.0, lv = 0.0;
    for (int k = 0; k < d.grid.steps; ++k) {
        const double n2 = d.theta[k].squaredNorm();
        lm -= (d.r[k] + 0.5 * n2) * dt;
        lv += n2 * dt;
    }
    return {lm, lv};
}

//! E_g[μ] for the linear driver: the Hardy–Littlewood integral against the
//! ρ_T law minus the δ funding term; attained at X* = μ^{-1}(1−F_{ρ_T}(ρ_T)).
inline EfficiencyResult g_expectation_linear(const LinearDriver& driver,
                                             const DistributionLaw& mu) {
    const auto [lm, lv] = linear_density_log_params(driver);
    EfficiencyResult res;
    if (lv <= 0.0) {
        // deterministic density: only a point mass keeps the problem coupled
        if (mu.kind() != DistributionLaw::Kind::Dirac)
            throw AtomDetected(
                "g_expectation_linear: rho_T is deterministic (log_var = 0) and mu is "
                "not a point mass");
        const double rho = std::exp(lm);
        res.value = mu.param_a() * rho - driver.delta_term();
        res.attained = Attainment::Attained;
        res.efficient_payoff = EfficientPayoff{EfficientPayoff::Kind::AnticoComposition,
                                               mu, DistributionLaw::dirac(rho),
                                               DensityKind::Standard, 0.0};
        res.certificate = "linear closed form (deterministic density)";
        return res;
    }
    const auto eta = DistributionLaw::lognormal(lm, std::sqrt(lv));
    res.value = hl_integral(mu, eta) - driver.delta_term();
    res.attained = Attainment::Attained;
    res.efficient_payoff = EfficientPayoff{EfficientPayoff::Kind::AnticoComposition, mu,
                                           eta, DensityKind::Standard, 0.0};
    res.certificate = "linear closed form (anti-comonotonic coupling)";
    return res;
}

struct TwoRateBounds {
    double lower_std = 0.0;  //!< E[ρ_T X̃], the deposit-rate coupling value
    double lower_mod = 0.0;  //!< E[ρ̄_T X̄], the loan-rate coupling value
    double max() const { return lower_std > lower_mod ? lower_std : lower_mod; }
};

//! Certified lower bounds: E_g[μ] ≥ max{E[ρ_T X̃], E[ρ̄_T X̄]} for the two-rate
//! driver, each side a Hardy–Littlewood value under its own density law.
inline TwoRateBounds two_rate_bounds(const MarketParams& market,
                                     const DistributionLaw& mu) {
    TwoRateBounds b;
    b.lower_std = hl_integral(mu, density_law(market, DensityKind::Standard).law());
    b.lower_mod = hl_integral(mu, density_law(market, DensityKind::Modified).law());
    return b;
}

namespace detail {

struct SufficientCheck {
    bool holds = false;
    double grid_lo = 0.0, grid_hi = 0.0;
};

//! Scan f(x) = μ^{-1}(1−F_η(x)) against the inequality
//!   lower: f(x) ≥ −c·x·f_x(x);  upper: f(x) ≤ −c·x·f_x(x)
//! on a 4096-point grid over [F_η^{-1}(1e-6), F_η^{-1}(1−1e-6)], log-spaced
//! for the (positive, lognormal) density support, with centered differences.
inline SufficientCheck scan_condition(const DistributionLaw& mu,
                                      const DistributionLaw& eta, double c, bool lower,
                                      int grid_n = 4096) {
    SufficientCheck out;
    out.grid_lo = eta.quantile(1e-6);
    out.grid_hi = eta.quantile(1.0 - 1e-6);
    if (mu.kind() == DistributionLaw::Kind::Dirac) {
        // f is constant: the inequality reduces to a sign test on the level
        out.holds = lower ? mu.param_a() >= 0.0 : mu.param_a() <= 0.0;
        return out;
    }
    const double llo = std::log(out.grid_lo), lhi = std::log(out.grid_hi);
    auto f = [&](double x) {
        const double p = std::clamp(1.0 - eta.cdf(x), 1e-15, 1.0 - 1e-15);
        return mu.quantile(p);
    };
    const double lstep = (lhi - llo) / (grid_n - 1);
    out.holds = true;
    for (int i = 0; i < grid_n; ++i) {
        const double x = std::exp(llo + i * lstep);
        const double hx = x * (std::exp(lstep) - 1.0);  // local grid spacing
        const double fx = (f(x + hx) - f(x - hx)) / (2.0 * hx);
        const double lhs = f(x);
        const double rhs = -c * x * fx;
        const double slack = 1e-9 * (1.0 + std::fabs(lhs) + std::fabs(rhs));
        if (lower ? !(lhs >= rhs - slack) : !(lhs <= rhs + slack)) {
            out.holds = false;
            return out;
        }
    }
    return out;
}

}  // namespace detail

//! Sufficient condition for attainment at the deposit-rate coupling:
//! with c = sup_t 1'(σ_t')^{-1}θ_t and f(x) = μ^{-1}(1−F_{ρ_T}(x)),
//! f ≥ −c·x·f_x on the support gives E_g[μ] = ∫F_{ρ_T}^{-1}(1−p)μ^{-1}(p)dp.
inline std::optional<EfficiencyResult> two_rate_sufficient_lower(
    const MarketParams& market, const DistributionLaw& mu) {
    double c = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < market.grid.steps; ++k)
        c = std::max(c, market.one_sigmaT_theta(k));
    const auto eta = density_law(market, DensityKind::Standard).law();
    if (eta.kind() == DistributionLaw::Kind::Dirac &&
        mu.kind() != DistributionLaw::Kind::Dirac)
        return std::nullopt;  // degenerate density certifies only point masses
    const auto chk = detail::scan_condition(mu, eta, c, /*lower=*/true);
    if (!chk.holds) return std::nullopt;
    EfficiencyResult res;
    res.value = hl_integral(mu, eta);
    res.attained = Attainment::Attained;
    res.efficient_payoff = EfficientPayoff{EfficientPayoff::Kind::AnticoComposition, mu,
                                           eta, DensityKind::Standard, 0.0};
    res.certificate = "two-rate sufficient condition (deposit coupling), c=" +
                      std::to_string(c);
    res.grid_lo = chk.grid_lo;
    res.grid_hi = chk.grid_hi;
    return res;
}

//! Mirror condition at the loan-rate coupling: c = inf_t 1'(σ_t')^{-1}(θ_t −
//! (R_t−r_t)σ_t^{-1}1), f built from ρ̄_T, and the reversed inequality.
inline std::optional<EfficiencyResult> two_rate_sufficient_upper(
    const MarketParams& market, const DistributionLaw& mu) {
    double c = std::numeric_limits<double>::infinity();
    for (int k = 0; k < market.grid.steps; ++k)
        c = std::min(c, market.one_sigmaT_theta_mod(k));
    const auto eta = density_law(market, DensityKind::Modified).law();
    if (eta.kind() == DistributionLaw::Kind::Dirac &&
        mu.kind() != DistributionLaw::Kind::Dirac)
        return std::nullopt;
    const auto chk = detail::scan_condition(mu, eta, c, /*lower=*/false);
    if (!chk.holds) return std::nullopt;
    EfficiencyResult res;
    res.value = hl_integral(mu, eta);
    res.attained = Attainment::Attained;
    res.efficient_payoff = EfficientPayoff{EfficientPayoff::Kind::AnticoComposition, mu,
                                           eta, DensityKind::Modified, 0.0};
    res.certificate = "two-rate sufficient condition (loan coupling), c=" +
                      std::to_string(c);
    res.grid_lo = chk.grid_lo;
    res.grid_hi = chk.grid_hi;
    return res;
}

//! E_g[μ] = E[μ] for every sublinear driver; the infimum is attained exactly
//! when the costless set {t: some A or C component vanishes} has positive
//! time measure, and is only approached otherwise (the X^α family).
inline EfficiencyResult g_expectation_sublinear(const SublinearDriver& driver,
                                                const DistributionLaw& mu) {
    EfficiencyResult res;
    res.value = mu.mean();
    const double s = driver.costless_measure();
    if (s > 0.0 || mu.kind() == DistributionLaw::Kind::Dirac) {
        res.attained = Attainment::Attained;
        res.efficient_payoff =
            EfficientPayoff{EfficientPayoff::Kind::SupportedZ, mu,
                            DistributionLaw::dirac(1.0), DensityKind::Standard, s};
        res.certificate = s > 0.0
                              ? "sublinear value E[mu]; costless set has measure " +
                                    std::to_string(s)
                              : "sublinear value E[mu]; point mass is replicated freely";
    } else {
        res.attained = Attainment::Approached;
        res.certificate =
            "sublinear value E[mu]; A,C componentwise positive so the infimum is "
            "approached (not attained)";
    }
    return res;
}

struct MinimizingSequenceCost {
    double value = 0.0;
    double std_err = 0.0;
    double alpha_used = 0.0;  //!< snapped to the path grid
    int node = 0;
};

//! E_g[X^α] for the minimizing family X^α = μ^{-1}(Φ(B_α/√α)), estimated with
//! the backward solver; α is snapped to the nearest grid node.
inline MinimizingSequenceCost minimizing_sequence_cost(const Driver& driver,
                                                       const DistributionLaw& mu,
                                                       double alpha,
                                                       const PathEnsemble& paths,
                                                       LsmcOptions opts = {}) {
    if (!(alpha > 0.0 && alpha <= paths.horizon() + 1e-12))
        throw InvalidArgument("minimizing_sequence_cost: alpha must lie in (0, T]");
    const double dt = paths.dt();
    int node = static_cast<int>(std::lround(alpha / dt));
    node = std::max(1, std::min(paths.n_steps(), node));
    const double a = node * dt;
    std::vector<double> x(static_cast<std::size_t>(paths.n_paths()));
    const double inv_sqrt_a = 1.0 / std::sqrt(a);
    for (long p = 0; p < paths.n_paths(); ++p) {
        const double u = std_normal_cdf(paths.level(p, node, 0) * inv_sqrt_a);
        x[static_cast<std::size_t>(p)] =
            mu.quantile(std::clamp(u, 1e-15, 1.0 - 1e-15));
    }
    opts.measurable_from = node;
    const BsdeSolution sol = solve_lsmc(driver, x, paths, opts);
    return {sol.y0, sol.std_err, a, node};
}

}  // namespace gdist
