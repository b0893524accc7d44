#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gdist/drivers.hpp"
#include "gdist/errors.hpp"
#include "gdist/pairwise.hpp"
#include "gdist/paths.hpp"

namespace gdist {

struct LsmcOptions {
    int basis_degree = 4;
    double ridge_rel = 1e-8;     //!< ridge = ridge_rel · n_paths on unit-scale columns
    double condition_cap = 1e12;
    //! Grid index from which the terminal samples are already measurable.
    //! Default (-1 → n_steps) means terminal-only, the plain Markovian basis;
    //! anything earlier appends the standardized terminal sample as a
    //! regression column from that index on (adapted, no lookahead).
    int measurable_from = -1;
    bool retain_nodes = false;
    //! Optional known terminal-step Z (per path, per coordinate); used at the
    //! last step in place of the regression estimate.
    std::function<double(long, int)> terminal_z;
};

struct LsmcDiagnostics {
    double max_condition = 0.0;
    int steps = 0;
    int basis_degree = 0;
    int basis_size = 0;
};

struct BsdeSolution {
    double y0 = 0.0;
    //! Standard error of the per-path telescoped estimator ξ_i = X_i − Σ_k g_k Δt,
    //! which carries the same sampling noise as the backward value. The fitted
    //! Z'ΔB martingale part is excluded: its in-sample fit correlates with the
    //! increments and would bias a cross-path average.
    double std_err = 0.0;
    double y0_martingale = 0.0;  //!< mean(ξ), a telescoped cross-check of y0
    LsmcDiagnostics diagnostics;
    Eigen::MatrixXd y_nodes;  //!< (n_paths × n_steps+1) when retained
    Eigen::MatrixXd z_nodes;  //!< (n_paths × n_steps·dim) when retained
};

namespace detail {

//! Multi-indices of total degree <= deg over `dim` variables.
inline std::vector<std::vector<int>> total_degree_indices(int dim, int deg) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dim, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == dim) {
            out.push_back(cur);
            return;
        }
        for (int i = 0; i <= left; ++i) {
            cur[pos] = i;
            rec(pos + 1, left - i);
        }
        cur[pos] = 0;
    };
    rec(0, deg);
    return out;
}

//! Normalized probabilists' Hermite values He_k(x)/sqrt(k!) for k = 0..deg.
inline void hermite_row(double x, int deg, double* out) {
    double h0 = 1.0, h1 = x;
    out[0] = 1.0;
    if (deg >= 1) out[1] = x;
    double fact = 1.0;
    for (int k = 2; k <= deg; ++k) {
        const double h2 = x * h1 - (k - 1) * h0;
        h0 = h1;
        h1 = h2;
        fact *= k;
        out[k] = h2 / std::sqrt(fact);
    }
}

}  // namespace detail

//! Least-squares Monte-Carlo backward solver for dY = g(t,Y,Z)dt + Z'dB,
//! Y_T = X. Per step: Y-predictor by cross-sectional polynomial regression on
//! the path state, Z from the regression of the ΔB-weighted residual, one
//! Picard correction in y, explicit Euler in t. Deterministic for a fixed
//! seed regardless of worker count.
inline BsdeSolution solve_lsmc(const Driver& driver,
                               const std::vector<double>& terminal_samples,
                               const PathEnsemble& paths, const LsmcOptions& opts = {}) {
    const long n = paths.n_paths();
    const int steps = paths.n_steps();
    const int dim = paths.dim();
    if (static_cast<long>(terminal_samples.size()) != n)
        throw InvalidArgument("solve_lsmc: terminal sample count != path count");
    if (driver_dim(driver) != dim)
        throw DimensionMismatch("solve_lsmc: driver dimension != path dimension");
    if (opts.basis_degree < 1)
        throw InvalidArgument("solve_lsmc: basis_degree must be >= 1");
    const int measurable_from =
        opts.measurable_from < 0 ? steps : opts.measurable_from;

    const double dt = paths.dt();
    const auto indices = detail::total_degree_indices(dim, opts.basis_degree);
    const int m_poly = static_cast<int>(indices.size());

    // standardized terminal column (skipped for constant X)
    const double x_mean = pairwise_mean(terminal_samples);
    double x_sd = std::sqrt(pairwise_variance(terminal_samples));
    const bool x_col_possible = x_sd > 1e-14 * (1.0 + std::fabs(x_mean));
    if (!x_col_possible) x_sd = 1.0;

    BsdeSolution sol;
    sol.diagnostics.steps = steps;
    sol.diagnostics.basis_degree = opts.basis_degree;
    sol.diagnostics.basis_size = m_poly;
    if (opts.retain_nodes) {
        sol.y_nodes.resize(n, steps + 1);
        sol.z_nodes.resize(n, static_cast<long>(steps) * dim);
    }

    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(terminal_samples.data(), n);
    if (opts.retain_nodes) sol.y_nodes.col(steps) = y;

    // per-path accumulators for the martingale-increment representation
    std::vector<double> mart(static_cast<std::size_t>(n), 0.0);

    Eigen::MatrixXd A;            // basis matrix, rebuilt each step
    Eigen::MatrixXd z_fit(n, dim);
    const double ridge = opts.ridge_rel * static_cast<double>(n);

    for (int k = steps - 1; k >= 1; --k) {
        const double tk = paths.grid().t(k);
        const bool with_x = x_col_possible && k >= measurable_from;
        const int m = m_poly + (with_x ? 1 : 0);
        A.resize(n, m);
        const double inv_sqrt_t = 1.0 / std::sqrt(tk);
        const int deg = opts.basis_degree;
        parallel_for_blocks(static_cast<std::size_t>(n), [&](std::size_t a, std::size_t b) {
            std::vector<double> h((deg + 1) * dim);
            for (std::size_t p = a; p < b; ++p) {
                for (int d = 0; d < dim; ++d)
                    detail::hermite_row(
                        paths.level(static_cast<long>(p), k, d) * inv_sqrt_t, deg,
                        h.data() + d * (deg + 1));
                for (int c = 0; c < m_poly; ++c) {
                    double v = 1.0;
                    for (int d = 0; d < dim; ++d) v *= h[d * (deg + 1) + indices[c][d]];
                    A(static_cast<long>(p), c) = v;
                }
                if (with_x)
                    A(static_cast<long>(p), m_poly) =
                        (terminal_samples[p] - x_mean) / x_sd;
            }
        });

        Eigen::MatrixXd gram = A.transpose() * A;
        // intercept stays unpenalized so projections preserve cross-path means
        gram.diagonal().tail(m - 1).array() += ridge;
        {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
            const double lmin = es.eigenvalues().minCoeff();
            const double lmax = es.eigenvalues().maxCoeff();
            const double cond = lmax / std::max(lmin, 1e-300);
            sol.diagnostics.max_condition = std::max(sol.diagnostics.max_condition, cond);
            if (!(lmin > 0.0) || cond > opts.condition_cap)
                throw RegressionSingular("solve_lsmc: Gram condition " +
                                         std::to_string(cond) + " above cap at step " +
                                         std::to_string(k));
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);

        const Eigen::VectorXd coef_y = ldlt.solve(A.transpose() * y);
        const Eigen::VectorXd y_check = A * coef_y;
        const Eigen::VectorXd resid = y - y_check;

        const bool use_known_z = static_cast<bool>(opts.terminal_z) && k == steps - 1;
        if (use_known_z) {
            parallel_for_blocks(static_cast<std::size_t>(n),
                                [&](std::size_t a, std::size_t b) {
                                    for (std::size_t p = a; p < b; ++p)
                                        for (int d = 0; d < dim; ++d)
                                            z_fit(static_cast<long>(p), d) =
                                                opts.terminal_z(static_cast<long>(p), d);
                                });
        } else {
            // Z_k via E[(Y_{k+1} − E[Y_{k+1}|state]) ΔB_k | state]/Δt — the
            // centered form keeps the regression targets O(1) instead of O(1/Δt).
            Eigen::MatrixXd targets(n, dim);
            parallel_for_blocks(static_cast<std::size_t>(n),
                                [&](std::size_t a, std::size_t b) {
                                    for (std::size_t p = a; p < b; ++p)
                                        for (int d = 0; d < dim; ++d)
                                            targets(static_cast<long>(p), d) =
                                                resid(static_cast<long>(p)) *
                                                paths.increment(static_cast<long>(p), k, d) /
                                                dt;
                                });
            const Eigen::MatrixXd coef_z = ldlt.solve(A.transpose() * targets);
            z_fit = A * coef_z;
        }

        // explicit Euler with one Picard correction in y
        Eigen::VectorXd y_next(n);
        parallel_for_blocks(static_cast<std::size_t>(n), [&](std::size_t a, std::size_t b) {
            Eigen::VectorXd z(dim);
            for (std::size_t p = a; p < b; ++p) {
                const long lp = static_cast<long>(p);
                for (int d = 0; d < dim; ++d) z[d] = z_fit(lp, d);
                const double yc = y_check(lp);
                const double g1 = eval_driver(driver, tk, yc, z);
                const double yhat = yc - g1 * dt;
                const double g2 = eval_driver(driver, tk, yhat, z);
                y_next(lp) = yc - g2 * dt;
                mart[p] += g2 * dt;
                if (opts.retain_nodes) {
                    sol.y_nodes(lp, k) = y_next(lp);
                    for (int d = 0; d < dim; ++d)
                        sol.z_nodes(lp, static_cast<long>(k) * dim + d) = z[d];
                }
            }
        });
        y.swap(y_next);
        if (!y.allFinite())
            throw NumericalFailure("solve_lsmc: non-finite values at step " +
                                   std::to_string(k) + " (basis " + std::to_string(m) +
                                   " cols, cond " +
                                   std::to_string(sol.diagnostics.max_condition) + ")");
    }

    // k = 0: B_0 = 0 for every path, so conditioning degenerates to plain means.
    {
        std::vector<double> yv(y.data(), y.data() + n);
        const double y_check0 = pairwise_mean(yv);
        Eigen::VectorXd z0(dim);
        for (int d = 0; d < dim; ++d) {
            std::vector<double> t(static_cast<std::size_t>(n));
            for (long p = 0; p < n; ++p)
                t[static_cast<std::size_t>(p)] =
                    (y(p) - y_check0) * paths.increment(p, 0, d) / dt;
            z0[d] = pairwise_mean(t);
        }
        if (opts.terminal_z && steps == 1)
            for (int d = 0; d < dim; ++d) z0[d] = opts.terminal_z(0, d);
        const double g1 = eval_driver(driver, 0.0, y_check0, z0);
        const double yhat = y_check0 - g1 * dt;
        const double g2 = eval_driver(driver, 0.0, yhat, z0);
        sol.y0 = y_check0 - g2 * dt;
        for (long p = 0; p < n; ++p) {
            mart[static_cast<std::size_t>(p)] += g2 * dt;
            if (opts.retain_nodes) {
                sol.y_nodes(p, 0) = sol.y0;
                for (int d = 0; d < dim; ++d) sol.z_nodes(p, d) = z0[d];
            }
        }
    }

    std::vector<double> xi(static_cast<std::size_t>(n));
    for (long p = 0; p < n; ++p)
        xi[static_cast<std::size_t>(p)] =
            terminal_samples[static_cast<std::size_t>(p)] - mart[static_cast<std::size_t>(p)];
    sol.y0_martingale = pairwise_mean(xi);
    sol.std_err = standard_error(xi);
    if (!std::isfinite(sol.y0))
        throw NumericalFailure("solve_lsmc: non-finite y0");
    return sol;
}

struct LinearClosedForm {
    double value = 0.0;
    double std_err = 0.0;
};

//! Y_0 = E[ρ_T X] − ∫_0^T E[δ_s ρ_s] ds for the linear driver, with the
//! expectation estimated from matched (X, ρ_T) samples.
inline LinearClosedForm solve_linear_closed_form(const LinearDriver& driver,
                                                 const std::vector<double>& terminal_samples,
                                                 const std::vector<double>& density_samples) {
    if (terminal_samples.size() != density_samples.size())
        throw InvalidArgument("solve_linear_closed_form: sample length mismatch");
    std::vector<double> prod(terminal_samples.size());
    for (std::size_t i = 0; i < prod.size(); ++i)
        prod[i] = terminal_samples[i] * density_samples[i];
    LinearClosedForm out;
    out.value = pairwise_mean(prod) - driver.delta_term();
    out.std_err = standard_error(prod);
    return out;
}

struct ComparisonReport {
    double y0_1 = 0.0, se_1 = 0.0;
    double y0_2 = 0.0, se_2 = 0.0;
    double combined_se = 0.0;
    bool ordered = false;  //!< y0_1 >= y0_2 − 3·combined_se
};

//! Probe of the comparison principle: X₁ ≥ X₂ samplewise and g₁ ≤ g₂ on
//! sampled (t,y,z) points imply Y₀¹ ≥ Y₀² up to Monte-Carlo error.
inline ComparisonReport comparison_probe(const Driver& d1, const Driver& d2,
                                         const std::vector<double>& x1,
                                         const std::vector<double>& x2,
                                         const PathEnsemble& paths,
                                         const LsmcOptions& opts = {}) {
    if (x1.size() != x2.size())
        throw InvalidArgument("comparison_probe: sample length mismatch");
    for (std::size_t i = 0; i < x1.size(); ++i)
        if (!(x1[i] >= x2[i]))
            throw PreconditionViolated("comparison_probe: X1 < X2 at sample " +
                                       std::to_string(i));
    const int dim = driver_dim(d1);
    if (driver_dim(d2) != dim)
        throw DimensionMismatch("comparison_probe: driver dimensions differ");
    double ylo = *std::min_element(x1.begin(), x1.end());
    double yhi = *std::max_element(x1.begin(), x1.end());
    ylo = std::min(ylo, *std::min_element(x2.begin(), x2.end()));
    yhi = std::max(yhi, *std::max_element(x2.begin(), x2.end()));
    const double yspan = std::max(1.0, yhi - ylo);
    CounterRng rng{0xC0FFEEu};
    Eigen::VectorXd z(dim);
    for (int i = 0; i < 256; ++i) {
        const double t = paths.horizon() * rng.uniform(i, 0, 0);
        const double yv = ylo - 0.5 * yspan + 2.0 * yspan * rng.uniform(i, 1, 0);
        for (int d = 0; d < dim; ++d) z[d] = 3.0 * rng.normal(i, 2, d);
        const double g1 = eval_driver(d1, t, yv, z);
        const double g2 = eval_driver(d2, t, yv, z);
        if (!(g1 <= g2 + 1e-12 * (1.0 + std::fabs(g2))))
            throw PreconditionViolated("comparison_probe: driver dominance fails at probe " +
                                       std::to_string(i));
    }
    const BsdeSolution s1 = solve_lsmc(d1, x1, paths, opts);
    const BsdeSolution s2 = solve_lsmc(d2, x2, paths, opts);
    ComparisonReport rep;
    rep.y0_1 = s1.y0;
    rep.se_1 = s1.std_err;
    rep.y0_2 = s2.y0;
    rep.se_2 = s2.std_err;
    rep.combined_se = std::sqrt(s1.std_err * s1.std_err + s2.std_err * s2.std_err);
    rep.ordered = rep.y0_1 >= rep.y0_2 - 3.0 * rep.combined_se;
    return rep;
}

}  // namespace gdist
