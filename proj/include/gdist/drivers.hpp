#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "gdist/distkit.hpp"
#include "gdist/errors.hpp"
#include "gdist/paths.hpp"

namespace gdist {

//! Deterministic-coefficient market on a uniform grid. Coefficients are
//! piecewise-constant per grid interval; θ_t = σ_t^{-1}(b_t − r_t·1) is always
//! derived, never stored independently.
struct MarketParams {
    int n = 1;
    TimeGrid grid;
    std::vector<double> r;                     //!< deposit rate per interval
    std::vector<double> R;                     //!< loan rate per interval
    std::vector<Eigen::MatrixXd> sigma;        //!< volatility per interval
    std::vector<Eigen::VectorXd> b;            //!< drift per interval
    std::vector<Eigen::VectorXd> theta;        //!< derived risk premium
    std::vector<Eigen::VectorXd> sigma_inv_one;  //!< σ^{-1}·1 per interval

    static MarketParams make(int n, TimeGrid grid, std::vector<double> r,
                             std::vector<double> R, std::vector<Eigen::MatrixXd> sigma,
                             std::vector<Eigen::VectorXd> b,
                             double condition_cap = 1e8) {
        MarketParams m;
        m.n = n;
        m.grid = grid;
        m.r = std::move(r);
        m.R = std::move(R);
        m.sigma = std::move(sigma);
        m.b = std::move(b);
        const std::size_t s = static_cast<std::size_t>(grid.steps);
        if (m.r.size() != s || m.R.size() != s || m.sigma.size() != s || m.b.size() != s)
            throw InvalidArgument("MarketParams: coefficient arrays must have one entry per interval");
        m.theta.resize(s);
        m.sigma_inv_one.resize(s);
        for (std::size_t k = 0; k < s; ++k) {
            if (!(m.R[k] >= m.r[k]))
                throw InvalidArgument("MarketParams: loan rate must dominate deposit rate");
            if (!std::isfinite(m.r[k]) || !std::isfinite(m.R[k]))
                throw InvalidArgument("MarketParams: rates must be finite");
            if (m.sigma[k].rows() != n || m.sigma[k].cols() != n || m.b[k].size() != n)
                throw DimensionMismatch("MarketParams: sigma/b dimensions must match n");
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.sigma[k]);
            const double smin = svd.singularValues().minCoeff();
            const double smax = svd.singularValues().maxCoeff();
            if (!(smin > 0.0) || smax / smin > condition_cap)
                throw InvalidArgument("MarketParams: sigma not invertible within condition cap");
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.sigma[k]);
            m.theta[k] = lu.solve(m.b[k] - m.r[k] * Eigen::VectorXd::Ones(n));
            m.sigma_inv_one[k] = lu.solve(Eigen::VectorXd::Ones(n));
        }
        return m;
    }

    //! One-dimensional market with constant coefficients.
    static MarketParams scalar(double T, int steps, double r_, double R_, double sigma_,
                               double b_) {
        const std::size_t s = static_cast<std::size_t>(steps);
        Eigen::MatrixXd sm(1, 1);
        sm(0, 0) = sigma_;
        Eigen::VectorXd bv(1);
        bv(0) = b_;
        return make(1, {T, steps}, std::vector<double>(s, r_), std::vector<double>(s, R_),
                    std::vector<Eigen::MatrixXd>(s, sm),
                    std::vector<Eigen::VectorXd>(s, bv));
    }

    //! 1'(σ_t')^{-1}θ_t on interval k (the constant of Theorem-style bounds).
    double one_sigmaT_theta(int k) const { return sigma_inv_one[k].dot(theta[k]); }
    //! Same contraction for the modified premium θ_t − (R_t−r_t)σ_t^{-1}1.
    double one_sigmaT_theta_mod(int k) const {
        return sigma_inv_one[k].dot(theta_mod(k));
    }
    Eigen::VectorXd theta_mod(int k) const {
        return theta[k] - (R[k] - r[k]) * sigma_inv_one[k];
    }

    //! ∫_0^{t_k} r ds, exact for piecewise-constant rates.
    double cum_r(int k) const {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += r[j] * grid.dt();
        return acc;
    }
    double int_r() const { return cum_r(grid.steps); }
    double int_R() const {
        double acc = 0.0;
        for (int j = 0; j < grid.steps; ++j) acc += R[j] * grid.dt();
        return acc;
    }
};

//! Scalar field on [0,T]×R: an analytic callable or a bilinear tabulation.
class ScalarField2D {
  public:
    static ScalarField2D analytic(std::function<double(double, double)> fn) {
        ScalarField2D f;
        f.fn_ = std::move(fn);
        return f;
    }
    static ScalarField2D constant(double c) {
        return analytic([c](double, double) { return c; });
    }
    static ScalarField2D tabulated(std::vector<double> t_grid, std::vector<double> y_grid,
                                   std::vector<std::vector<double>> values) {
        ScalarField2D f;
        if (t_grid.size() < 2 || y_grid.size() < 2 ||
            values.size() != t_grid.size())
            throw InvalidArgument("ScalarField2D: bad tabulation shape");
        for (const auto& row : values)
            if (row.size() != y_grid.size())
                throw InvalidArgument("ScalarField2D: ragged tabulation");
        f.t_ = std::move(t_grid);
        f.y_ = std::move(y_grid);
        f.v_ = std::move(values);
        return f;
    }

    bool is_tabulated() const { return !v_.empty(); }

    double operator()(double t, double y) const {
        if (!is_tabulated()) return fn_(t, y);
        const auto [it, wt] = locate(t_, t);
        const auto [iy, wy] = locate(y_, y);
        const double a = v_[it][iy] * (1 - wy) + v_[it][iy + 1] * wy;
        const double b = v_[it + 1][iy] * (1 - wy) + v_[it + 1][iy + 1] * wy;
        return a * (1 - wt) + b * wt;
    }

  private:
    static std::pair<std::size_t, double> locate(const std::vector<double>& g, double x) {
        std::size_t i = std::upper_bound(g.begin(), g.end(), x) - g.begin();
        if (i == 0) i = 1;
        if (i >= g.size()) i = g.size() - 1;
        const double w = (x - g[i - 1]) / (g[i] - g[i - 1]);
        return {i - 1, std::clamp(w, 0.0, 1.0)};
    }

    std::function<double(double, double)> fn_;
    std::vector<double> t_, y_;
    std::vector<std::vector<double>> v_;
};

struct ZeroDriver {
    int n = 1;
};

//! g(t,y,z) = r_t y + θ_t'z + δ_t with deterministic per-interval data.
struct LinearDriver {
    int n = 1;
    TimeGrid grid;
    std::vector<double> r;
    std::vector<Eigen::VectorXd> theta;
    std::vector<double> delta;

    static LinearDriver make(TimeGrid grid, std::vector<double> r,
                             std::vector<Eigen::VectorXd> theta,
                             std::vector<double> delta) {
        LinearDriver d;
        d.grid = grid;
        const std::size_t s = static_cast<std::size_t>(grid.steps);
        if (r.size() != s || theta.size() != s || delta.size() != s)
            throw InvalidArgument("LinearDriver: need one coefficient per interval");
        d.n = static_cast<int>(theta.front().size());
        for (const auto& th : theta)
            if (th.size() != d.n) throw DimensionMismatch("LinearDriver: theta dims vary");
        d.r = std::move(r);
        d.theta = std::move(theta);
        d.delta = std::move(delta);
        return d;
    }

    static LinearDriver scalar(double T, int steps, double r_, double theta_,
                               double delta_) {
        Eigen::VectorXd th(1);
        th(0) = theta_;
        const std::size_t s = static_cast<std::size_t>(steps);
        return make({T, steps}, std::vector<double>(s, r_),
                    std::vector<Eigen::VectorXd>(s, th), std::vector<double>(s, delta_));
    }

    //! Linear driver carried by a two-rate market at the deposit rate (δ = 0).
    static LinearDriver from_market(const MarketParams& m, std::vector<double> delta = {}) {
        if (delta.empty()) delta.assign(static_cast<std::size_t>(m.grid.steps), 0.0);
        return make(m.grid, m.r, m.theta, std::move(delta));
    }

    //! ∫_0^T E[δ_s ρ_s] ds = ∫ δ_s e^{−∫_0^s r} ds, exact per interval.
    double delta_term() const {
        const double dt = grid.dt();
        double acc = 0.0, disc = 0.0;  // disc = ∫_0^{t_k} r
        for (int k = 0; k < grid.steps; ++k) {
            const double w = r[k] == 0.0 ? dt : (1.0 - std::exp(-r[k] * dt)) / r[k];
            acc += delta[k] * std::exp(-disc) * w;
            disc += r[k] * dt;
        }
        return acc;
    }
};

//! The two-rate wealth driver r_t y + θ_t'z − (R_t−r_t)(y − 1'(σ_t')^{-1}z)^−.
struct TwoRateDriver {
    MarketParams market;
};

//! g(t,z) = −A_t'z⁺ − C_t'z⁻ with nonnegative per-interval weight vectors.
struct SublinearDriver {
    int n = 1;
    TimeGrid grid;
    std::vector<Eigen::VectorXd> A, C;
    //! Lipschitz constant of z ↦ −A'z⁺ − C'z⁻ in the Euclidean norm: the norm
    //! of the componentwise max of A and C (dominates both ‖A‖ and ‖C‖).
    double lipschitz_K = 0.0;

    static SublinearDriver make(TimeGrid grid, std::vector<Eigen::VectorXd> A,
                                std::vector<Eigen::VectorXd> C) {
        SublinearDriver d;
        d.grid = grid;
        const std::size_t s = static_cast<std::size_t>(grid.steps);
        if (A.size() != s || C.size() != s)
            throw InvalidArgument("SublinearDriver: need one weight vector per interval");
        d.n = static_cast<int>(A.front().size());
        for (std::size_t k = 0; k < s; ++k) {
            if (A[k].size() != d.n || C[k].size() != d.n)
                throw DimensionMismatch("SublinearDriver: weight dims vary");
            if (A[k].minCoeff() < 0.0 || C[k].minCoeff() < 0.0)
                throw InvalidArgument("SublinearDriver: weights must be nonnegative");
            d.lipschitz_K =
                std::max(d.lipschitz_K, A[k].cwiseMax(C[k]).matrix().norm());
        }
        d.A = std::move(A);
        d.C = std::move(C);
        return d;
    }

    static SublinearDriver scalar(double T, int steps, double a, double c) {
        Eigen::VectorXd av(1), cv(1);
        av(0) = a;
        cv(0) = c;
        const std::size_t s = static_cast<std::size_t>(steps);
        return make({T, steps}, std::vector<Eigen::VectorXd>(s, av),
                    std::vector<Eigen::VectorXd>(s, cv));
    }

    //! Time measure of {t : some component of A_t is 0} ∪ {t : some component
    //! of C_t is 0} — the set supporting a costless Z direction.
    double costless_measure() const {
        double acc = 0.0;
        for (int k = 0; k < grid.steps; ++k)
            if (A[k].minCoeff() == 0.0 || C[k].minCoeff() == 0.0) acc += grid.dt();
        return acc;
    }
};

//! g(t,y,z) = f(t,y)·‖z‖² + h(t,y); f multiplies ‖z‖² directly.
struct ZSeparableDriver {
    int n = 1;
    double horizon = 1.0;
    ScalarField2D f = ScalarField2D::constant(0.0);
    ScalarField2D h = ScalarField2D::constant(0.0);
    double alpha_bound = 1.0;  //!< declared strict bound: sup|f| < alpha
    double beta_bound = 0.0;   //!< declared bound: sup|h| <= beta

    static ZSeparableDriver make(int n, double horizon, ScalarField2D f, ScalarField2D h,
                                 double alpha_bound, double beta_bound,
                                 double y_range = 20.0, int check_grid = 101) {
        ZSeparableDriver d;
        d.n = n;
        d.horizon = horizon;
        d.f = std::move(f);
        d.h = std::move(h);
        d.alpha_bound = alpha_bound;
        d.beta_bound = beta_bound;
        for (int i = 0; i < check_grid; ++i)
            for (int j = 0; j < check_grid; ++j) {
                const double t = horizon * i / (check_grid - 1);
                const double y = -y_range + 2.0 * y_range * j / (check_grid - 1);
                if (!(std::fabs(d.f(t, y)) < alpha_bound))
                    throw InvalidArgument("ZSeparableDriver: |f| must stay below alpha_bound");
                if (!(std::fabs(d.h(t, y)) <= beta_bound))
                    throw InvalidArgument("ZSeparableDriver: |h| must stay within beta_bound");
            }
        return d;
    }
};

using Driver =
    std::variant<ZeroDriver, LinearDriver, TwoRateDriver, SublinearDriver, ZSeparableDriver>;

inline int driver_dim(const Driver& d) {
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TwoRateDriver>)
                return v.market.n;
            else
                return v.n;
        },
        d);
}

inline double eval_driver(const Driver& d, double t, double y,
                          const Eigen::VectorXd& z) {
    if (z.size() != driver_dim(d))
        throw DimensionMismatch("eval_driver: z dimension does not match the driver");
    struct Visitor {
        double t, y;
        const Eigen::VectorXd& z;

        double operator()(const ZeroDriver&) const { return 0.0; }
        double operator()(const LinearDriver& d) const {
            const int k = d.grid.interval(t);
            return d.r[k] * y + d.theta[k].dot(z) + d.delta[k];
        }
        double operator()(const TwoRateDriver& d) const {
            const int k = d.market.grid.interval(t);
            const MarketParams& m = d.market;
            const double gap = y - m.sigma_inv_one[k].dot(z);
            const double neg = gap < 0.0 ? -gap : 0.0;
            return m.r[k] * y + m.theta[k].dot(z) - (m.R[k] - m.r[k]) * neg;
        }
        double operator()(const SublinearDriver& d) const {
            const int k = d.grid.interval(t);
            double acc = 0.0;
            for (int j = 0; j < d.n; ++j) {
                const double zp = z[j] > 0.0 ? z[j] : 0.0;
                const double zm = z[j] < 0.0 ? -z[j] : 0.0;
                acc -= d.A[k][j] * zp + d.C[k][j] * zm;
            }
            return acc;
        }
        double operator()(const ZSeparableDriver& d) const {
            return d.f(t, y) * z.squaredNorm() + d.h(t, y);
        }
    };
    return std::visit(Visitor{t, y, z}, d);
}

enum class DensityKind { Standard, Modified };

//! Law and sampling data of ρ_T (standard) or ρ̄_T (modified): lognormal under
//! deterministic coefficients, with
//!   log_mean = −∫(rate_s + ½‖θ̃_s‖²) ds,  log_var = ∫‖θ̃_s‖² ds,
//! where (rate, θ̃) = (r, θ) for the standard kind and
//! (R, θ − (R−r)σ^{-1}1) for the modified one.
struct StatePriceDensity {
    DensityKind kind = DensityKind::Standard;
    MarketParams market;
    double log_mean = 0.0;
    double log_var = 0.0;

    double rate(int k) const {
        return kind == DensityKind::Standard ? market.r[k] : market.R[k];
    }
    Eigen::VectorXd premium(int k) const {
        return kind == DensityKind::Standard ? market.theta[k] : market.theta_mod(k);
    }

    DistributionLaw law() const {
        if (log_var > 0.0) return DistributionLaw::lognormal(log_mean, std::sqrt(log_var));
        return DistributionLaw::dirac(std::exp(log_mean));
    }
};

inline StatePriceDensity density_law(const MarketParams& market, DensityKind kind) {
    StatePriceDensity spd;
    spd.kind = kind;
    spd.market = market;
    const double dt = market.grid.dt();
    for (int k = 0; k < market.grid.steps; ++k) {
        const double n2 = spd.premium(k).squaredNorm();
        spd.log_mean -= (spd.rate(k) + 0.5 * n2) * dt;
        spd.log_var += n2 * dt;
    }
    return spd;
}

//! Per-path ρ_T = exp(−∫(rate+½‖θ̃‖²)ds − Σ_k θ̃_k'ΔB_k) with the left-point
//! rule on the grid (exact for piecewise-constant coefficients).
inline std::vector<double> sample_density(const StatePriceDensity& spd,
                                          const PathEnsemble& paths) {
    const MarketParams& m = spd.market;
    if (paths.dim() != m.n)
        throw DimensionMismatch("sample_density: path dimension != market dimension");
    if (paths.n_steps() != m.grid.steps || paths.horizon() != m.grid.horizon)
        throw DimensionMismatch("sample_density: path grid must match the market grid");
    const double dt = m.grid.dt();
    double drift = 0.0;
    std::vector<Eigen::VectorXd> prem(static_cast<std::size_t>(m.grid.steps));
    for (int k = 0; k < m.grid.steps; ++k) {
        prem[k] = spd.premium(k);
        drift -= (spd.rate(k) + 0.5 * prem[k].squaredNorm()) * dt;
    }
    std::vector<double> out(static_cast<std::size_t>(paths.n_paths()));
    parallel_for_blocks(out.size(), [&](std::size_t a, std::size_t b) {
        for (std::size_t p = a; p < b; ++p) {
            double ito = 0.0;
            for (int k = 0; k < m.grid.steps; ++k)
                for (int d = 0; d < m.n; ++d)
                    ito += prem[k][d] * paths.increment(static_cast<long>(p), k, d);
            out[p] = std::exp(drift - ito);
        }
    });
    return out;
}

}  // namespace gdist
