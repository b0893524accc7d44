#include <doctest.h>

#include <cmath>

#include "gdist/drivers.hpp"
#include "gdist/rng.hpp"

using namespace gdist;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v(0) = x;
    return v;
}

Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

}  // namespace

TEST_CASE("eval_driver: zero and sublinear identities") {
    const Driver zero = ZeroDriver{2};
    CHECK(eval_driver(zero, 0.3, 1.7, vec2(0.5, -2.0)) == 0.0);

    // A = C = (K,...,K) collapses to -K * l1-norm of z
    const double K = 0.4;
    const auto sub = SublinearDriver::make(
        {1.0, 4}, std::vector<Eigen::VectorXd>(4, vec2(K, K)),
        std::vector<Eigen::VectorXd>(4, vec2(K, K)));
    const Eigen::VectorXd z = vec2(1.5, -2.25);
    CHECK(eval_driver(Driver{sub}, 0.5, 0.0, z) ==
          doctest::Approx(-K * (std::fabs(z[0]) + std::fabs(z[1]))).epsilon(1e-15));
}

TEST_CASE("eval_driver: two-rate hand value") {
    // r=0.02, R=0.05, sigma=1, theta=0.1 (so b = 0.12), y=1, z=2
    const auto market = MarketParams::scalar(1.0, 4, 0.02, 0.05, 1.0, 0.12);
    CHECK(market.theta[0](0) == doctest::Approx(0.1).epsilon(1e-14));
    const double got = eval_driver(Driver{TwoRateDriver{market}}, 0.1, 1.0, vec1(2.0));

    // independent scalar re-implementation of the same formula
    auto scalar_two_rate = [](double r, double R, double sigma, double theta, double y,
                              double z) {
        const double gap = y - z / sigma;
        return r * y + theta * z - (R - r) * std::max(-gap, 0.0);
    };
    CHECK(got == doctest::Approx(scalar_two_rate(0.02, 0.05, 1.0, 0.1, 1.0, 2.0))
                     .epsilon(1e-15));
    CHECK(got == doctest::Approx(0.19).epsilon(1e-14));
}

TEST_CASE("eval_driver rejects mismatched z dimension") {
    const auto market = MarketParams::scalar(1.0, 2, 0.0, 0.0, 1.0, 0.0);
    CHECK_THROWS_AS(eval_driver(Driver{TwoRateDriver{market}}, 0.0, 0.0, vec2(1, 2)),
                    DimensionMismatch);
}

TEST_CASE("sublinear driver: Lipschitz and growth witnesses") {
    CounterRng rng{12u};
    const auto sub = SublinearDriver::make(
        {1.0, 3},
        {vec2(0.3, 0.0), vec2(0.1, 0.2), vec2(0.25, 0.25)},
        {vec2(0.0, 0.4), vec2(0.2, 0.1), vec2(0.05, 0.3)});
    const double K = sub.lipschitz_K;
    const Driver d{sub};
    for (int i = 0; i < 500; ++i) {
        const Eigen::VectorXd z1 = vec2(4 * rng.normal(i, 0, 0), 4 * rng.normal(i, 0, 1));
        const Eigen::VectorXd z2 = vec2(4 * rng.normal(i, 1, 0), 4 * rng.normal(i, 1, 1));
        const double t = rng.uniform(i, 2, 0);
        const double g1 = eval_driver(d, t, 0.0, z1);
        const double g2 = eval_driver(d, t, 0.0, z2);
        CHECK(std::fabs(g1 - g2) <= K * (z1 - z2).norm() + 1e-14);
        CHECK(std::fabs(g1) <= K * z1.norm() + 1e-14);
        CHECK(g1 <= 0.0);
    }
}

TEST_CASE("sublinear driver: positive homogeneity is exact for dyadic scales") {
    const auto sub = SublinearDriver::make(
        {1.0, 2}, {vec2(0.3, 0.05), vec2(0.12, 0.2)},
        {vec2(0.07, 0.4), vec2(0.0, 0.33)});
    const Driver d{sub};
    CounterRng rng{77u};
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd z = vec2(rng.normal(i, 0, 0), rng.normal(i, 0, 1));
        for (double alpha : {0.0, 0.25, 0.5, 2.0, 8.0, 1024.0}) {
            const double lhs = eval_driver(d, 0.1, 0.0, (alpha * z).eval());
            const double rhs = alpha * eval_driver(d, 0.1, 0.0, z);
            CHECK(lhs == rhs);  // exact: powers of two rescale without rounding
        }
    }
}

TEST_CASE("two-rate collapses to the linear driver when R = r") {
    const auto market = MarketParams::scalar(2.0, 5, 0.03, 0.03, 0.8, 0.1);
    const auto linear = LinearDriver::from_market(market);
    const Driver dtr{TwoRateDriver{market}};
    const Driver dl{linear};
    CounterRng rng{3u};
    for (int i = 0; i < 300; ++i) {
        const double t = 2.0 * rng.uniform(i, 0, 0);
        const double y = 3.0 * rng.normal(i, 1, 0);
        const Eigen::VectorXd z = vec1(2.0 * rng.normal(i, 2, 0));
        CHECK(eval_driver(dtr, t, y, z) == doctest::Approx(eval_driver(dl, t, y, z))
                                               .epsilon(1e-15));
    }
}

TEST_CASE("market validation") {
    CHECK_THROWS_AS(MarketParams::scalar(1.0, 2, 0.05, 0.02, 1.0, 0.1),
                    InvalidArgument);  // R < r
    Eigen::MatrixXd singular(2, 2);
    singular << 1, 1, 1, 1;
    CHECK_THROWS_AS(
        MarketParams::make(2, {1.0, 1}, {0.0}, {0.0},
                           {singular}, {vec2(0.1, 0.1)}),
        InvalidArgument);
}

TEST_CASE("paper's 2x2 example satisfies the EU hypothesis contraction") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 4, 3, 3, 4;
    // pick b so that theta = (1, -2)': b = sigma*theta + r*1
    const Eigen::VectorXd b = sigma * vec2(1.0, -2.0);
    const auto m = MarketParams::make(2, {1.0, 1}, {0.0}, {0.0}, {sigma}, {b});
    CHECK(m.theta[0](0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.theta[0](1) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(m.one_sigmaT_theta(0) == doctest::Approx(-1.0 / 7.0).epsilon(1e-12));
    CHECK(m.one_sigmaT_theta(0) <= 0.0);
}

TEST_CASE("density_law closed forms") {
    // r = 0, theta = 0: the density is identically one
    const auto flat = MarketParams::scalar(1.0, 8, 0.0, 0.0, 1.0, 0.0);
    const auto d0 = density_law(flat, DensityKind::Standard);
    CHECK(d0.log_mean == 0.0);
    CHECK(d0.log_var == 0.0);
    CHECK(d0.law().kind() == DistributionLaw::Kind::Dirac);

    // constant scalar coefficients
    const double r = 0.03, theta = 0.2, T = 2.0;
    const auto m = MarketParams::scalar(T, 16, r, r, 1.0, r + theta);
    const auto d = density_law(m, DensityKind::Standard);
    CHECK(d.log_mean == doctest::Approx(-(r + theta * theta / 2) * T).epsilon(1e-13));
    CHECK(d.log_var == doctest::Approx(theta * theta * T).epsilon(1e-13));

    // modified kind degenerates to the standard one when R = r
    const auto dm = density_law(m, DensityKind::Modified);
    CHECK(dm.log_mean == doctest::Approx(d.log_mean).epsilon(1e-15));
    CHECK(dm.log_var == doctest::Approx(d.log_var).epsilon(1e-15));
}

TEST_CASE("sample_density: deterministic when theta = 0") {
    const auto m = MarketParams::scalar(1.5, 6, 0.04, 0.04, 1.0, 0.04);
    const auto spd = density_law(m, DensityKind::Standard);
    const auto paths = simulate_paths(64, 6, 1, 1.5, 9001u);
    for (double s : sample_density(spd, paths))
        CHECK(s == doctest::Approx(std::exp(-0.04 * 1.5)).epsilon(1e-14));
}

TEST_CASE("sample_density matches its lognormal law (KS) and moments") {
    const auto m = MarketParams::scalar(1.0, 200, 0.02, 0.05, 1.0, 0.02 + 0.25);
    const auto spd = density_law(m, DensityKind::Standard);
    const long n = 100'000;
    const auto paths = simulate_paths(n, 200, 1, 1.0, 13u);
    const auto s = sample_density(spd, paths);
    for (double v : s) CHECK(v > 0.0);

    const double sd = std::sqrt(spd.log_var);
    const double d = ks_statistic(
        s, [&](double x) { return std_normal_cdf((std::log(x) - spd.log_mean) / sd); });
    CHECK(d < ks_critical(static_cast<double>(n)));

    // E[rho_T] = e^{-int r} and E[rho_T^2] = e^{2 log_mean + 2 log_var}
    std::vector<double> sq(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) sq[i] = s[i] * s[i];
    const double mean = pairwise_mean(s), se = standard_error(s);
    const double mean2 = pairwise_mean(sq), se2 = standard_error(sq);
    CHECK(std::fabs(mean - std::exp(-m.int_r())) <= 4 * se);
    CHECK(std::fabs(mean2 - std::exp(2 * spd.log_mean + 2 * spd.log_var)) <= 4 * se2);
}

TEST_CASE("sample_density: antithetic pair cancels the odd term") {
    const auto m = MarketParams::scalar(1.0, 50, 0.01, 0.03, 1.0, 0.15);
    const auto spd = density_law(m, DensityKind::Standard);
    const auto paths = simulate_paths(500, 50, 1, 1.0, 321u);
    const auto anti = paths.antithetic();
    const auto s1 = sample_density(spd, paths);
    const auto s2 = sample_density(spd, anti);
    double drift = 0.0;
    for (int k = 0; k < 50; ++k)
        drift -= (m.r[k] + 0.5 * m.theta[k].squaredNorm()) * m.grid.dt();
    for (std::size_t i = 0; i < s1.size(); ++i)
        CHECK(std::log(s1[i]) + std::log(s2[i]) ==
              doctest::Approx(2.0 * drift).epsilon(1e-12));
}

TEST_CASE("path ensemble structure and determinism") {
    const auto single = simulate_paths(1, 1, 1, 1.0, 5u);
    CHECK(single.level(0, 0, 0) == 0.0);
    CHECK(single.level(0, 1, 0) == single.increment(0, 0, 0));

    const auto a = simulate_paths(2000, 13, 2, 1.0, 42u);
    const auto b = simulate_paths(2000, 13, 2, 1.0, 42u);
    for (long p = 0; p < 2000; p += 97)
        for (int k = 0; k <= 13; ++k)
            for (int d = 0; d < 2; ++d) CHECK(a.level(p, k, d) == b.level(p, k, d));

    // levels are cumulative sums of increments
    for (long p = 0; p < 50; ++p) {
        double acc = 0.0;
        for (int k = 0; k < 13; ++k) {
            acc += a.increment(p, k, 0);
            CHECK(a.level(p, k + 1, 0) == doctest::Approx(acc).epsilon(1e-15));
        }
    }
}

TEST_CASE("path ensemble is identical across thread counts") {
    thread_count() = 1;
    const auto a = simulate_paths(5000, 20, 2, 1.0, 77u);
    thread_count() = 8;
    const auto b = simulate_paths(5000, 20, 2, 1.0, 77u);
    thread_count() = 1;
    for (long p = 0; p < 5000; p += 13)
        for (int k = 0; k <= 20; ++k)
            for (int d = 0; d < 2; ++d) CHECK(a.level(p, k, d) == b.level(p, k, d));
}

TEST_CASE("path ensemble sampling statistics") {
    const long n = 100'000;
    const int steps = 100;
    const auto paths = simulate_paths(n, steps, 2, 1.0, 1234u);
    const double dt = 1.0 / steps;
    for (int k = 0; k < steps; k += 17) {
        for (int d = 0; d < 2; ++d) {
            std::vector<double> inc(n);
            for (long p = 0; p < n; ++p) inc[p] = paths.increment(p, k, d);
            const double mean = pairwise_mean(inc);
            const double var = pairwise_variance(inc);
            CHECK(std::fabs(mean) <= 5.0 / std::sqrt(static_cast<double>(n)));
            CHECK(std::fabs(var - dt) <= 5.0 * std::sqrt(2.0 / static_cast<double>(n)));
        }
    }
    // terminal variance within 4 standard errors of T = 1 per dimension
    for (int d = 0; d < 2; ++d) {
        std::vector<double> terminal(n);
        for (long p = 0; p < n; ++p) terminal[p] = paths.level(p, steps, d);
        const double var = pairwise_variance(terminal);
        const double se = std::sqrt(2.0 / static_cast<double>(n));  // chi^2 bound
        CHECK(std::fabs(var - 1.0) <= 4.0 * se);
    }
}

TEST_CASE("simulate_paths enforces the memory cap") {
    CHECK_THROWS_AS(simulate_paths(1'000'000, 1000, 2, 1.0, 1u, /*cap=*/1 << 20),
                    ResourceLimit);
    CHECK_THROWS_AS(simulate_paths(0, 10, 1, 1.0, 1u), InvalidArgument);
}

TEST_CASE("z-separable driver validates declared bounds") {
    const auto ok = ZSeparableDriver::make(
        1, 1.0, ScalarField2D::constant(-0.5), ScalarField2D::constant(0.0), 0.51, 0.0);
    CHECK(eval_driver(Driver{ok}, 0.2, 1.0, vec1(2.0)) ==
          doctest::Approx(-0.5 * 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(ZSeparableDriver::make(1, 1.0, ScalarField2D::constant(-0.5),
                                           ScalarField2D::constant(0.0), 0.5, 0.0),
                    InvalidArgument);  // sup|f| must be strictly below alpha
}

TEST_CASE("scalar field tabulation interpolates bilinearly") {
    // values of 2t + 3y on a coarse grid reproduce exactly under bilinearity
    std::vector<double> tg = {0.0, 0.5, 1.0}, yg = {-1.0, 0.0, 2.0};
    std::vector<std::vector<double>> vals(3, std::vector<double>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) vals[i][j] = 2.0 * tg[i] + 3.0 * yg[j];
    const auto f = ScalarField2D::tabulated(tg, yg, vals);
    CHECK(f(0.25, 0.7) == doctest::Approx(2 * 0.25 + 3 * 0.7).epsilon(1e-14));
    CHECK(f(1.0, 2.0) == doctest::Approx(8.0).epsilon(1e-14));
}
