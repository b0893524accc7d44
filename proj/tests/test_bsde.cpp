#include <doctest.h>

#include <cmath>

#include "gdist/bsde.hpp"
#include "gdist/rng.hpp"

using namespace gdist;

namespace {

std::vector<double> terminal_from(const PathEnsemble& paths,
                                  const std::function<double(double)>& fn,
                                  int node = -1, int d = 0) {
    const int k = node < 0 ? paths.n_steps() : node;
    std::vector<double> x(static_cast<std::size_t>(paths.n_paths()));
    for (long p = 0; p < paths.n_paths(); ++p) x[p] = fn(paths.level(p, k, d));
    return x;
}

}  // namespace

TEST_CASE("solve_lsmc: zero driver collapses to the sample mean") {
    const auto paths = simulate_paths(20'000, 20, 1, 1.0, 11u);
    const auto x = terminal_from(paths, [](double b) { return std::sin(b) + 2.0; });
    const auto sol = solve_lsmc(Driver{ZeroDriver{1}}, x, paths);
    const double mean = pairwise_mean(x);
    CHECK(std::fabs(sol.y0 - mean) <= 1e-12 * std::fabs(mean));
    // with g = 0 the telescoped estimator is the plain mean
    CHECK(sol.y0_martingale == doctest::Approx(mean).epsilon(1e-13));
    CHECK(sol.std_err == doctest::Approx(standard_error(x)).epsilon(1e-12));
}

TEST_CASE("solve_lsmc: constant payoff discounts at the deposit rate") {
    const double r = 0.05, T = 1.0, c = 3.0;
    const auto paths = simulate_paths(100'000, 50, 1, T, 21u);
    const std::vector<double> x(100'000, c);
    const auto sol = solve_lsmc(Driver{LinearDriver::scalar(T, 50, r, 0.0, 0.0)}, x, paths);
    CHECK(std::fabs(sol.y0 - c * std::exp(-r * T)) / (c * std::exp(-r * T)) <= 0.002);
}

TEST_CASE("solve_lsmc: quadratic driver prices the exponential certainty equivalent") {
    // g = -z^2/2 makes e^{Y} a martingale, so y0 = log E[e^{B_T}] = T/2
    const double T = 1.0;
    const long n = 100'000;
    const auto paths = simulate_paths(n, 100, 1, T, 31u);
    const auto zsep = ZSeparableDriver::make(1, T, ScalarField2D::constant(-0.5),
                                             ScalarField2D::constant(0.0), 0.51, 0.0);
    const auto x = terminal_from(paths, [](double b) { return b; });
    const auto sol = solve_lsmc(Driver{zsep}, x, paths);
    CHECK(std::fabs(sol.y0 - T / 2) / (T / 2) <= 0.01);
}

TEST_CASE("solve_lsmc: terminal condition held exactly and seeds reproduce") {
    const auto paths = simulate_paths(5'000, 10, 1, 1.0, 77u);
    const auto x = terminal_from(paths, [](double b) { return b * b; });
    LsmcOptions opts;
    opts.retain_nodes = true;
    const auto sol = solve_lsmc(Driver{ZeroDriver{1}}, x, paths, opts);
    for (long p = 0; p < paths.n_paths(); ++p)
        CHECK(sol.y_nodes(p, paths.n_steps()) == x[static_cast<std::size_t>(p)]);

    const auto again = solve_lsmc(Driver{ZeroDriver{1}}, x, paths, opts);
    CHECK(again.y0 == sol.y0);

    thread_count() = 8;
    const auto threaded = solve_lsmc(Driver{ZeroDriver{1}}, x, paths, opts);
    thread_count() = 1;
    CHECK(threaded.y0 == sol.y0);
    CHECK(threaded.std_err == sol.std_err);
}

TEST_CASE("solve_lsmc: basis column for early-measurable terminals") {
    // X = q(B_{T/2}): plain polynomial conditioning on B_t for t > T/2 is
    // biased; the appended terminal column restores the martingale property.
    const double T = 1.0;
    const long n = 50'000;
    const int steps = 40;
    const auto paths = simulate_paths(n, steps, 1, T, 99u);
    const double scale = std::sqrt(T / 2);
    const auto x = terminal_from(
        paths, [&](double b) { return std_normal_cdf(b / scale); }, steps / 2);

    LsmcOptions opts;
    opts.measurable_from = steps / 2;
    const auto sol = solve_lsmc(Driver{ZeroDriver{1}}, x, paths, opts);
    CHECK(std::fabs(sol.y0 - 0.5) <= 0.004);  // E[Φ(N(0,1))] = 1/2

    // the quadratic driver must see Z = 0 on [T/2, T] for this terminal
    const auto zsep = ZSeparableDriver::make(1, T, ScalarField2D::constant(0.5),
                                             ScalarField2D::constant(0.0), 0.51, 0.0);
    const auto nonlinear = solve_lsmc(Driver{zsep}, x, paths, opts);
    // -log E[e^{-X}] for X = Φ(N(0,1)) ~ U(0,1): E[e^{-U}] = 1 - e^{-1}
    const double target = -std::log(1.0 - std::exp(-1.0));
    CHECK(std::fabs(nonlinear.y0 - target) <= 0.01 * target + 3 * nonlinear.std_err);
}

TEST_CASE("solve_lsmc: grid refinement tightens the quadratic-driver error") {
    const double T = 1.0;
    const auto zsep = ZSeparableDriver::make(1, T, ScalarField2D::constant(-0.5),
                                             ScalarField2D::constant(0.0), 0.51, 0.0);
    // common random numbers: coarse ensembles aggregate the fine increments,
    // so resolution differences isolate the time-discretization error
    const int fine_steps = 100;
    const long n = 100'000;
    const auto fine = simulate_paths(n, fine_steps, 1, T, 1717u);
    auto coarsen = [&](int factor) {
        const int steps = fine_steps / factor;
        std::vector<double> inc(static_cast<std::size_t>(n) * steps);
        for (int k = 0; k < steps; ++k)
            for (long p = 0; p < n; ++p) {
                double s = 0.0;
                for (int j = 0; j < factor; ++j) s += fine.increment(p, k * factor + j, 0);
                inc[static_cast<std::size_t>(k) * n + p] = s;
            }
        return PathEnsemble(n, steps, 1, T, fine.seed(), std::move(inc));
    };
    // tanh payoff gives genuine y-curvature so the Euler bias is visible
    auto solve_on = [&](const PathEnsemble& paths) {
        const auto x = terminal_from(paths, [](double b) { return std::tanh(b); });
        return solve_lsmc(Driver{zsep}, x, paths).y0;
    };
    const double y25 = solve_on(coarsen(4));
    const double y50 = solve_on(coarsen(2));
    const double y100 = solve_on(fine);
    CHECK(std::fabs(y25 - y50) > std::fabs(y50 - y100));
}

TEST_CASE("solve_lsmc input validation") {
    const auto paths = simulate_paths(100, 4, 1, 1.0, 5u);
    std::vector<double> x(50, 1.0);
    CHECK_THROWS_AS(solve_lsmc(Driver{ZeroDriver{1}}, x, paths), InvalidArgument);
    std::vector<double> ok(100, 1.0);
    CHECK_THROWS_AS(solve_lsmc(Driver{ZeroDriver{2}}, ok, paths), DimensionMismatch);
    LsmcOptions bad;
    bad.basis_degree = 0;
    CHECK_THROWS_AS(solve_lsmc(Driver{ZeroDriver{1}}, ok, paths, bad), InvalidArgument);
}

TEST_CASE("solve_linear_closed_form examples") {
    // X == c with delta = 0: martingale factor has mean one
    const double r = 0.04, T = 1.0, c = 2.0;
    const auto m = MarketParams::scalar(T, 10, r, r, 1.0, r + 0.2);
    const auto spd = density_law(m, DensityKind::Standard);
    const auto paths = simulate_paths(200'000, 10, 1, T, 8u);
    const auto rho = sample_density(spd, paths);
    const auto flat = solve_linear_closed_form(LinearDriver::from_market(m),
                                               std::vector<double>(200'000, c), rho);
    CHECK(std::fabs(flat.value - c * std::exp(-r * T)) <= 4.0 * c * flat.std_err);

    // r = 0, theta = 0, delta = d: value = E[X] - d T
    const double d = 0.3;
    const auto m0 = MarketParams::scalar(T, 10, 0.0, 0.0, 1.0, 0.0);
    const auto rho0 = sample_density(density_law(m0, DensityKind::Standard), paths);
    const auto x = terminal_from(paths, [](double b) { return b * b; });
    const auto lin = LinearDriver::from_market(
        m0, std::vector<double>(10, d));
    const auto got = solve_linear_closed_form(lin, x, rho0);
    CHECK(got.value == doctest::Approx(pairwise_mean(x) - d * T).epsilon(1e-13));
}

TEST_CASE("solve_linear_closed_form: Girsanov shift on B_T") {
    // E[rho_T B_T] = -theta T when r = 0
    const double theta = 0.1, T = 1.0;
    const auto m = MarketParams::scalar(T, 10, 0.0, 0.0, 1.0, theta);
    const auto spd = density_law(m, DensityKind::Standard);
    const long n = 1'000'000;
    const auto paths = simulate_paths(n, 10, 1, T, 2024u);
    const auto rho = sample_density(spd, paths);
    const auto x = terminal_from(paths, [](double b) { return b; });
    const auto got = solve_linear_closed_form(LinearDriver::from_market(m), x, rho);
    CHECK(std::fabs(got.value - (-theta * T)) <= 4.0 * got.std_err);
    CHECK(got.std_err < 2e-3);
}

TEST_CASE("comparison_probe: equality, dominance, and shift") {
    const auto paths = simulate_paths(20'000, 25, 1, 1.0, 404u);
    const auto x = terminal_from(paths, [](double b) { return std::tanh(b) + 1.5; });

    const auto eq = comparison_probe(Driver{ZeroDriver{1}}, Driver{ZeroDriver{1}}, x, x,
                                     paths);
    CHECK(eq.ordered);
    CHECK(eq.y0_1 == eq.y0_2);

    // sublinear g1 <= 0 = g2 with the same X: E_{g1}[X] >= E_{g2}[X]
    const auto sub = SublinearDriver::scalar(1.0, 25, 0.1, 0.1);
    const auto dom = comparison_probe(Driver{sub}, Driver{ZeroDriver{1}}, x, x, paths);
    CHECK(dom.ordered);
    CHECK(dom.y0_1 >= dom.y0_2 - 3.0 * dom.combined_se);

    // x1 = x2 + 1 under the zero driver shifts y0 by exactly one
    auto x1 = x;
    for (double& v : x1) v += 1.0;
    const auto shift = comparison_probe(Driver{ZeroDriver{1}}, Driver{ZeroDriver{1}}, x1,
                                        x, paths);
    CHECK(shift.ordered);
    CHECK(std::fabs(shift.y0_1 - shift.y0_2 - 1.0) <= 1e-12);
}

TEST_CASE("comparison_probe rejects violated preconditions") {
    const auto paths = simulate_paths(1'000, 5, 1, 1.0, 3u);
    const auto x = terminal_from(paths, [](double b) { return b; });
    auto worse = x;
    worse[17] -= 1.0;
    CHECK_THROWS_AS(comparison_probe(Driver{ZeroDriver{1}}, Driver{ZeroDriver{1}}, worse,
                                     x, paths),
                    PreconditionViolated);
    // g1 = 0 does not dominate g2 = -K|z| from below
    const auto sub = SublinearDriver::scalar(1.0, 5, 0.2, 0.2);
    CHECK_THROWS_AS(comparison_probe(Driver{ZeroDriver{1}}, Driver{sub}, x, x, paths),
                    PreconditionViolated);
}
