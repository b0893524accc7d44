#include <doctest.h>

#include <cmath>

#include "gdist/portfolio.hpp"
#include "gdist/rng.hpp"
#include "oracles.hpp"

using namespace gdist;

TEST_CASE("utility kinds: marginals invert and values are concave increasing") {
    const auto kinds = {Utility::power(0.5), Utility::log_utility(),
                        Utility::exponential(1.2)};
    for (const auto& u : kinds) {
        double prev_v = -1e300, prev_m = 1e300;
        for (double x : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            CHECK(u.inv_marginal(u.marginal(x)) == doctest::Approx(x).epsilon(1e-10));
            CHECK(u.value(x) > prev_v);
            CHECK(u.marginal(x) < prev_m);
            prev_v = u.value(x);
            prev_m = u.marginal(x);
        }
    }
    // exp utility floors the inverse marginal at zero wealth
    CHECK(Utility::exponential(1.0).inv_marginal(2.0) == 0.0);

    const auto tab = Utility::tabulated({0.5, 1.0, 2.0, 4.0}, {2.0, 1.0, 0.4, 0.1});
    CHECK(tab.inv_marginal(tab.marginal(1.3)) == doctest::Approx(1.3).epsilon(1e-10));
    CHECK_THROWS_AS(Utility::tabulated({1.0, 2.0}, {1.0, 1.5}), InvalidArgument);
    CHECK_THROWS_AS(Utility::power(1.5), InvalidArgument);
}

TEST_CASE("distortion kinds and concavity detection") {
    const auto w = Distortion::power(0.7);
    CHECK(w(0.0) == 0.0);
    CHECK(w(1.0) == 1.0);
    CHECK(w.inverse(w(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(w.concave());
    CHECK(!Distortion::power(1.3).concave());

    const auto tab = Distortion::tabulated({0.0, 0.3, 1.0}, {0.0, 0.5, 1.0});
    CHECK(tab.concave());
    CHECK(tab(0.3) == doctest::Approx(0.5));
    CHECK(tab.inverse(0.5) == doctest::Approx(0.3));
}

TEST_CASE("concave_envelope: concave inputs are fixed points") {
    std::vector<double> ps, fn;
    for (int i = 0; i <= 32; ++i) {
        const double p = i / 32.0;
        ps.push_back(p);
        fn.push_back(std::sqrt(p));
    }
    const auto env = concave_envelope(ps, fn);
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(env.env[i] == fn[i]);
}

TEST_CASE("concave_envelope: convex inputs collapse to the chord") {
    std::vector<double> ps, fn;
    for (int i = 0; i <= 16; ++i) {
        const double p = i / 16.0;
        ps.push_back(p);
        fn.push_back(p * p);
    }
    const auto env = concave_envelope(ps, fn);
    for (std::size_t i = 0; i < ps.size(); ++i)
        CHECK(env.env[i] == doctest::Approx(ps[i]).epsilon(1e-15));
    CHECK(env.hull.size() == 2);  // single segment from (0,0) to (1,1)
}

TEST_CASE("concave_envelope matches the O(n^3) hull oracle exactly") {
    CounterRng rng{2718u};
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> ps(17), fn(17);
        for (int i = 0; i < 17; ++i) {
            ps[i] = i / 16.0;
            // dyadic values keep every chord evaluation exact in doubles
            fn[i] = static_cast<double>(rng.bits(rep, i, 0) % 257) / 64.0;
        }
        const auto env = concave_envelope(ps, fn);
        const auto brute = oracles::brute_force_envelope(ps, fn);
        for (int i = 0; i < 17; ++i) CHECK(env.env[i] == brute[i]);
        // envelope dominates, and is concave on the grid
        for (int i = 0; i < 17; ++i) CHECK(env.env[i] >= fn[i]);
        for (int i = 1; i + 1 < 17; ++i)
            CHECK(env.env[i + 1] - 2 * env.env[i] + env.env[i - 1] <= 1e-12);
    }
}

TEST_CASE("eu_two_rate: log utility pins lambda to 1/x0") {
    const auto market = MarketParams::scalar(1.0, 20, 0.02, 0.05, 1.0, 0.02 - 0.1);
    for (double x0 : {0.5, 1.0, 10.0}) {
        const auto res = eu_two_rate(Utility::log_utility(), market, x0);
        CHECK(std::fabs(res.lambda * x0 - 1.0) <= 1e-6);
        CHECK(res.budget_residual <= 1e-8);
        CHECK(!res.deterministic_market);
    }
}

TEST_CASE("eu_two_rate: deterministic market degenerates to a point payoff") {
    const auto market = MarketParams::scalar(1.0, 10, 0.03, 0.05, 1.0, 0.03);  // theta=0
    const auto res = eu_two_rate(Utility::power(0.5), market, 2.0);
    CHECK(res.deterministic_market);
    const double xstar = 2.0 * std::exp(0.03);
    CHECK(res.quantile(0.3) == doctest::Approx(xstar).epsilon(1e-12));
    CHECK(res.payoff_of_rho(1.0) == doctest::Approx(xstar).epsilon(1e-12));
}

TEST_CASE("eu_two_rate rejects markets violating the contraction hypothesis") {
    const auto market = MarketParams::scalar(1.0, 10, 0.02, 0.05, 1.0, 0.02 + 0.2);
    CHECK_THROWS_AS(eu_two_rate(Utility::log_utility(), market, 1.0),
                    HypothesisViolated);
    CHECK_THROWS_AS(
        eu_two_rate(Utility::log_utility(),
                    MarketParams::scalar(1.0, 10, 0.02, 0.05, 1.0, 0.02 - 0.1), -1.0),
        InvalidArgument);
}

TEST_CASE("eu_two_rate: optimum is anti-comonotonic and certified attained") {
    const auto market = MarketParams::scalar(1.0, 20, 0.02, 0.05, 1.0, 0.02 - 0.1);
    const auto res = eu_two_rate(Utility::power(0.6), market, 1.5);

    // payoff decreasing in rho: anti-comonotonic with the density
    double prev = res.payoff_of_rho(0.25);
    for (double rho : {0.5, 0.8, 1.0, 1.5, 2.5}) {
        const double v = res.payoff_of_rho(rho);
        CHECK(v <= prev + 1e-14);
        prev = v;
    }

    // budget identity re-evaluated through the quantile integral
    auto budget_integrand = [&](double p) {
        return res.rho_law.quantile(1.0 - p) * res.quantile(p);
    };
    const double budget =
        oracles::trapezoid(budget_integrand, 1e-9, 1.0 - 1e-9, 200'001);
    CHECK(std::fabs(budget - 1.5) <= 1e-5);

    // the optimal law's certificate from the sufficient condition is attained
    std::vector<double> ps, xs;
    for (int k = 1; k <= 1024; ++k) {
        const double p = 0.5 * (1.0 - std::cos(M_PI * k / 1025.0));
        ps.push_back(p);
        xs.push_back(res.quantile(p));
    }
    const auto mu_star = DistributionLaw::tabulated(QuantileFunction::piecewise_linear(
        ps, xs, TailSpec::bounded(0.0, xs.back() * 50)));
    const auto cert = two_rate_sufficient_lower(market, mu_star);
    REQUIRE(cert.has_value());
    CHECK(cert->attained == Attainment::Attained);
}

TEST_CASE("rdu_sublinear: identity distortion gives full insurance at the mean") {
    const auto res = rdu_sublinear(Utility::power(0.5), Distortion::power(1.0), 2.5);
    for (double p : {0.05, 0.3, 0.7, 0.95})
        CHECK(res.quantile(p) == doctest::Approx(2.5).epsilon(1e-7));
    CHECK(res.budget_residual <= 1e-8);
    CHECK(res.objective ==
          doctest::Approx(Utility::power(0.5).value(2.5)).epsilon(1e-6));
}

TEST_CASE("rdu_sublinear: log utility with a concave power distortion") {
    const double y0 = 2.0, a = 0.7;
    const auto res = rdu_sublinear(Utility::log_utility(), Distortion::power(a), y0);
    CHECK(res.envelope_exact);  // 1 - w^{-1}(1-p) is concave for a < 1
    // closed form: lambda = 1/y0 and Q(p) = y0 a (1-p)^{a-1}
    CHECK(std::fabs(res.lambda * y0 - 1.0) <= 1e-7);
    for (double p : {0.1, 0.5, 0.9, 0.99})
        CHECK(res.quantile(p) ==
              doctest::Approx(y0 * a * std::pow(1.0 - p, a - 1.0)).epsilon(1e-6));
    // objective dominates the feasible constant payoff
    CHECK(res.objective >= Utility::log_utility().value(y0) - 1e-9);

    // attainment flag follows the driver's costless set
    const auto strict = SublinearDriver::scalar(1.0, 4, 0.1, 0.2);
    const auto flagged =
        rdu_sublinear(Utility::log_utility(), Distortion::power(a), y0, 4097, &strict);
    CHECK(flagged.attainment == Attainment::Approached);
}

TEST_CASE("rdu_sublinear: convex distortion runs through the envelope chord") {
    const auto res = rdu_sublinear(Utility::log_utility(), Distortion::power(1.4), 1.0);
    CHECK(!res.envelope_exact);
    // envelope of a convex graph is its chord, so the optimum is constant
    for (double p : {0.2, 0.5, 0.8})
        CHECK(res.quantile(p) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rdu_sublinear: optimum beats 50 budget-rescaled perturbations") {
    const double y0 = 1.5, a = 0.8;
    const auto u = Utility::log_utility();
    const auto w = Distortion::power(a);
    const auto res = rdu_sublinear(u, w, y0);

    auto objective_of = [&](const std::function<double(double)>& q) {
        return adaptive_gl(
                   [&](double p) {
                       return u.value(std::max(q(p), 1e-12)) * w.deriv(1.0 - p);
                   },
                   1e-10, 1.0 - 1e-10, 1e-11, 1e-9)
            .value;
    };
    CounterRng rng{777u};
    double mean_gap = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        // random increasing perturbation, rescaled back onto the mean budget
        const double b = 0.2 + 1.5 * rng.uniform(rep, 0, 0);
        const double c = rng.uniform(rep, 1, 0);
        auto raw = [&](double p) {
            return res.quantile(p) * (0.6 + c * 0.8 * p) + b * p * p;
        };
        const double mean =
            adaptive_gl([&](double p) { return raw(p); }, 1e-10, 1.0 - 1e-10, 1e-11, 1e-9)
                .value;
        auto feasible = [&](double p) { return raw(p) * (y0 / mean); };
        const double obj = objective_of(feasible);
        CHECK(obj <= res.objective + 1e-7);
        mean_gap += res.objective - obj;
    }
    CHECK(mean_gap / 50.0 > 0.0);
}

TEST_CASE("rdu_law_invariant: identity transform with identity distortion is a point") {
    const auto phi = build_phi(ZSeparableDriver::make(
        1, 1.0, ScalarField2D::constant(0.0), ScalarField2D::constant(0.0), 0.01, 0.0));
    const auto res = rdu_law_invariant(Utility::power(0.5), Distortion::power(1.0), phi,
                                       1.7);
    for (double p : {0.1, 0.5, 0.9})
        CHECK(res.quantile(p) == doctest::Approx(1.7).epsilon(1e-6));
    CHECK(res.budget_residual <= 1e-8);
}

TEST_CASE("rdu_law_invariant agrees with rdu_sublinear on the common special case") {
    const double y0 = 1.0, a = 0.7;
    const auto phi = build_phi(
        ZSeparableDriver::make(1, 1.0, ScalarField2D::constant(0.0),
                               ScalarField2D::constant(0.0), 0.01, 0.0),
        17, 129, 64.0);
    const auto li =
        rdu_law_invariant(Utility::log_utility(), Distortion::power(a), phi, y0);
    const auto sub = rdu_sublinear(Utility::log_utility(), Distortion::power(a), y0);
    for (double p : {0.01, 0.1, 0.4, 0.7, 0.9, 0.99})
        CHECK(std::fabs(li.quantile(p) - sub.quantile(p)) <= 1e-4);
    CHECK(li.foc_residual_max <= 1e-8);
}

TEST_CASE("rdu_law_invariant: exponential utility under the exponential transform") {
    // direct f = -1/2 (builtin constant_f(1/2)), exp utility, concave distortion
    const auto phi = build_phi(example44_driver(1.0), 17, 129, 24.0);
    const auto res = rdu_law_invariant(Utility::exponential(1.0), Distortion::power(0.6),
                                       phi, 1.2);
    CHECK(res.budget_residual <= 1e-8);
    CHECK(res.foc_residual_max <= 1e-8);
    for (std::size_t i = 1; i < res.cdf.size(); ++i) {
        CHECK(res.cdf[i] >= res.cdf[i - 1]);
        CHECK(res.cdf[i] >= 0.0);
        CHECK(res.cdf[i] <= 1.0);
    }
}

TEST_CASE("rdu_law_invariant rejects violated hypotheses") {
    const auto phi_ok = build_phi(example44_driver(1.0));
    CHECK_THROWS_AS(
        rdu_law_invariant(Utility::log_utility(), Distortion::power(1.4), phi_ok, 1.0),
        HypothesisViolated);
    // direct f = +0.3 > 0 violates f(T,.) <= 0
    const auto phi_bad = build_phi(constant_f_driver(-0.3, 1.0));
    CHECK_THROWS_AS(
        rdu_law_invariant(Utility::log_utility(), Distortion::power(0.7), phi_bad, 1.0),
        HypothesisViolated);
}
