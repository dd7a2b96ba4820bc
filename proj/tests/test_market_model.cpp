#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "qmcbasket/market_model.hpp"

using namespace qmcbasket;

namespace {

// adaptive Simpson, good to ~1e-12 on these smooth integrands
double integrate(const std::function<double(double)>& f, double a, double b, int depth = 0,
                 double fa = std::numeric_limits<double>::quiet_NaN(),
                 double fb = std::numeric_limits<double>::quiet_NaN(),
                 double fm = std::numeric_limits<double>::quiet_NaN()) {
    if (std::isnan(fa)) fa = f(a);
    if (std::isnan(fb)) fb = f(b);
    const double m = 0.5 * (a + b);
    if (std::isnan(fm)) fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth > 24 || std::abs(left + right - whole) < 1e-14)
        return left + right + (left + right - whole) / 15.0;
    return integrate(f, a, m, depth + 1, fa, fm, flm) +
           integrate(f, m, b, depth + 1, fm, fb, frm);
}

MarketSpec tiny_market(double rho) {
    MarketSpec spec;
    spec.spots = Vector{{100.0, 90.0}};
    spec.rate = 0.03;
    spec.maturity = 2.0;
    spec.times = Vector{{0.5, 1.2, 2.0}};
    spec.corr = Matrix{{1.0, rho}, {rho, 1.0}};
    spec.curves = {VolatilityCurve{0.3, 0.1, 0.8}, VolatilityCurve{0.2, 0.15, 2.5}};
    spec.weights = Matrix::Constant(2, 3, 1.0 / 6.0);
    spec.strike = 95.0;
    spec.validate();
    return spec;
}

}  // namespace

TEST_SUITE("market_model") {

TEST_CASE("integrated vol matches quadrature of the instantaneous curve") {
    VolatilityCurve curve{0.35, 0.08, 1.7};
    for (double t : {0.0, 0.1, 0.77, 1.0, 3.5}) {
        const double oracle =
            integrate([&](double s) { return instantaneous_vol(curve, s); }, 0.0, t);
        CHECK(std::abs(integrated_vol(curve, t) - oracle) < 1e-10);
    }
    // flat curve degenerates to sigma * t
    VolatilityCurve flat{0.2, 0.2, 1.0};
    CHECK(integrated_vol(flat, 1.5) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("integrated cross vol matches quadrature for asymmetric curves") {
    MarketSpec spec = tiny_market(0.6);
    for (int i = 1; i <= 2; ++i)
        for (int k = 1; k <= 2; ++k)
            for (double t : {0.5, 1.2, 2.0}) {
                const double oracle = spec.corr(i - 1, k - 1) *
                                      integrate(
                                          [&](double s) {
                                              return instantaneous_vol(spec.curves[i - 1], s) *
                                                     instantaneous_vol(spec.curves[k - 1], s);
                                          },
                                          0.0, t);
                CHECK(std::abs(integrated_cross_vol(spec, i, k, t) - oracle) < 1e-10);
            }
}

TEST_CASE("cross vol is symmetric and diagonal matches the squared curve") {
    MarketSpec spec = tiny_market(-0.3);
    CHECK(integrated_cross_vol(spec, 1, 2, 1.2) ==
          doctest::Approx(integrated_cross_vol(spec, 2, 1, 1.2)).epsilon(1e-15));
    const double oracle = integrate(
        [&](double s) { return std::pow(instantaneous_vol(spec.curves[0], s), 2); }, 0.0, 2.0);
    CHECK(std::abs(integrated_cross_vol(spec, 1, 1, 2.0) - oracle) < 1e-10);
}

TEST_CASE("covariance blocks hold integrated cross vols up to each date") {
    MarketSpec spec = tiny_market(0.4);
    BlockBoomerangMatrix blocks = build_covariance_blocks(spec);
    REQUIRE(blocks.block_count() == 3);
    REQUIRE(blocks.block_size() == 2);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                CHECK(blocks.blocks[j](i, k) ==
                      doctest::Approx(integrated_cross_vol(spec, i + 1, k + 1, spec.times(j)))
                          .epsilon(1e-15));
}

TEST_CASE("covariance assembly is the boomerang of per-date blocks") {
    MarketSpec spec = tiny_market(0.4);
    Matrix sigma = build_covariance_blocks(spec).assemble();
    REQUIRE(sigma.rows() == 6);
    // covariance between dates j < l equals the block at the earlier date
    CHECK((sigma.block(0, 2, 2, 2) - sigma.block(0, 0, 2, 2)).norm() == 0.0);
    CHECK((sigma.block(0, 4, 2, 2) - sigma.block(0, 0, 2, 2)).norm() == 0.0);
    CHECK((sigma.block(2, 4, 2, 2) - sigma.block(2, 2, 2, 2)).norm() == 0.0);
    CHECK((sigma - sigma.transpose()).norm() == 0.0);
}

TEST_CASE("constant volatilities collapse the covariance to a Kronecker product") {
    MarketSpec spec = tiny_market(0.25);
    spec.curves = {VolatilityCurve{0.3, 0.3, 1.0}, VolatilityCurve{0.18, 0.18, 1.0}};
    Matrix sigma = build_covariance_blocks(spec).assemble();
    BoomerangMatrix r;
    r.b = spec.times;
    Matrix h(2, 2);
    const double s1 = 0.3, s2 = 0.18;
    h << s1 * s1, 0.25 * s1 * s2, 0.25 * s1 * s2, s2 * s2;
    CHECK((sigma - kron(r.assemble(), h)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("drift components follow the time-major layout") {
    MarketSpec spec = tiny_market(0.0);
    Vector mu = drift_vector(spec);
    REQUIRE(mu.size() == 6);
    // component k = (j-1)M + i: asset 2 at date 3 sits at index 5 (0-based)
    const double expected = std::log(spec.weights(1, 2) * 90.0) + 0.03 * 2.0 -
                            0.5 * integrated_cross_vol(spec, 2, 2, 2.0);
    CHECK(mu(5) == doctest::Approx(expected).epsilon(1e-15));
    const double expected0 = std::log(spec.weights(0, 0) * 100.0) + 0.03 * 0.5 -
                             0.5 * integrated_cross_vol(spec, 1, 1, 0.5);
    CHECK(mu(0) == doctest::Approx(expected0).epsilon(1e-15));
}

TEST_CASE("martingale check: simulated weighted prices hit the forward") {
    MarketSpec spec = tiny_market(0.5);
    const Matrix sigma = build_covariance_blocks(spec).assemble();
    const Matrix c = chol_dense(sigma);
    const Vector mu = drift_vector(spec);
    const int n = 400000, d = 6;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal;
    Vector sum = Vector::Zero(d), sumsq = Vector::Zero(d);
    Vector eps(d);
    for (int r = 0; r < n; ++r) {
        for (int i = 0; i < d; ++i) eps(i) = normal(rng);
        const Vector ws = (mu + c * eps).array().exp();
        sum += ws;
        sumsq += ws.cwiseProduct(ws);
    }
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 2; ++i) {
            const int k = j * 2 + i;
            const double mean = sum(k) / n;
            const double se = std::sqrt((sumsq(k) / n - mean * mean) / n);
            const double forward =
                spec.weights(i, j) * spec.spots(i) * std::exp(spec.rate * spec.times(j));
            CHECK(std::abs(mean - forward) < 4.0 * se);
        }
}

TEST_CASE("basket value and discounted payoff") {
    Vector mu{{0.1, -0.2}}, z{{0.05, 0.02}};
    CHECK(basket_value(mu, z) ==
          doctest::Approx(std::exp(0.15) + std::exp(-0.18)).epsilon(1e-15));
    MarketSpec spec = tiny_market(0.0);
    CHECK(discounted_payoff(spec, 100.0) ==
          doctest::Approx(std::exp(-0.06) * 5.0).epsilon(1e-15));
    CHECK(discounted_payoff(spec, 90.0) == 0.0);
}

TEST_CASE("default market matches the benchmark parameter sheet") {
    MarketSpec spec = default_market(0.4, 100.0);
    CHECK(spec.asset_count() == 10);
    CHECK(spec.monitoring_count() == 250);
    CHECK(spec.spots(7) == 100.0);
    CHECK(spec.rate == 0.04);
    CHECK(spec.maturity == 1.0);
    CHECK(spec.curves[0].sigma0 == doctest::Approx(0.10).epsilon(1e-15));
    CHECK(spec.curves[9].sigma0 == doctest::Approx(0.50).epsilon(1e-15));
    CHECK(spec.curves[4].sigma_inf == 0.09);
    CHECK(spec.curves[4].tau == 1.5);
    CHECK(spec.corr(3, 7) == 0.4);
    CHECK(spec.corr(6, 6) == 1.0);
    CHECK(spec.times(0) == doctest::Approx(1.0 / 250).epsilon(1e-15));
    CHECK(spec.times(249) == 1.0);
    CHECK(spec.weights(2, 100) == doctest::Approx(1.0 / 2500).epsilon(1e-15));
    CHECK(spec.strike == 100.0);
}

TEST_CASE("validate rejects inconsistent markets") {
    MarketSpec good = tiny_market(0.0);

    MarketSpec bad = good;
    bad.spots(0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.times(1) = 0.4;  // not increasing
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.times(2) = 1.9;  // last date != maturity
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.corr(0, 1) = 1.5;  // not PSD (diagonal still 1)
    bad.corr(1, 0) = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.corr(0, 1) = 0.2;  // asymmetric
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.weights(0, 0) += 0.1;  // sum != 1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = good;
    bad.curves[1].tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("json round trip keeps every field") {
    MarketSpec spec = tiny_market(0.35);
    nlohmann::json j = spec;
    MarketSpec back = j.get<MarketSpec>();
    CHECK((back.spots - spec.spots).norm() == 0.0);
    CHECK(back.rate == spec.rate);
    CHECK(back.maturity == spec.maturity);
    CHECK((back.times - spec.times).norm() == 0.0);
    CHECK((back.corr - spec.corr).norm() == 0.0);
    CHECK(back.curves[1].sigma0 == spec.curves[1].sigma0);
    CHECK(back.curves[1].tau == spec.curves[1].tau);
    CHECK((back.weights - spec.weights).norm() == 0.0);
    CHECK(back.strike == spec.strike);
}

TEST_CASE("json conveniences: scalar spots, equicorrelation, equal weights, uniform grid") {
    nlohmann::json j{{"M", 3},
                     {"N", 4},
                     {"spots", 50.0},
                     {"rate", 0.01},
                     {"maturity", 2.0},
                     {"corr", {{"equicorrelation", 0.5}}},
                     {"curves", {{"sigma0", 0.2}, {"sigma_inf", 0.1}, {"tau", 1.0}}},
                     {"weights", "equal"},
                     {"strike", 45.0}};
    MarketSpec spec = j.get<MarketSpec>();
    CHECK(spec.asset_count() == 3);
    CHECK(spec.monitoring_count() == 4);
    CHECK(spec.spots(2) == 50.0);
    CHECK(spec.corr(0, 2) == 0.5);
    CHECK(spec.corr(1, 1) == 1.0);
    CHECK(spec.curves[2].sigma0 == 0.2);
    CHECK(spec.weights(1, 3) == doctest::Approx(1.0 / 12).epsilon(1e-15));
    CHECK(spec.times(1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spec.times(3) == 2.0);
}

TEST_CASE("json validation failures throw invalid_argument") {
    nlohmann::json j{{"M", 2},
                     {"N", 2},
                     {"spots", 50.0},
                     {"rate", 0.01},
                     {"maturity", -1.0},  // invalid
                     {"corr", {{"equicorrelation", 0.0}}},
                     {"curves", {{"sigma0", 0.2}, {"sigma_inf", 0.1}, {"tau", 1.0}}},
                     {"weights", "equal"},
                     {"strike", 45.0}};
    CHECK_THROWS_AS(j.get<MarketSpec>(), std::invalid_argument);
    j["maturity"] = 1.0;
    j["M"] = 5;  // inconsistent with later spots array
    j["spots"] = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(j.get<MarketSpec>(), std::invalid_argument);
}

}  // TEST_SUITE
