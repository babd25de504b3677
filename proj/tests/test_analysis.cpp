#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "scarcat/analysis.hpp"
#include "scarcat/config.hpp"
#include "scarcat/errors.hpp"

using namespace scarcat;

namespace {

FcsDistribution table(int L, const std::vector<double> &p) {
    FcsDistribution d;
    d.length = L;
    for (int i = 0; i <= L; ++i) d.m2.push_back(2 * i - L);
    d.P = p;
    return d;
}

double gauss(double x, double mu, double s) { return std::exp(-0.5 * (x - mu) * (x - mu) / (s * s)); }

} // namespace

TEST_CASE("growth fit recovers exact coefficients") {
    std::vector<double> x = {3, 5, 6, 8, 9, 11, 14}, y;
    for (double v : x) y.push_back(0.7 + 0.25 * v - 1.5 / v);
    const auto f = fit_growth(x, y);
    CHECK(f.b0 == doctest::Approx(0.7));
    CHECK(f.b1 == doctest::Approx(0.25));
    CHECK(f.b2 == doctest::Approx(-1.5));
    CHECK(f.residual_norm < 1e-10);
    CHECK(f.points == 7);
    CHECK_FALSE(is_flat(f));
    CHECK_THROWS_AS(fit_growth({1, 2, 2, 3}, {1, 2, 3, 4}), InvalidArgument);
    CHECK_THROWS_AS(fit_growth({1, 2, 3, 4}, {1, 2, 3}), InvalidArgument);
}

TEST_CASE("standard errors follow the textbook formula") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0, 0.05);
    std::vector<double> x, y;
    for (int i = 3; i < 20; ++i) {
        x.push_back(i);
        y.push_back(2.0 + 0.01 * i + 0.5 / i + noise(rng));
    }
    const auto f = fit_growth(x, y);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 3);
    Eigen::VectorXd Y(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) << 1.0, x[i], 1.0 / x[i];
        Y[static_cast<Eigen::Index>(i)] = y[i];
    }
    const Eigen::MatrixXd inv = (X.transpose() * X).inverse();
    const Eigen::VectorXd b = inv * X.transpose() * Y;
    const double s2 = (Y - X * b).squaredNorm() / static_cast<double>(x.size() - 3);
    CHECK(f.b1 == doctest::Approx(b[1]));
    CHECK(f.se_b1 == doctest::Approx(std::sqrt(s2 * inv(1, 1))));
    CHECK(is_flat(f));
}

TEST_CASE("linear trend interval") {
    const auto exact = linear_trend({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(exact.slope == doctest::Approx(2.0));
    CHECK(exact.ci_low == doctest::Approx(2.0));
    CHECK(exact.ci_high == doctest::Approx(2.0));
    // Residuals (+1, -1, -1, +1): s^2 = 4/2, Sxx = 5, t_{0.975,2} = 4.302653.
    const auto noisy = linear_trend({0, 1, 2, 3}, {1, 0, 1, 4});
    const double se = std::sqrt(2.0 / 5.0);
    CHECK(noisy.ci_high - noisy.slope == doctest::Approx(4.302653 * se).epsilon(1e-5));
    CHECK_THROWS_AS(linear_trend({1, 1}, {0, 1}), InvalidArgument);
}

TEST_CASE("spreading classification") {
    const std::vector<double> t = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(classify_spreading(t, std::vector<int>{1, 3, 5, 7, 9, 11, 13, 15}).classification == Spreading::ballistic);
    const auto confined = classify_spreading(t, std::vector<int>{1, 3, 3, 3, 3, 3, 3, 3});
    CHECK(confined.classification == Spreading::confined);
    CHECK(confined.saturation == doctest::Approx(3.0));
    CHECK(classify_spreading(t, std::vector<int>{1, 3, 3, 5, 3, 5, 3, 4}).classification == Spreading::undetermined);
    CHECK(spreading_name(Spreading::ballistic) == "ballistic");
}

TEST_CASE("bimodality detector") {
    const int L = 16;
    std::vector<double> cat(L + 1), single(L + 1);
    for (int i = 0; i <= L; ++i) {
        cat[i] = 0.5 * gauss(i, 6, 1.2);
        single[i] = gauss(i, 8, 1.5);
    }
    double norm = 0;
    for (double v : cat) norm += v;
    for (double &v : cat) v *= 0.5 / norm;
    cat[L] = 0.5; // cos^2(pi/4) at m = L/2
    const auto c = detect_bimodality(table(L, cat));
    CHECK(c.separated);
    REQUIRE(c.peaks.size() == 2);
    CHECK(c.valley_ratio < 0.1);

    const auto s = detect_bimodality(table(L, single));
    CHECK_FALSE(s.separated);
    CHECK(s.peaks.size() == 1);

    // Three comparable peaks are not a cat.
    std::vector<double> three(L + 1);
    for (int i = 0; i <= L; ++i) three[i] = gauss(i, 2, 0.8) + gauss(i, 8, 0.8) + gauss(i, 14, 0.8);
    CHECK_FALSE(detect_bimodality(table(L, three)).separated);
    CHECK(detect_bimodality(table(L, three)).peaks.size() == 3);
}

TEST_CASE("bimodality on a parity sublattice") {
    const int L = 12;
    std::vector<double> p(L + 1, 0.0);
    for (int i = 1; i <= L; i += 2) p[i] = gauss(i, 6, 2);
    const auto r = detect_bimodality(table(L, p));
    CHECK(r.parity_sublattice);
    CHECK(r.peaks.size() == 1);
}

TEST_CASE("density operator norm") {
    CHECK(density_operator_norm(parse_density("x0 x1")) == doctest::Approx(1.0));
    CHECK(density_operator_norm(parse_density("0.5 z0 z2")) == doctest::Approx(0.5));
}

TEST_CASE("U(1) bounds hold for an XXZ-type pairwise model") {
    PairwiseParams p;
    p.J = {1, 0.5};
    p.gamma_z = {-0.4, 0.3};
    p.D_z = {0.2, 0};
    const auto h = build_h2(p, 10, Boundary::open);
    for (int s : {1, 2}) {
        const auto r = u1_macroscopic_check(h, s, parse_density("x0 x1"), {0.5, 1.0, 2.0});
        CHECK(r.bounds_hold);
        CHECK(r.samples.size() == 3);
        CHECK(r.sz_variance_drift < 1e-9);
        CHECK(r.density_norm == doctest::Approx(1.0));
        for (const auto &x : r.samples) {
            CHECK(x.expectation_difference <= x.expectation_bound);
            CHECK(x.variance <= x.variance_bound);
        }
    }
    PairwiseParams q;
    q.J = {1};
    q.gamma_x = {0.5};
    CHECK_THROWS_AS(u1_macroscopic_check(build_h2(q, 8, Boundary::open), 1, parse_density("z0"), {1.0}), InvalidArgument);
}
