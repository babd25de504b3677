#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "scarcat/errors.hpp"
#include "scarcat/observables.hpp"

using namespace scarcat;

namespace {

constexpr double pi = std::numbers::pi;

double dense_expectation(const StateVector &s, const oracle::Mat &m) {
    const oracle::Vec v = oracle::to_vec(s);
    return (v.adjoint() * m * v)(0, 0).real();
}

// Symmetrized covariance of single-site Paulis straight from the definition.
Eigen::MatrixXd covariance_oracle(const StateVector &s, int left, int right) {
    const int L = s.length(), n = right - left + 1;
    const char ax[3] = {'x', 'y', 'z'};
    Eigen::MatrixXd k(3 * n, 3 * n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a)
            for (int j = 0; j < n; ++j)
                for (int b = 0; b < 3; ++b) {
                    const oracle::Mat A = oracle::op(L, left + i, ax[a]), B = oracle::op(L, left + j, ax[b]);
                    k(3 * i + a, 3 * j + b) = dense_expectation(s, (A * B + B * A) / 2.0) -
                                              dense_expectation(s, A) * dense_expectation(s, B);
                }
    return k;
}

StateVector random_region_state(int L, std::mt19937_64 &rng) { return oracle::random_state(L, rng); }

} // namespace

TEST_CASE("magnetization profile and delta S^z") {
    const auto flip = basis_state(6, 1u << 2);
    const auto p = magnetization_profile(flip);
    for (int l = 0; l < 6; ++l) CHECK(p.sz[l] == doctest::Approx(l == 2 ? -1.0 : 1.0));
    CHECK(delta_sz(flip) == doctest::Approx(1.0));
    CHECK(delta_sz(product_state_up(6)) == doctest::Approx(0.0));

    std::mt19937_64 rng(1);
    const auto psi = oracle::random_state(5, rng);
    const auto q = magnetization_profile(psi);
    for (int l = 0; l < 5; ++l) CHECK(std::abs(q.sz[l] - dense_expectation(psi, oracle::op(5, l, 'z'))) < 1e-12);
}

TEST_CASE("light cone in the magnetization profile") {
    const int L = 14;
    const auto h = build_h1({2.8, 1, 0, 0, 0, 0}, L, Boundary::open);
    const auto s = prepare_protocol_state(h, pi / 2, L / 2, 1.0).state;
    const auto p = magnetization_profile(s);
    CHECK(p.sz[L / 2] < 0.9);
    CHECK(p.sz[0] > 1 - 1e-4);
    CHECK(p.sz[L - 1] > 1 - 1e-4);
}

TEST_CASE("delta S^z grows with time for the free chain") {
    const auto h = build_h1({2.8, 1, 0, 0, 0, 0}, 16, Boundary::open);
    const std::vector<double> times = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    const auto series = protocol_time_series(h, pi / 2, 8, times);
    for (std::size_t i = 1; i < series.size(); ++i) CHECK(delta_sz(series[i]) > delta_sz(series[i - 1]));
}

TEST_CASE("effective region") {
    const auto h = build_h1({2.8, 1, 0, 0, 0, 0}, 16, Boundary::open);
    const auto r0 = effective_region(basis_state(16, 1u << 8), 0.001, 8);
    CHECK(r0.left == 8);
    CHECK(r0.right == 8);
    CHECK(r0.outside_weight == 0.0);

    const auto series = protocol_time_series(h, pi / 2, 8, {0.5, 1.0, 1.5});
    int previous = 1;
    for (const auto &s : series) {
        const auto r = effective_region(s, 0.001, 8);
        CHECK(r.contains(8));
        CHECK(r.outside_weight <= 0.001);
        CHECK(r.size() >= previous);
        previous = r.size();

        // Brute-force outside weight and minimality.
        const DownSpanTable table(s);
        auto brute = [&](int lo, int hi) {
            double w = 0;
            for (std::size_t i = 0; i < s.dimension(); ++i) {
                const std::uint64_t inside = ((std::uint64_t{1} << (hi + 1)) - 1) & ~((std::uint64_t{1} << lo) - 1);
                if (i & ~inside) w += std::norm(s[i]);
            }
            return w;
        };
        CHECK(std::abs(table.outside_weight(r.left, r.right) - brute(r.left, r.right)) < 1e-12);
        if (r.left < 8) CHECK(brute(r.left + 1, r.right) > 0.001);
        if (r.right > 8) CHECK(brute(r.left, r.right - 1) > 0.001);
    }
    CHECK(previous > 3);
    CHECK_THROWS_AS(effective_region(series[0], 0.0, 8), InvalidArgument);
    CHECK_THROWS_AS(effective_region(series[0], 0.001, 16), InvalidArgument);
}

TEST_CASE("full counting statistics identities") {
    const int L = 12;
    const auto h = build_h1({1, 0.5, 0.7, 0, 0.6, 0}, L, Boundary::open);
    for (double theta : {pi / 2, pi / 4, 0.3}) {
        const auto s = prepare_protocol_state(h, theta, L / 2, 1.5).state;
        const auto d = fcs(s, theta);
        double total = 0, m1 = 0, m2 = 0;
        for (std::size_t i = 0; i < d.P.size(); ++i) {
            total += d.P[i];
            m1 += d.m_value(i) * d.P[i];
            m2 += d.m_value(i) * d.m_value(i) * d.P[i];
        }
        // S^z is diagonal: (L - 2 n_down)/2 weighted by |psi_i|^2.
        double mean = 0, second = 0;
        for (std::size_t i = 0; i < s.dimension(); ++i) {
            const double m = (L - 2.0 * std::popcount(i)) / 2;
            mean += m * std::norm(s[i]);
            second += m * m * std::norm(s[i]);
        }
        const double var = second - mean * mean;
        CHECK(std::abs(total - 1) < 1e-10);
        CHECK(std::abs(m1 - mean) < 1e-9);
        CHECK(std::abs(m2 - m1 * m1 - var) < 1e-8);
        CHECK(std::abs(d.P.back() - std::pow(std::cos(theta), 2)) < 1e-10);
        CHECK(d.m_value(d.P.size() - 1) == doctest::Approx(L / 2.0));
        if (theta == pi / 2)
            for (std::size_t i = 0; i < d.P.size(); ++i)
                if (d.m2[i] % 4 == 0) CHECK(d.P[i] < 1e-10);
        CHECK_FALSE(d.convention_warning);
    }
    CHECK(fcs(product_state_up(6)).convention_warning);
}

TEST_CASE("reduced density matrices and covariance") {
    const auto up = product_state_up(4);
    const auto k = covariance_matrix(up, {1, 1, 0.0, 0.0});
    Eigen::Matrix3d expected = Eigen::Vector3d(1, 1, 0).asDiagonal();
    CHECK((k.entries - expected).norm() < 1e-14);

    const auto g = covariance_matrix(oracle::ghz(4), {0, 3, 0.0, 0.0});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(g.entries(3 * i + 2, 3 * j + 2) == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 3; ++trial) {
        const auto psi = random_region_state(5, rng);
        const auto c = covariance_matrix(psi, {1, 4, 0.0, 0.0});
        CHECK((c.entries - covariance_oracle(psi, 1, 4)).norm() < 1e-12);
        const oracle::Mat rho_full = oracle::to_vec(psi) * oracle::to_vec(psi).adjoint();
        const auto rho = one_site_density_matrix(psi, 2);
        for (int a = 0; a < 3; ++a) {
            const char ax[3] = {'x', 'y', 'z'};
            const oracle::cplx ref = (rho_full * oracle::op(5, 2, ax[a])).trace();
            CHECK(std::abs((rho * oracle::pauli(ax[a])).trace() - ref) < 1e-12);
        }
    }
}

TEST_CASE("quantumness of reference states") {
    for (int s : {1, 3, 5}) {
        const auto k = covariance_matrix(product_state_up(6), {0, s - 1, 0.0, 0.0});
        const auto r = quantumness_iterative(k);
        CHECK(std::abs(r.value - 1.0) < 1e-8);
        for (const auto &d : r.directions) CHECK(std::abs(d.z()) < 1e-6);
    }
    for (int L : {4, 6}) {
        const auto k = covariance_matrix(oracle::ghz(L), {0, L - 1, 0.0, 0.0});
        const auto r = quantumness_iterative(k);
        CHECK(std::abs(r.value - L) < 1e-8);
        for (const auto &d : r.directions) CHECK(std::abs(std::abs(d.z()) - 1.0) < 1e-6);
        CHECK(std::abs(quantumness_dense(k).value - L) < 1e-8);
    }
    const auto k = covariance_matrix(basis_state(3, 2), {0, 2, 0.0, 0.0});
    CHECK(std::abs(quantumness_iterative(k).value - 1.0) < 1e-8);
    CHECK(std::abs(quantumness_dense(k).value - 1.0) < 1e-8);
}

TEST_CASE("iterative quantumness: oracle agreement, bounds and variance identity") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 8; ++trial) {
        const auto psi = oracle::random_state(5, rng);
        const EffectiveRegion region{0, 4, 0.0, 0.0};
        const auto k = covariance_matrix(psi, region);
        const auto it = quantumness_iterative(k);
        const auto dense = quantumness_dense(k);
        CHECK(it.value >= 1 - 1e-9);
        CHECK(it.value <= region.size() + 1e-9);
        CHECK(std::abs(it.value - dense.value) < 1e-6);
        CHECK(std::abs(it.variance_value - it.value) < 1e-8);
        CHECK(std::abs(direction_variance(psi, region, it.directions) / region.size() - it.value) < 1e-8);
    }
}

TEST_CASE("quantumness input validation") {
    CovarianceMatrix bad{{0, 1, 0.0, 0.0}, Eigen::MatrixXd::Identity(3, 3)};
    CHECK_THROWS_AS(quantumness_iterative(bad), InvalidArgument);
    const auto k = covariance_matrix(product_state_up(10), {0, 8, 0.0, 0.0});
    CHECK_THROWS_AS(quantumness_dense(k), InvalidArgument);
}
