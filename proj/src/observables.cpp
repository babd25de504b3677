#include "scarcat/observables.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "scarcat/errors.hpp"
#include "scarcat/parallel.hpp"

namespace scarcat {

namespace {

const Eigen::Matrix2cd &pauli(int axis) {
    static const Eigen::Matrix2cd mats[3] = {
        (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(),
        (Eigen::Matrix2cd() << 0, cplx(0, -1), cplx(0, 1), 0).finished(),
        (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(),
    };
    return mats[axis];
}

} // namespace

MagnetizationProfile magnetization_profile(const StateVector &state, double theta) {
    const int L = state.length();
    const auto amps = state.amplitudes();
    MagnetizationProfile p;
    p.time = state.time();
    p.theta = theta;
    p.sz.assign(L, 0.0);
    // Weight of states with site l down, for every l at once.
    const auto dim = static_cast<std::int64_t>(amps.size());
    const std::int64_t chunks = std::min<std::int64_t>(detail::reduction_chunks, dim);
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(L, 0.0));
#pragma omp parallel for schedule(static) if (dim > 4096)
    for (std::int64_t c = 0; c < chunks; ++c) {
        auto &acc = partial[c];
        for (std::int64_t i = dim * c / chunks; i < dim * (c + 1) / chunks; ++i) {
            const double w = std::norm(amps[i]);
            if (w == 0.0) continue;
            for (auto bits = static_cast<std::uint64_t>(i); bits; bits &= bits - 1) acc[std::countr_zero(bits)] += w;
        }
    }
    for (int l = 0; l < L; ++l) {
        double down = 0.0;
        for (const auto &acc : partial) down += acc[l];
        p.sz[l] = std::clamp(1.0 - 2.0 * down, -1.0, 1.0);
    }
    return p;
}

std::vector<double> down_count_distribution(const StateVector &state) {
    const int L = state.length();
    const auto amps = state.amplitudes();
    const auto dim = static_cast<std::int64_t>(amps.size());
    const std::int64_t chunks = std::min<std::int64_t>(detail::reduction_chunks, dim);
    std::vector<std::vector<double>> partial(chunks, std::vector<double>(L + 1, 0.0));
#pragma omp parallel for schedule(static) if (dim > 4096)
    for (std::int64_t c = 0; c < chunks; ++c)
        for (std::int64_t i = dim * c / chunks; i < dim * (c + 1) / chunks; ++i)
            partial[c][std::popcount(static_cast<std::uint64_t>(i))] += std::norm(amps[i]);
    std::vector<double> p(L + 1, 0.0);
    for (const auto &acc : partial)
        for (int n = 0; n <= L; ++n) p[n] += acc[n];
    return p;
}

double delta_sz(const StateVector &state) {
    const auto p = down_count_distribution(state);
    double mean_down = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) mean_down += static_cast<double>(n) * p[n];
    return mean_down; // L/2 - <S^z> = <number of down spins>
}

DownSpanTable::DownSpanTable(const StateVector &state)
    : length_(state.length()), contained_(static_cast<std::size_t>(state.length() * state.length()), 0.0) {
    const int L = length_;
    const auto amps = state.amplitudes();
    std::vector<double> bins(static_cast<std::size_t>(L * L), 0.0);
    for (std::size_t i = 1; i < amps.size(); ++i) {
        const double w = std::norm(amps[i]);
        if (w == 0.0) continue;
        const int lo = std::countr_zero(static_cast<std::uint64_t>(i));
        const int hi = 63 - std::countl_zero(static_cast<std::uint64_t>(i));
        bins[static_cast<std::size_t>(lo * L + hi)] += w;
        total_ += w;
    }
    // contained(l, r) = sum over lo >= l, hi <= r.
    for (int l = L - 1; l >= 0; --l)
        for (int r = 0; r < L; ++r) {
            double v = bins[static_cast<std::size_t>(l * L + r)];
            if (l + 1 < L) v += contained_[static_cast<std::size_t>((l + 1) * L + r)];
            if (r > 0) v += contained_[static_cast<std::size_t>(l * L + r - 1)];
            if (l + 1 < L && r > 0) v -= contained_[static_cast<std::size_t>((l + 1) * L + r - 1)];
            contained_[static_cast<std::size_t>(l * L + r)] = v;
        }
}

double DownSpanTable::outside_weight(int left, int right) const {
    if (left < 0 || right >= length_ || left > right) throw InvalidArgument("block outside chain");
    return std::max(0.0, total_ - at(left, right));
}

EffectiveRegion effective_region(const StateVector &flipped_branch, double epsilon, int site) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument(fmt::format("epsilon {} outside (0, 1)", epsilon));
    const int L = flipped_branch.length();
    if (site < 0 || site >= L) throw InvalidArgument(fmt::format("site {} outside chain", site));
    const DownSpanTable table(flipped_branch);
    int left = site, right = site;
    double w = table.outside_weight(left, right);
    while (w > epsilon) {
        const bool can_left = left > 0, can_right = right < L - 1;
        if (!can_left && !can_right) throw InvariantViolation("full chain has nonzero outside weight");
        const double wl = can_left ? table.outside_weight(left - 1, right) : 2.0;
        const double wr = can_right ? table.outside_weight(left, right + 1) : 2.0;
        if (std::abs(wl - wr) <= 1e-15) {
            if (can_left) --left;
            if (can_right) ++right;
        } else if (wl < wr) {
            --left;
        } else {
            ++right;
        }
        w = table.outside_weight(left, right);
    }
    // Greedy growth can overshoot on one side; drop edges that are not needed.
    for (bool changed = true; changed;) {
        changed = false;
        if (left < site && table.outside_weight(left + 1, right) <= epsilon) {
            ++left;
            changed = true;
        }
        if (right > site && table.outside_weight(left, right - 1) <= epsilon) {
            --right;
            changed = true;
        }
    }
    return {left, right, epsilon, table.outside_weight(left, right)};
}

FcsDistribution fcs(const StateVector &state, double theta) {
    const int L = state.length();
    const auto p = down_count_distribution(state);
    FcsDistribution d;
    d.length = L;
    d.theta = theta;
    d.convention_warning = L % 4 != 0;
    const double two_pi = 2.0 * std::numbers::pi / (L + 1);
    for (int j = 0; j <= L; ++j) {
        const double k = j - L / 2.0;
        cplx g{};
        for (int n = 0; n <= L; ++n) g += p[n] * std::polar(1.0, two_pi * k * (L / 2.0 - n));
        d.k2.push_back(2 * j - L);
        d.G.push_back(g);
    }
    for (int j = 0; j <= L; ++j) {
        const double m = j - L / 2.0;
        cplx s{};
        for (int i = 0; i <= L; ++i) s += std::polar(1.0, -two_pi * (d.k2[i] / 2.0) * m) * d.G[i];
        s /= static_cast<double>(L + 1);
        if (std::abs(s.imag()) > 1e-10)
            throw InvariantViolation(fmt::format("counting probability has imaginary part {:.3e}", s.imag()));
        d.m2.push_back(2 * j - L);
        d.P.push_back(s.real());
    }
    return d;
}

Eigen::Matrix4cd two_site_density_matrix(const StateVector &state, int a, int b) {
    const int L = state.length();
    if (a < 0 || b < 0 || a >= L || b >= L || a == b) throw InvalidArgument("invalid site pair");
    const auto amps = state.amplitudes();
    const std::uint64_t ba = std::uint64_t{1} << a, bb = std::uint64_t{1} << b;
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i & (ba | bb)) continue;
        const cplx v[4] = {amps[i], amps[i | ba], amps[i | bb], amps[i | ba | bb]};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) rho(r, c) += v[r] * std::conj(v[c]);
    }
    return rho;
}

Eigen::Matrix2cd one_site_density_matrix(const StateVector &state, int a) {
    if (a < 0 || a >= state.length()) throw InvalidArgument("invalid site");
    const auto amps = state.amplitudes();
    const std::uint64_t bit = std::uint64_t{1} << a;
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        if (i & bit) continue;
        const cplx u = amps[i], d = amps[i | bit];
        rho(0, 0) += std::norm(u);
        rho(1, 1) += std::norm(d);
        rho(0, 1) += u * std::conj(d);
    }
    rho(1, 0) = std::conj(rho(0, 1));
    return rho;
}

CovarianceMatrix covariance_matrix(const StateVector &state, const EffectiveRegion &region) {
    const int L = state.length();
    if (region.left < 0 || region.right >= L || region.left > region.right)
        throw InvalidArgument(fmt::format("region [{}, {}] invalid for chain of length {}", region.left, region.right, L));
    const int s = region.size();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(3 * s, 3 * s);
    std::vector<Eigen::Vector3d> mean(s);
    for (int n = 0; n < s; ++n) {
        const Eigen::Matrix2cd rho = one_site_density_matrix(state, region.left + n);
        for (int a = 0; a < 3; ++a) mean[n][a] = (rho * pauli(a)).trace().real();
    }
    std::vector<std::pair<int, int>> pairs;
    for (int n = 0; n < s; ++n)
        for (int m = n + 1; m < s; ++m) pairs.emplace_back(n, m);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [n, m] = pairs[p];
        const Eigen::Matrix4cd rho = two_site_density_matrix(state, region.left + n, region.left + m);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                // Local index is bit_n + 2 bit_m, so the operator is sigma^b (x) sigma^a in Kronecker order.
                Eigen::Matrix4cd op;
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c) op(r, c) = pauli(a)(r & 1, c & 1) * pauli(b)(r >> 1, c >> 1);
                const double v = (rho * op).trace().real() - mean[n][a] * mean[m][b];
                k(3 * n + a, 3 * m + b) = v;
                k(3 * m + b, 3 * n + a) = v;
            }
    }
    for (int n = 0; n < s; ++n)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) k(3 * n + a, 3 * n + b) = (a == b ? 1.0 : 0.0) - mean[n][a] * mean[n][b];
    return {region, k};
}

double direction_variance(const StateVector &state, const EffectiveRegion &region,
                          const std::vector<Eigen::Vector3d> &directions) {
    if (static_cast<int>(directions.size()) != region.size()) throw InvalidArgument("one direction per site required");
    HamiltonianSpec o{state.length(), Boundary::open, {}, "direction_observable"};
    for (int n = 0; n < region.size(); ++n)
        for (int a = 0; a < 3; ++a)
            if (directions[n][a] != 0.0)
                o.terms.push_back({directions[n][a], {{region.left + n, static_cast<Axis>(a)}}});
    const CompiledOperator op(o);
    const auto image = apply_operator(op, state);
    const double mean = inner_product(state.amplitudes(), image).real();
    const double second = std::pow(vector_norm(image), 2);
    return second - mean * mean;
}

} // namespace scarcat
