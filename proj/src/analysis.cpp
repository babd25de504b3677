#include "scarcat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "scarcat/errors.hpp"

namespace scarcat {

FitResult fit_growth(const std::vector<double> &xs, const std::vector<double> &ys) {
    if (xs.size() != ys.size()) throw InvalidArgument("fit_growth: xs and ys differ in length");
    std::set<double> distinct;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
            throw InvalidArgument("fit_growth: xs must be positive and all values finite");
        distinct.insert(xs[i]);
    }
    if (distinct.size() < 4)
        throw InvalidArgument(fmt::format("fit_growth: need at least 4 distinct x values, got {}", distinct.size()));

    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = xs[i];
        a(i, 2) = 1.0 / xs[i];
        b[i] = ys[i];
    }
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 3) throw InvalidArgument("fit_growth: design matrix is rank deficient");
    const Eigen::Vector3d beta = qr.solve(b);

    FitResult f;
    f.b0 = beta[0];
    f.b1 = beta[1];
    f.b2 = beta[2];
    f.points = xs.size();
    const double rss = (a * beta - b).squaredNorm();
    f.residual_norm = std::sqrt(rss);
    if (n > 3) {
        const Eigen::Matrix3d cov = (rss / static_cast<double>(n - 3)) * (a.transpose() * a).inverse();
        f.se_b0 = std::sqrt(cov(0, 0));
        f.se_b1 = std::sqrt(cov(1, 1));
        f.se_b2 = std::sqrt(cov(2, 2));
    }
    return f;
}

double flat_threshold(const FitResult &fit) { return std::max(0.05, 3.0 * fit.se_b1); }

bool is_flat(const FitResult &fit) { return std::abs(fit.b1) < flat_threshold(fit); }

Trend linear_trend(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear_trend: need at least two paired points");
    const double n = static_cast<double>(x.size());
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0)) throw InvalidArgument("linear_trend: x values are all equal");
    Trend tr;
    tr.slope = sxy / sxx;
    double half_width = 0.0;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(y[i] - ym - tr.slope * (x[i] - xm), 2);
        const double se = std::sqrt(rss / (n - 2) / sxx);
        half_width = boost::math::quantile(boost::math::students_t(n - 2), 0.975) * se;
    }
    tr.ci_low = tr.slope - half_width;
    tr.ci_high = tr.slope + half_width;
    return tr;
}

std::string spreading_name(Spreading s) {
    switch (s) {
    case Spreading::ballistic: return "ballistic";
    case Spreading::confined: return "confined";
    case Spreading::undetermined: return "undetermined";
    }
    return "undetermined";
}

SpreadingReport classify_spreading(const std::vector<double> &times, const std::vector<int> &sizes) {
    if (times.size() != sizes.size()) throw InvalidArgument("classify_spreading: times and sizes differ in length");
    if (times.size() < 5) throw InvalidArgument("classify_spreading: need at least 5 time points");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw InvalidArgument("classify_spreading: times must increase");

    const double mid = (times.front() + times.back()) / 2.0;
    std::vector<double> t, y;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= mid) {
            t.push_back(times[i]);
            y.push_back(sizes[i]);
        }
    SpreadingReport r;
    r.window_points = t.size();
    const Trend trend = linear_trend(t, y);
    r.slope = trend.slope;
    r.ci_low = trend.ci_low;
    r.ci_high = trend.ci_high;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*hi - *lo < 1.0) {
        r.classification = Spreading::confined;
        r.saturation = ym;
    } else if (r.ci_low > 0.0) {
        r.classification = Spreading::ballistic;
    }
    return r;
}

SpreadingReport classify_spreading(const std::vector<double> &times, const std::vector<EffectiveRegion> &regions) {
    std::vector<int> sizes;
    for (const auto &r : regions) sizes.push_back(r.size());
    return classify_spreading(times, sizes);
}

BimodalityReport detect_bimodality(const FcsDistribution &p, double valley_threshold) {
    const int L = p.length;
    const double total = std::accumulate(p.P.begin(), p.P.end(), 0.0);
    if (!(total > 0)) throw InvalidArgument("detect_bimodality: distribution has no weight");
    // Entry j of P has m = j - L/2, i.e. n = L - j down spins.
    BimodalityReport r;
    r.parity_sublattice = true;
    for (std::size_t j = 0; j < p.P.size(); ++j) {
        const int n = L - static_cast<int>(j);
        if (n > 0 && n % 2 == 0 && p.P[j] / total >= 1e-10) r.parity_sublattice = false;
    }
    std::vector<double> m, w;
    for (std::size_t j = 0; j < p.P.size(); ++j) {
        const int n = L - static_cast<int>(j);
        if (r.parity_sublattice && n > 0 && n % 2 == 0) continue;
        const double v = p.P[j] / total;
        m.push_back(p.m_value(j));
        w.push_back(v < 1e-12 ? 0.0 : v);
    }
    const std::size_t count = w.size();
    // Steepest ascent from each point, stepping over flat runs; a flat top
    // resolves to its leftmost point.
    auto climb = [&](std::size_t i) {
        for (;;) {
            std::size_t lo = i, hi = i;
            while (lo > 0 && w[lo - 1] == w[i]) --lo;
            while (hi + 1 < count && w[hi + 1] == w[i]) ++hi;
            const double left = lo > 0 ? w[lo - 1] : -1.0;
            const double right = hi + 1 < count ? w[hi + 1] : -1.0;
            if (right > w[i] && right >= left)
                i = hi + 1;
            else if (left > w[i])
                i = lo - 1;
            else
                return lo;
        }
    };
    std::vector<double> basin(count, 0.0);
    for (std::size_t i = 0; i < count; ++i)
        if (w[i] > 0) basin[climb(i)] += w[i];
    std::vector<std::size_t> dominant;
    for (std::size_t i = 0; i < count; ++i)
        if (basin[i] > 0) {
            r.peaks.push_back({m[i], w[i], basin[i]});
            if (basin[i] > 0.05) dominant.push_back(i);
        }
    if (dominant.size() == 2) {
        const std::size_t a = dominant[0], b = dominant[1];
        double valley = std::numeric_limits<double>::infinity();
        for (std::size_t i = a + 1; i < b; ++i) valley = std::min(valley, w[i]);
        const double smaller = std::min(w[a], w[b]);
        r.valley_ratio = std::isfinite(valley) ? valley / smaller : 0.0;
        r.separated = r.valley_ratio < valley_threshold;
    }
    return r;
}

double density_operator_norm(const HamiltonianSpec &density) {
    int support = 0;
    for (const auto &t : density.terms)
        for (const auto &f : t.factors) support = std::max(support, f.site + 1);
    if (support == 0) {
        double s = 0.0;
        for (const auto &t : density.terms) s += t.coefficient;
        return std::abs(s);
    }
    if (support > 10) throw InvalidArgument("operator density support too large for dense norm");
    HamiltonianSpec local = density;
    local.length = support;
    const Eigen::MatrixXcd m = dense_matrix(local);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

U1Report u1_macroscopic_check(const HamiltonianSpec &h, int flips, const HamiltonianSpec &density,
                              const std::vector<double> &times, const U1Options &opt) {
    const int L = h.length;
    if (flips < 1) throw InvalidArgument("u1 check needs at least one flip");
    const int center = default_measurement_site(L);
    if (center + flips > L) throw InvalidArgument("too many flips for the chain");
    if (commutator_norm(h, total_sz(L)) >= 1e-10)
        throw InvalidArgument(fmt::format("{} does not conserve S^z; u1 check requires a U(1)-symmetric model", h.label));

    int support = 0;
    for (const auto &t : density.terms)
        for (const auto &f : t.factors) support = std::max(support, f.site + 1);
    if (support < 1 || support > L) throw InvalidArgument("observable density support invalid");
    HamiltonianSpec o{L, Boundary::open, {}, "density_sum"};
    for (int l = 0; l + support <= L; ++l)
        for (const auto &t : density.terms) {
            PauliTerm shifted{t.coefficient, {}};
            for (const auto &f : t.factors) shifted.factors.push_back({f.site + l, f.axis});
            o.terms.push_back(std::move(shifted));
        }
    const CompiledOperator op(o), sz(total_sz(L)), ch(h);

    auto moments = [&](const StateVector &s) {
        const auto image = apply_operator(op, s);
        const double mean = inner_product(s.amplitudes(), image).real();
        return std::pair{mean, std::pow(vector_norm(image), 2) - mean * mean};
    };
    auto sz_variance = [&](const StateVector &s) {
        const auto image = apply_operator(sz, s);
        const double mean = inner_product(s.amplitudes(), image).real();
        return std::pow(vector_norm(image), 2) - mean * mean;
    };

    U1Report r;
    r.density_norm = density_operator_norm(density);
    const auto [up_mean, up_var] = moments(product_state_up(L));

    std::uint64_t mask = 0;
    for (int j = 0; j < flips; ++j) mask |= std::uint64_t{1} << (center + j);
    StateVector psi = basis_state(L, mask);
    std::vector<cplx> mix(std::size_t{1} << L);
    mix[mask] = 1.0 / std::sqrt(2.0);
    mix[mask & ~(std::uint64_t{1} << (center + flips - 1))] = 1.0 / std::sqrt(2.0);
    StateVector chi(L, std::move(mix));
    const double sz_var0 = sz_variance(chi);

    double now = 0.0;
    r.bounds_hold = true;
    for (double t : times) {
        if (t < now) throw InvalidArgument("u1 check times must be non-decreasing and non-negative");
        if (t > now) {
            psi = evolve_krylov(ch, psi, t - now, opt.krylov).state;
            chi = evolve_krylov(ch, chi, t - now, opt.krylov).state;
            now = t;
        }
        U1Sample s;
        s.time = t;
        s.omega_size = effective_region(psi, opt.epsilon, center).size();
        const auto [mean, var] = moments(psi);
        s.expectation_difference = std::abs(mean - up_mean);
        s.expectation_bound = 2.0 * flips * r.density_norm * support;
        s.variance = var;
        s.variance_bound = up_var + 4.0 * flips * r.density_norm * r.density_norm * support * s.omega_size;
        s.sz_variance = sz_variance(chi);
        r.sz_variance_drift = std::max(r.sz_variance_drift, std::abs(s.sz_variance - sz_var0));
        if (s.expectation_bound > 0)
            r.max_ratio_expectation = std::max(r.max_ratio_expectation, s.expectation_difference / s.expectation_bound);
        if (s.variance_bound > 0) r.max_ratio_variance = std::max(r.max_ratio_variance, s.variance / s.variance_bound);
        if (s.expectation_difference > s.expectation_bound + opt.bound_slack ||
            s.variance > s.variance_bound + opt.bound_slack)
            r.bounds_hold = false;
        r.samples.push_back(s);
    }
    return r;
}

} // namespace scarcat
