#include "scarcat/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "scarcat/errors.hpp"

namespace scarcat {

namespace {

std::uint64_t rotate_left(std::uint64_t i, int length) {
    const std::uint64_t mask = (std::uint64_t{1} << length) - 1;
    return ((i << 1) | (i >> (length - 1))) & mask;
}

double sign_of(std::uint64_t bits) { return (std::popcount(bits) & 1) ? -1.0 : 1.0; }

bool passes_filters(const SectorSpec &s, std::uint64_t i) {
    const int L = s.length;
    if (s.magnetization2 && L - 2 * std::popcount(i) != *s.magnetization2) return false;
    if (s.parity_z && sign_of(i) != *s.parity_z) return false;
    if (s.parity_z_even) {
        std::uint64_t even = 0;
        for (int j = 0; j < L; j += 2) even |= std::uint64_t{1} << j;
        if (sign_of(i & even) != *s.parity_z_even) return false;
    }
    if (s.zero_semilocal_charge) {
        int total = 0;
        for (int l = 0; l < L; ++l) total += (std::popcount(i & ((std::uint64_t{1} << l) - 1)) & 1) ? -1 : 1;
        if (total != 0) return false;
    }
    return true;
}

void check_parity(const std::optional<int> &p, const char *name) {
    if (p && *p != 1 && *p != -1) throw InvalidArgument(fmt::format("{} must be +1 or -1", name));
}

} // namespace

std::string describe(const SectorSpec &s) {
    std::string out = fmt::format("L={}", s.length);
    if (s.magnetization2) out += fmt::format(" m={}", *s.magnetization2 / 2.0);
    if (s.momentum) out += fmt::format(" k={}", *s.momentum);
    if (s.parity_x) out += fmt::format(" Px={:+d}", *s.parity_x);
    if (s.parity_z) out += fmt::format(" Pz={:+d}", *s.parity_z);
    if (s.parity_z_even) out += fmt::format(" Pz_even={:+d}", *s.parity_z_even);
    if (s.zero_semilocal_charge) out += " semilocal=0";
    return out;
}

SectorBasis build_sector_basis(const SectorSpec &spec) {
    const int L = spec.length;
    if (L < 1 || L > 20) throw InvalidArgument(fmt::format("sector basis limited to 1 <= L <= 20, got {}", L));
    if (spec.momentum && (*spec.momentum < 0 || *spec.momentum >= L))
        throw InvalidArgument(fmt::format("momentum {} outside [0, {})", *spec.momentum, L));
    check_parity(spec.parity_x, "parity_x");
    check_parity(spec.parity_z, "parity_z");
    check_parity(spec.parity_z_even, "parity_z_even");

    const std::uint64_t dim = std::uint64_t{1} << L;
    const std::uint64_t all = dim - 1;
    const int shifts = spec.momentum ? L : 1;
    const int flips = spec.parity_x ? 2 : 1;
    const double k_phase = spec.momentum ? 2.0 * std::numbers::pi * *spec.momentum / L : 0.0;

    SectorBasis basis;
    basis.spec = spec;
    std::vector<bool> visited(dim, false);
    SparseVector terms;
    for (std::uint64_t r = 0; r < dim; ++r) {
        if (visited[r]) continue;
        // Projector (1/|G|) sum_g chi(g)^* g applied to |r>.
        terms.clear();
        bool pass = passes_filters(spec, r), consistent = true;
        for (int f = 0; f < flips; ++f) {
            std::uint64_t state = f ? (r ^ all) : r;
            const double flip_weight = f ? static_cast<double>(*spec.parity_x) : 1.0;
            for (int s = 0; s < shifts; ++s) {
                visited[state] = true;
                if (passes_filters(spec, state) != pass) consistent = false;
                terms.emplace_back(state, flip_weight * std::polar(1.0, -k_phase * s));
                state = rotate_left(state, L);
            }
        }
        if (!consistent)
            throw InvalidArgument(fmt::format("sector {} is not closed under its own symmetry group", describe(spec)));
        if (!pass) continue;
        std::sort(terms.begin(), terms.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        SparseVector v;
        for (const auto &t : terms) {
            if (!v.empty() && v.back().first == t.first)
                v.back().second += t.second;
            else
                v.push_back(t);
        }
        double n2 = 0.0;
        for (const auto &e : v) n2 += std::norm(e.second);
        if (n2 < 1e-12) continue;
        const double inv = 1.0 / std::sqrt(n2);
        SparseVector normalized;
        for (const auto &e : v)
            if (std::abs(e.second) * inv > 1e-14) normalized.emplace_back(e.first, e.second * inv);
        basis.vectors.push_back(std::move(normalized));
    }
    return basis;
}

SectorMatrix sector_matrix(const HamiltonianSpec &h, const SectorBasis &basis) {
    if (h.length != basis.spec.length)
        throw InvalidArgument(fmt::format("Hamiltonian on {} sites, sector on {}", h.length, basis.spec.length));
    if (basis.spec.momentum && h.boundary != Boundary::periodic)
        throw InvalidArgument("momentum sectors require a periodic Hamiltonian");
    const CompiledOperator op(h);
    const std::size_t n = basis.dimension();
    const std::uint64_t dim = std::uint64_t{1} << h.length;
    std::vector<std::int32_t> owner(dim, -1);
    std::vector<cplx> coef(dim);
    for (std::size_t j = 0; j < n; ++j)
        for (const auto &[i, a] : basis.vectors[j]) {
            owner[i] = static_cast<std::int32_t>(j);
            coef[i] = a;
        }

    SectorMatrix out;
    out.matrix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> leak(n, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < n; ++j) {
        const SparseVector image = apply_sparse(op, basis.vectors[j]);
        for (const auto &[i, a] : image) {
            const std::int32_t o = owner[i];
            if (o >= 0) out.matrix(o, static_cast<Eigen::Index>(j)) += std::conj(coef[i]) * a;
        }
        double r = 0.0;
        for (const auto &[i, a] : image) {
            const std::int32_t o = owner[i];
            const cplx projected = o >= 0 ? out.matrix(o, static_cast<Eigen::Index>(j)) * coef[i] : cplx{};
            r += std::norm(a - projected);
        }
        leak[j] = std::sqrt(r);
    }
    for (double l : leak) out.leakage = std::max(out.leakage, l);
    const double scale = std::max(1.0, op.coefficient_norm());
    if (out.leakage > 1e-10 * scale)
        throw InvariantViolation(fmt::format("sector {} is not invariant under {}: leakage {:.3e}",
                                             describe(basis.spec), h.label, out.leakage));
    const double asym = n == 0 ? 0.0 : (out.matrix - out.matrix.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw InvariantViolation(fmt::format("sector matrix not Hermitian (deviation {:.3e})", asym));
    return out;
}

SectorSpectrum sector_spectrum(const HamiltonianSpec &h, const SectorSpec &spec) {
    const SectorBasis basis = build_sector_basis(spec);
    const SectorMatrix m = sector_matrix(h, basis);
    SectorSpectrum s;
    s.sector = spec;
    s.leakage = m.leakage;
    if (basis.dimension() == 0) return s;
    const Eigen::MatrixXcd herm = (m.matrix + m.matrix.adjoint()) / 2.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
    s.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
    return s;
}

Unfolded unfold(std::vector<double> eigenvalues, const UnfoldOptions &opt) {
    if (opt.degree < 1) throw InvalidArgument("unfolding degree must be positive");
    if (!(opt.trim_fraction >= 0.0 && opt.trim_fraction < 0.5)) throw InvalidArgument("trim fraction outside [0, 0.5)");
    std::sort(eigenvalues.begin(), eigenvalues.end());
    const auto n = static_cast<std::ptrdiff_t>(eigenvalues.size());
    const auto trim = static_cast<std::ptrdiff_t>(std::floor(opt.trim_fraction * static_cast<double>(n)));
    const std::ptrdiff_t lo = trim, hi = n - trim; // kept levels [lo, hi)
    const std::ptrdiff_t kept = hi - lo;
    if (kept < opt.degree + 2)
        throw InvalidArgument(fmt::format("{} levels after trimming are too few to unfold", kept));

    const double e_lo = eigenvalues[lo], e_hi = eigenvalues[hi - 1];
    const double center = (e_lo + e_hi) / 2, half = std::max((e_hi - e_lo) / 2, 1e-300);
    Eigen::MatrixXd a(kept, opt.degree + 1);
    Eigen::VectorXd b(kept);
    for (std::ptrdiff_t i = 0; i < kept; ++i) {
        const double x = (eigenvalues[lo + i] - center) / half;
        double p = 1.0;
        for (int d = 0; d <= opt.degree; ++d, p *= x) a(i, d) = p;
        b[i] = static_cast<double>(lo + i);
    }
    const Eigen::VectorXd coeff = a.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd unfolded = a * coeff;

    Unfolded out;
    out.few_levels = kept < 200;
    for (std::ptrdiff_t i = 0; i + 1 < kept; ++i) {
        out.spacings.push_back(unfolded[i + 1] - unfolded[i]);
        if (eigenvalues[lo + i + 1] - eigenvalues[lo + i] < 1e-12) ++out.zero_spacings;
    }
    return out;
}

GapRatio mean_gap_ratio(std::vector<double> eigenvalues, double merge_below) {
    std::sort(eigenvalues.begin(), eigenvalues.end());
    GapRatio g;
    std::vector<double> levels;
    for (double e : eigenvalues) {
        if (!levels.empty() && e - levels.back() < merge_below) {
            ++g.merged_degeneracies;
            continue;
        }
        levels.push_back(e);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 2 < levels.size(); ++i) {
        const double d1 = levels[i + 1] - levels[i], d2 = levels[i + 2] - levels[i + 1];
        sum += std::min(d1, d2) / std::max(d1, d2);
        ++g.count;
    }
    g.mean = g.count ? sum / static_cast<double>(g.count) : 0.0;
    return g;
}

double poisson_cdf(double s) { return s <= 0 ? 0.0 : 1.0 - std::exp(-s); }

double wigner_cdf(double s) { return s <= 0 ? 0.0 : 1.0 - std::exp(-std::numbers::pi * s * s / 4.0); }

double ks_distance(std::vector<double> samples, double (*cdf)(double)) {
    if (samples.empty()) throw InvalidArgument("no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(static_cast<double>(i) / n - f)});
    }
    return d;
}

SpacingStats spacing_stats(const Unfolded &unfolded, const std::vector<double> &raw_eigenvalues) {
    if (unfolded.spacings.empty()) throw InvalidArgument("no spacings");
    SpacingStats st;
    st.sorted_spacings = unfolded.spacings;
    for (double &s : st.sorted_spacings) s = std::max(s, 0.0);
    std::sort(st.sorted_spacings.begin(), st.sorted_spacings.end());
    const double n = static_cast<double>(st.sorted_spacings.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < st.sorted_spacings.size(); ++i) {
        st.cdf.push_back(static_cast<double>(i + 1) / n);
        sum += st.sorted_spacings[i];
    }
    st.mean_spacing = sum / n;
    st.ks_poisson = ks_distance(st.sorted_spacings, poisson_cdf);
    st.ks_wigner = ks_distance(st.sorted_spacings, wigner_cdf);
    st.gap_ratio = mean_gap_ratio(raw_eigenvalues);
    st.zero_spacings = unfolded.zero_spacings;
    return st;
}

std::vector<double> poisson_levels(std::size_t n, std::mt19937_64 &rng) {
    std::exponential_distribution<double> gap(1.0);
    std::vector<double> levels(n);
    double e = 0.0;
    for (auto &l : levels) {
        e += gap(rng);
        l = e;
    }
    return levels;
}

std::vector<double> goe_levels(std::size_t n, std::mt19937_64 &rng) {
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = gauss(rng);
    const Eigen::MatrixXd h = (a + a.transpose()) / 2.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    return {eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size()};
}

DualityReport duality_spectrum_check(const TransistorParams &p, int length, double tolerance) {
    if (length < 4 || length > 14 || length % 2)
        throw InvalidArgument(fmt::format("duality check needs even 4 <= L <= 14, got {}", length));
    if (p.Delta != 0.0) throw InvalidArgument("the dual model has no Delta coupling; duality check requires Delta = 0");
    DualityReport r;
    r.sigma_sector = {length, std::nullopt, 0, std::nullopt, 1, (length / 2) % 2 ? -1 : 1, true};
    r.tau_sector = {length, 0, 0, 1, std::nullopt, std::nullopt, false};
    const auto sigma = sector_spectrum(build_h1(p, length, Boundary::periodic), r.sigma_sector);
    const auto tau =
        sector_spectrum(build_h_tau({p.J, p.gamma, p.w, p.Dz, p.hz}, length, Boundary::periodic), r.tau_sector);
    r.sigma_dimension = sigma.dimension();
    r.tau_dimension = tau.dimension();
    r.sigma_leakage = sigma.leakage;
    r.tau_leakage = tau.leakage;
    if (r.sigma_dimension != r.tau_dimension || r.sigma_dimension == 0) {
        r.spectra_match = false;
        r.max_deviation = std::numeric_limits<double>::infinity();
        return r;
    }
    for (std::size_t i = 0; i < r.sigma_dimension; ++i)
        r.max_deviation = std::max(r.max_deviation, std::abs(sigma.eigenvalues[i] - tau.eigenvalues[i]));
    r.spectra_match = r.max_deviation <= tolerance;
    return r;
}

} // namespace scarcat
