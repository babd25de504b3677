#include "scarcat/pauli_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "json.hpp"
#include "scarcat/errors.hpp"
#include "scarcat/parallel.hpp"

namespace scarcat {

namespace {

void require_finite(double v, const char *name) {
    if (!std::isfinite(v)) throw InvalidArgument(fmt::format("parameter {} is not finite", name));
}

void require_length(int length, int minimum, const char *what) {
    if (length < minimum || length > max_chain_length)
        throw InvalidArgument(fmt::format("{}: chain length {} outside [{}, {}]", what, length, minimum,
                                          max_chain_length));
}

int wrap(int site, int length) { return ((site % length) + length) % length; }

// Appends coefficient * prod factors, sorting the factors by site. Zero
// coefficients are dropped.
void add_term(std::vector<PauliTerm> &terms, double coefficient, std::vector<PauliFactor> factors) {
    if (coefficient == 0.0) return;
    std::sort(factors.begin(), factors.end(),
              [](const PauliFactor &a, const PauliFactor &b) { return a.site < b.site; });
    terms.push_back({coefficient, std::move(factors)});
}

double popcount_sign(std::uint64_t bits) { return (std::popcount(bits) & 1) ? -1.0 : 1.0; }

} // namespace

SparseVector apply_sparse(const CompiledOperator &op, const SparseVector &in) {
    SparseVector out;
    out.reserve(in.size() * op.terms().size());
    for (const auto &[index, amp] : in)
        for (const auto &t : op.terms())
            out.emplace_back(index ^ t.flip_mask, t.scalar * popcount_sign(index & t.phase_mask) * amp);
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    SparseVector merged;
    for (const auto &e : out) {
        if (!merged.empty() && merged.back().first == e.first)
            merged.back().second += e.second;
        else
            merged.push_back(e);
    }
    return merged;
}

char axis_name(Axis a) {
    switch (a) {
    case Axis::x: return 'x';
    case Axis::y: return 'y';
    case Axis::z: return 'z';
    }
    return '?';
}

Axis parse_axis(char c) {
    switch (c) {
    case 'x': return Axis::x;
    case 'y': return Axis::y;
    case 'z': return Axis::z;
    default: throw InvalidArgument(fmt::format("unknown Pauli axis '{}'", c));
    }
}

std::string boundary_name(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary parse_boundary(const std::string &s) {
    if (s == "open") return Boundary::open;
    if (s == "periodic") return Boundary::periodic;
    throw InvalidArgument(fmt::format("unknown boundary '{}' (expected open or periodic)", s));
}

void validate(const HamiltonianSpec &h) {
    require_length(h.length, 1, "operator");
    for (const auto &t : h.terms) {
        if (!std::isfinite(t.coefficient)) throw InvalidArgument("term coefficient is not finite");
        std::uint64_t seen = 0;
        for (const auto &f : t.factors) {
            if (f.site < 0 || f.site >= h.length)
                throw InvalidArgument(fmt::format("site {} outside chain of length {}", f.site, h.length));
            const std::uint64_t bit = std::uint64_t{1} << f.site;
            if (seen & bit) throw InvalidArgument(fmt::format("site {} repeated within a term", f.site));
            seen |= bit;
        }
    }
}

std::string to_text(const HamiltonianSpec &h) {
    nlohmann::ordered_json doc;
    doc["label"] = h.label;
    doc["length"] = h.length;
    doc["boundary"] = boundary_name(h.boundary);
    doc["terms"] = nlohmann::ordered_json::array();
    for (const auto &t : h.terms) {
        nlohmann::ordered_json term;
        term["coefficient"] = t.coefficient;
        term["factors"] = nlohmann::ordered_json::array();
        for (const auto &f : t.factors)
            term["factors"].push_back(nlohmann::ordered_json::array({f.site, std::string(1, axis_name(f.axis))}));
        doc["terms"].push_back(std::move(term));
    }
    return doc.dump(2) + "\n";
}

HamiltonianSpec from_text(const std::string &text) {
    HamiltonianSpec h;
    try {
        const auto doc = nlohmann::json::parse(text);
        h.label = doc.at("label").get<std::string>();
        h.length = doc.at("length").get<int>();
        h.boundary = parse_boundary(doc.at("boundary").get<std::string>());
        for (const auto &term : doc.at("terms")) {
            PauliTerm t;
            t.coefficient = term.at("coefficient").get<double>();
            for (const auto &f : term.at("factors")) {
                const auto axis = f.at(1).get<std::string>();
                if (axis.size() != 1) throw InvalidArgument(fmt::format("bad axis '{}'", axis));
                t.factors.push_back({f.at(0).get<int>(), parse_axis(axis[0])});
            }
            h.terms.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(fmt::format("malformed operator document: {}", e.what()));
    }
    validate(h);
    return h;
}

CompiledOperator::CompiledOperator(const HamiltonianSpec &h) : length_(h.length) {
    validate(h);
    std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> merged;
    for (const auto &t : h.terms) {
        std::uint64_t flip = 0, phase = 0;
        int ny = 0;
        for (const auto &f : t.factors) {
            const std::uint64_t bit = std::uint64_t{1} << f.site;
            if (f.axis != Axis::z) flip |= bit;
            if (f.axis != Axis::x) phase |= bit;
            if (f.axis == Axis::y) ++ny;
        }
        static const cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        merged[{flip, phase}] += t.coefficient * i_pow[ny % 4];
    }
    for (const auto &[masks, scalar] : merged) {
        if (scalar == cplx{}) continue;
        terms_.push_back({masks.first, masks.second, scalar});
        if (groups_.empty() || groups_.back().flip_mask != masks.first) groups_.push_back({masks.first, {}});
        groups_.back().phases.emplace_back(masks.second, scalar);
    }
}

bool CompiledOperator::is_diagonal() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term &t) { return t.flip_mask == 0; });
}

void CompiledOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
    const std::int64_t dim = std::int64_t{1} << length_;
    if (static_cast<std::int64_t>(in.size()) != dim || static_cast<std::int64_t>(out.size()) != dim)
        throw InvalidArgument(fmt::format("operator on {} sites applied to vector of size {}", length_, in.size()));
#pragma omp parallel for schedule(static) if (dim > 4096)
    for (std::int64_t j = 0; j < dim; ++j) {
        cplx acc{};
        for (const auto &g : groups_) {
            const std::uint64_t src = static_cast<std::uint64_t>(j) ^ g.flip_mask;
            cplx coeff{};
            for (const auto &[phase, scalar] : g.phases) coeff += popcount_sign(src & phase) * scalar;
            acc += coeff * in[src];
        }
        out[j] = acc;
    }
}

std::vector<cplx> CompiledOperator::apply(std::span<const cplx> in) const {
    std::vector<cplx> out(in.size());
    apply(in, out);
    return out;
}

double CompiledOperator::coefficient_norm() const {
    double s = 0.0;
    for (const auto &t : terms_) s += std::abs(t.scalar);
    return s;
}

Eigen::MatrixXcd dense_matrix(const HamiltonianSpec &h) {
    if (h.length > 12) throw InvalidArgument(fmt::format("dense matrix requested for L={} > 12", h.length));
    const CompiledOperator op(h);
    const std::int64_t dim = std::int64_t{1} << h.length;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i)
        for (const auto &t : op.terms()) {
            const auto col = static_cast<std::uint64_t>(i);
            m(static_cast<std::int64_t>(col ^ t.flip_mask), i) += t.scalar * popcount_sign(col & t.phase_mask);
        }
    return m;
}

HamiltonianSpec build_h1(const TransistorParams &p, int length, Boundary boundary) {
    require_length(length, 3, "build_h1");
    for (auto [v, n] : {std::pair{p.J, "J"}, {p.gamma, "gamma"}, {p.w, "w"}, {p.Delta, "Delta"}, {p.Dz, "Dz"},
                        {p.hz, "hz"}})
        require_finite(v, n);

    // Coefficients of sigma^a_{l-1} sigma^b_{l+1} in J s.S.s + D.(s x s).
    const std::pair<std::pair<Axis, Axis>, double> pairs[] = {
        {{Axis::x, Axis::x}, p.J * (1 + p.gamma) / 2}, {{Axis::y, Axis::y}, p.J * (1 - p.gamma) / 2},
        {{Axis::x, Axis::y}, p.J * p.w + p.Dz},        {{Axis::y, Axis::x}, p.J * p.w - p.Dz},
        {{Axis::z, Axis::z}, p.J * p.Delta},
    };

    HamiltonianSpec h{length, boundary, {}, "h1"};
    const int first = boundary == Boundary::open ? 1 : 0;
    const int last = boundary == Boundary::open ? length - 2 : length - 1;
    for (int l = first; l <= last; ++l) {
        const int left = wrap(l - 1, length), right = wrap(l + 1, length);
        for (const auto &[axes, c] : pairs) {
            add_term(h.terms, c / 8, {{left, axes.first}, {right, axes.second}});
            add_term(h.terms, -c / 8, {{left, axes.first}, {l, Axis::z}, {right, axes.second}});
        }
    }
    for (int l = 0; l < length; ++l) add_term(h.terms, -p.hz / 2, {{l, Axis::z}});
    return h;
}

HamiltonianSpec build_h2(const PairwiseParams &p, int length, Boundary boundary) {
    require_length(length, 2, "build_h2");
    const std::vector<double> *lists[] = {&p.J, &p.gamma_x, &p.gamma_y, &p.gamma_z, &p.D_x, &p.D_y, &p.D_z};
    std::size_t r_max = 0;
    for (const auto *l : lists) {
        r_max = std::max(r_max, l->size());
        for (double v : *l) require_finite(v, "coupling");
    }
    require_finite(p.hz, "hz");
    if (static_cast<int>(r_max) >= length)
        throw InvalidArgument(fmt::format("coupling range {} must be smaller than chain length {}", r_max, length));
    auto at = [](const std::vector<double> &v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };

    HamiltonianSpec h{length, boundary, {}, "h2"};
    // x/y fields accumulated per site so that single flips out of |up> cancel
    // exactly, including next to open edges.
    std::vector<double> hx(length, 0.0), hy(length, 0.0);
    for (std::size_t ri = 0; ri < r_max; ++ri) {
        const int r = static_cast<int>(ri) + 1;
        const double J = at(p.J, ri), gx = at(p.gamma_x, ri), gy = at(p.gamma_y, ri), gz = at(p.gamma_z, ri);
        const double dx = at(p.D_x, ri), dy = at(p.D_y, ri), dz = at(p.D_z, ri);
        const std::pair<std::pair<Axis, Axis>, double> pairs[] = {
            {{Axis::x, Axis::x}, J},
            {{Axis::y, Axis::y}, J},
            {{Axis::z, Axis::z}, J * (1 + gz)},
            {{Axis::x, Axis::z}, J * gx / 2 - dy},
            {{Axis::z, Axis::x}, J * gx / 2 + dy},
            {{Axis::y, Axis::z}, J * gy / 2 + dx},
            {{Axis::z, Axis::y}, J * gy / 2 - dx},
            {{Axis::x, Axis::y}, dz},
            {{Axis::y, Axis::x}, -dz},
        };
        const int pair_count = boundary == Boundary::open ? length - r : length;
        for (int l = 0; l < pair_count; ++l) {
            const int m = wrap(l + r, length);
            for (const auto &[axes, c] : pairs) add_term(h.terms, c / 4, {{l, axes.first}, {m, axes.second}});
            hx[l] += (J * gx / 2 - dy) / 2;
            hx[m] += (J * gx / 2 + dy) / 2;
            hy[l] += (J * gy / 2 + dx) / 2;
            hy[m] += (J * gy / 2 - dx) / 2;
        }
    }
    for (int l = 0; l < length; ++l) {
        add_term(h.terms, -hx[l] / 2, {{l, Axis::x}});
        add_term(h.terms, -hy[l] / 2, {{l, Axis::y}});
        add_term(h.terms, -p.hz / 2, {{l, Axis::z}});
    }
    return h;
}

HamiltonianSpec build_h0(IsingVariant variant, const IsingParams &p, int length, Boundary boundary) {
    require_length(length, boundary == Boundary::periodic ? 3 : 2, "build_h0");
    require_finite(p.h0z, "h0z");
    require_finite(p.h0x, "h0x");
    HamiltonianSpec h{length, boundary, {}, variant == IsingVariant::ising ? "h0_ising" : "h0_tilted_ising"};
    const int bonds = boundary == Boundary::open ? length - 1 : length;
    for (int l = 0; l < bonds; ++l) add_term(h.terms, -0.25, {{l, Axis::x}, {wrap(l + 1, length), Axis::x}});
    for (int l = 0; l < length; ++l) {
        add_term(h.terms, -0.25 * p.h0z, {{l, Axis::z}});
        if (variant == IsingVariant::tilted_ising) add_term(h.terms, -0.25 * p.h0x, {{l, Axis::x}});
    }
    return h;
}

HamiltonianSpec build_h_tau(const DualParams &p, int length, Boundary boundary) {
    require_length(length, 4, "build_h_tau");
    for (auto [v, n] : {std::pair{p.J, "J"}, {p.gamma, "gamma"}, {p.w, "w"}, {p.Dz, "Dz"}, {p.hz, "hz"}})
        require_finite(v, n);
    HamiltonianSpec h{length, boundary, {}, "h_tau"};
    const bool open = boundary == Boundary::open;
    // On an open chain every string that would wrap is dropped.
    auto fits = [&](int lo, int hi) { return !open || (lo >= 0 && hi < length); };
    for (int l = 0; l < length; ++l) {
        const int m1 = wrap(l - 1, length), a = l, b = wrap(l + 1, length), p2 = wrap(l + 2, length);
        if (!fits(l, l + 1)) continue;
        for (Axis ax : {Axis::x, Axis::y}) {
            add_term(h.terms, p.J * (1 + p.gamma) / 16, {{a, ax}, {b, ax}});
            if (fits(l - 1, l + 2))
                add_term(h.terms, p.J * (1 - p.gamma) / 16, {{m1, Axis::z}, {a, ax}, {b, ax}, {p2, Axis::z}});
        }
        if (fits(l, l + 2)) {
            add_term(h.terms, (p.Dz + p.J * p.w) / 8, {{a, Axis::x}, {b, Axis::y}, {p2, Axis::z}});
            add_term(h.terms, -(p.Dz + p.J * p.w) / 8, {{a, Axis::y}, {b, Axis::x}, {p2, Axis::z}});
        }
        if (fits(l - 1, l + 1)) {
            add_term(h.terms, (p.Dz - p.J * p.w) / 8, {{m1, Axis::z}, {a, Axis::x}, {b, Axis::y}});
            add_term(h.terms, -(p.Dz - p.J * p.w) / 8, {{m1, Axis::z}, {a, Axis::y}, {b, Axis::x}});
        }
        add_term(h.terms, -p.hz / 2, {{a, Axis::z}, {b, Axis::z}});
    }
    return h;
}

SemilocalCharge semilocal_charge(int length) {
    require_length(length, 1, "semilocal_charge");
    SemilocalCharge q;
    q.sum = {length, Boundary::open, {}, "semilocal_charge"};
    for (int l = 0; l < length; ++l) {
        PauliTerm s{1.0, {}};
        for (int j = 0; j < l; ++j) s.factors.push_back({j, Axis::z});
        q.strings.push_back({l, s});
        s.coefficient = 0.5;
        q.sum.terms.push_back(std::move(s));
    }
    return q;
}

HamiltonianSpec total_sz(int length) {
    require_length(length, 1, "total_sz");
    HamiltonianSpec h{length, Boundary::open, {}, "total_sz"};
    for (int l = 0; l < length; ++l) h.terms.push_back({0.5, {{l, Axis::z}}});
    return h;
}

HamiltonianSpec parity_z(int length) {
    require_length(length, 1, "parity_z");
    PauliTerm t{1.0, {}};
    for (int l = 0; l < length; ++l) t.factors.push_back({l, Axis::z});
    return {length, Boundary::open, {t}, "parity_z"};
}

HamiltonianSpec single_site(int length, int site, Axis axis) {
    require_length(length, 1, "single_site");
    if (site < 0 || site >= length) throw InvalidArgument(fmt::format("site {} outside chain", site));
    return {length, Boundary::open, {{1.0, {{site, axis}}}}, fmt::format("sigma{}_{}", axis_name(axis), site)};
}

double verify_scar(const HamiltonianSpec &h, double tolerance) {
    const CompiledOperator op(h);
    const SparseVector image = apply_sparse(op, {{0, cplx{1.0, 0.0}}});
    cplx energy{};
    double off = 0.0;
    for (const auto &[index, amp] : image) {
        if (index == 0)
            energy = amp;
        else
            off += std::norm(amp);
    }
    const double residual = std::sqrt(off + energy.imag() * energy.imag());
    if (!(residual <= tolerance))
        throw ResidualTooLarge(fmt::format("|up> is not an eigenstate of {}: residual {:.3e}", h.label, residual),
                               residual);
    return energy.real();
}

double commutator_norm(const HamiltonianSpec &a, const HamiltonianSpec &b) {
    if (a.length != b.length)
        throw InvalidArgument(fmt::format("commutator of operators on {} and {} sites", a.length, b.length));
    if (a.length > 16) throw InvalidArgument(fmt::format("commutator_norm limited to L <= 16, got {}", a.length));
    const CompiledOperator ca(a), cb(b);
    const std::int64_t dim = std::int64_t{1} << a.length;
    const double total = detail::chunked_sum<double>(dim, [&](std::int64_t j) {
        const SparseVector e{{static_cast<std::uint64_t>(j), cplx{1.0, 0.0}}};
        const SparseVector ab = apply_sparse(ca, apply_sparse(cb, e));
        const SparseVector ba = apply_sparse(cb, apply_sparse(ca, e));
        // Both images are sorted by index; merge them.
        double s = 0.0;
        std::size_t p = 0, q = 0;
        while (p < ab.size() || q < ba.size()) {
            if (q == ba.size() || (p < ab.size() && ab[p].first < ba[q].first)) {
                s += std::norm(ab[p++].second);
            } else if (p == ab.size() || ba[q].first < ab[p].first) {
                s += std::norm(ba[q++].second);
            } else {
                s += std::norm(ab[p++].second - ba[q++].second);
            }
        }
        return s;
    });
    return std::sqrt(total);
}

} // namespace scarcat
