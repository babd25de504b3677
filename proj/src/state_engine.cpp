#include "scarcat/state_engine.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "scarcat/errors.hpp"
#include "scarcat/parallel.hpp"

namespace scarcat {

namespace {

void check_length(int length, int cap) {
    if (length < 1 || length > cap || length > max_chain_length)
        throw InvalidArgument(fmt::format("chain length {} outside [1, {}]", length, cap));
}

} // namespace

StateVector::StateVector(int length, std::vector<cplx> amplitudes, double time)
    : length_(length), amplitudes_(std::move(amplitudes)), time_(time) {
    if (length < 1 || length > max_chain_length || amplitudes_.size() != (std::size_t{1} << length))
        throw InvalidArgument(
            fmt::format("state of {} amplitudes does not match chain length {}", amplitudes_.size(), length));
    const double n = norm();
    if (!(std::abs(n - 1.0) < 1e-10))
        throw InvariantViolation(fmt::format("state norm {:.15f} deviates from 1", n));
}

double StateVector::norm() const { return vector_norm(amplitudes_); }

std::string StateVector::dump() const {
    std::string out;
    for (std::size_t i = 0; i < amplitudes_.size(); ++i)
        out += fmt::format("{} {:.17g} {:.17g}\n", i, amplitudes_[i].real(), amplitudes_[i].imag());
    return out;
}

double vector_norm(std::span<const cplx> v) {
    return std::sqrt(detail::chunked_sum<double>(static_cast<std::int64_t>(v.size()),
                                                 [&](std::int64_t i) { return std::norm(v[i]); }));
}

cplx inner_product(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.size() != b.size()) throw InvalidArgument("inner product of vectors with different sizes");
    return detail::chunked_sum<cplx>(static_cast<std::int64_t>(a.size()),
                                     [&](std::int64_t i) { return std::conj(a[i]) * b[i]; });
}

StateVector product_state_up(int length, int cap) { return basis_state(length, 0, cap); }

StateVector basis_state(int length, std::uint64_t index, int cap) {
    check_length(length, cap);
    if (index >> length) throw InvalidArgument(fmt::format("basis index {} outside 2^{}", index, length));
    std::vector<cplx> amps(std::size_t{1} << length);
    amps[index] = 1.0;
    return StateVector(length, std::move(amps));
}

StateVector apply_y_rotation(const StateVector &state, int site, double theta) {
    if (site < 0 || site >= state.length())
        throw InvalidArgument(fmt::format("rotation site {} outside chain of length {}", site, state.length()));
    const double c = std::cos(theta), s = std::sin(theta);
    const std::uint64_t bit = std::uint64_t{1} << site;
    std::vector<cplx> out(state.amplitudes().begin(), state.amplitudes().end());
    const auto dim = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static) if (dim > 4096)
    for (std::int64_t i = 0; i < dim; ++i) {
        const auto u = static_cast<std::uint64_t>(i);
        if (u & bit) continue;
        const cplx up = out[u], down = out[u | bit];
        out[u] = c * up - s * down;
        out[u | bit] = s * up + c * down;
    }
    return StateVector(state.length(), std::move(out), state.time());
}

std::vector<cplx> apply_operator(const CompiledOperator &op, const StateVector &state) {
    if (op.length() != state.length())
        throw InvalidArgument(
            fmt::format("operator on {} sites applied to state on {} sites", op.length(), state.length()));
    return op.apply(state.amplitudes());
}

cplx expectation_complex(const StateVector &state, const CompiledOperator &op) {
    if (op.is_diagonal()) {
        if (op.length() != state.length()) throw InvalidArgument("operator and state lengths differ");
        const auto amps = state.amplitudes();
        const auto terms = op.terms();
        return detail::chunked_sum<cplx>(static_cast<std::int64_t>(amps.size()), [&](std::int64_t i) {
            cplx d{};
            for (const auto &t : terms) d += (std::popcount(static_cast<std::uint64_t>(i) & t.phase_mask) & 1) ? -t.scalar : t.scalar;
            return std::norm(amps[i]) * d;
        });
    }
    const auto image = apply_operator(op, state);
    return inner_product(state.amplitudes(), image);
}

double expectation(const StateVector &state, const CompiledOperator &op) {
    const cplx v = expectation_complex(state, op);
    if (std::abs(v.imag()) >= 1e-12)
        throw InvariantViolation(fmt::format("expectation has imaginary part {:.3e}; operator not Hermitian", v.imag()));
    return v.real();
}

std::string method_name(EvolutionMethod m) { return m == EvolutionMethod::krylov ? "krylov" : "trotter"; }

EvolutionMethod parse_method(const std::string &s) {
    if (s == "krylov") return EvolutionMethod::krylov;
    if (s == "trotter") return EvolutionMethod::trotter;
    throw InvalidArgument(fmt::format("unknown evolution method '{}' (expected krylov or trotter)", s));
}

Evolved evolve(const HamiltonianSpec &h, const StateVector &state, double t, const EvolutionSettings &settings) {
    if (settings.method == EvolutionMethod::trotter) return evolve_trotter(h, state, t, settings.trotter);
    return evolve_krylov(h, state, t, settings.krylov);
}

namespace {

// e^{-iEt}|up> combined with the evolved flipped branch.
StateVector combine_branches(double theta, double scar_energy, double t, const StateVector &flipped) {
    std::vector<cplx> amps(flipped.amplitudes().begin(), flipped.amplitudes().end());
    const double s = std::sin(theta);
    for (auto &a : amps) a *= s;
    amps[0] += std::cos(theta) * std::polar(1.0, -scar_energy * t);
    return StateVector(flipped.length(), std::move(amps), t);
}

void merge_report(EvolutionReport &into, const EvolutionReport &r) {
    into.method = r.method;
    into.steps += r.steps;
    into.max_residual = std::max(into.max_residual, r.max_residual);
    into.energy_drift += r.energy_drift;
    into.norm_drift = std::max(into.norm_drift, r.norm_drift);
}

} // namespace

Evolved prepare_protocol_state(const HamiltonianSpec &h, double theta, int site, double t,
                               const std::optional<PreQuench> &pre_quench, const EvolutionSettings &settings) {
    std::vector<EvolutionReport> reports;
    auto states = protocol_time_series(h, theta, site, {t}, pre_quench, settings, &reports);
    return {std::move(states.front()), reports.front()};
}

std::vector<StateVector> protocol_time_series(const HamiltonianSpec &h, double theta, int site,
                                              const std::vector<double> &times,
                                              const std::optional<PreQuench> &pre_quench,
                                              const EvolutionSettings &settings,
                                              std::vector<EvolutionReport> *reports) {
    if (site < 0 || site >= h.length)
        throw InvalidArgument(fmt::format("measurement site {} outside chain of length {}", site, h.length));
    double previous = 0.0;
    for (double t : times) {
        if (!std::isfinite(t) || t < previous)
            throw InvalidArgument("protocol times must be finite, non-negative and non-decreasing");
        previous = t;
    }

    std::vector<StateVector> out;
    EvolutionReport total;
    total.method = settings.method;
    if (pre_quench) {
        if (pre_quench->h0.length != h.length) throw InvalidArgument("pre-quench Hamiltonian length differs");
        auto prepared = evolve(pre_quench->h0, product_state_up(h.length), pre_quench->t0, settings);
        merge_report(total, prepared.report);
        StateVector current = apply_y_rotation(prepared.state, site, theta);
        current.set_time(0.0);
        double now = 0.0;
        for (double t : times) {
            if (t > now) {
                auto step = evolve(h, current, t - now, settings);
                merge_report(total, step.report);
                current = std::move(step.state);
                now = t;
            }
            current.set_time(t);
            out.push_back(current);
            if (reports) reports->push_back(total);
        }
        return out;
    }

    // Only the flipped branch evolves; |up> picks up the phase e^{-iEt}.
    const double energy = verify_scar(h);
    StateVector flipped = basis_state(h.length, std::uint64_t{1} << site);
    double now = 0.0;
    for (double t : times) {
        if (t > now) {
            auto step = evolve(h, flipped, t - now, settings);
            merge_report(total, step.report);
            flipped = std::move(step.state);
            now = t;
        }
        out.push_back(combine_branches(theta, energy, t, flipped));
        if (reports) reports->push_back(total);
    }
    return out;
}

} // namespace scarcat
