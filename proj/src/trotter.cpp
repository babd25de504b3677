#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "scarcat/errors.hpp"
#include "scarcat/state_engine.hpp"

namespace scarcat {

namespace {

// Local Hamiltonian on sites [anchor, anchor + width), bit k of the local
// index corresponding to site anchor + k.
struct Window {
    int anchor = 0;
    Eigen::MatrixXcd h;
    Eigen::VectorXd energies;
    Eigen::MatrixXcd vectors;

    Eigen::MatrixXcd gate(double dt) const {
        Eigen::VectorXcd phase(energies.size());
        for (Eigen::Index k = 0; k < energies.size(); ++k) phase[k] = std::polar(1.0, -energies[k] * dt);
        return vectors * phase.asDiagonal() * vectors.adjoint();
    }
};

void apply_gate(std::vector<cplx> &amps, int anchor, int width, const Eigen::MatrixXcd &gate) {
    const int local_dim = 1 << width;
    const std::uint64_t window_mask = ((std::uint64_t{1} << width) - 1) << anchor;
    const auto dim = static_cast<std::int64_t>(amps.size());
#pragma omp parallel for schedule(static) if (dim > 4096)
    for (std::int64_t i = 0; i < dim; ++i) {
        const auto base = static_cast<std::uint64_t>(i);
        if (base & window_mask) continue;
        cplx in[8], out[8];
        for (int a = 0; a < local_dim; ++a) in[a] = amps[base | (static_cast<std::uint64_t>(a) << anchor)];
        for (int r = 0; r < local_dim; ++r) {
            cplx acc{};
            for (int a = 0; a < local_dim; ++a) acc += gate(r, a) * in[a];
            out[r] = acc;
        }
        for (int r = 0; r < local_dim; ++r) amps[base | (static_cast<std::uint64_t>(r) << anchor)] = out[r];
    }
}

} // namespace

Evolved evolve_trotter(const HamiltonianSpec &h, const StateVector &state, double t, const TrotterOptions &opt) {
    if (h.length != state.length())
        throw InvalidArgument(fmt::format("Hamiltonian on {} sites, state on {}", h.length, state.length()));
    if (!std::isfinite(t)) throw InvalidArgument("evolution time is not finite");
    if (!(opt.dt > 0)) throw InvalidArgument("Trotter step must be positive");
    if (h.boundary == Boundary::periodic)
        throw InvalidArgument("Trotter evolution supports open chains only; use the krylov method");
    validate(h);

    int width = 1;
    for (const auto &term : h.terms)
        if (!term.factors.empty())
            width = std::max(width, term.factors.back().site - term.factors.front().site + 1);
    if (width > 3)
        throw InvalidArgument(
            fmt::format("{} has terms spanning {} sites; Trotter gates cover at most 3, use the krylov method",
                        h.label, width));
    width = std::min(width, h.length);

    // Assign each term to the window anchored at min(first site, L - width).
    std::map<int, HamiltonianSpec> local;
    for (const auto &term : h.terms) {
        const int first = term.factors.empty() ? 0 : term.factors.front().site;
        const int anchor = std::min(first, h.length - width);
        auto &spec = local[anchor];
        spec.length = width;
        PauliTerm shifted{term.coefficient, {}};
        for (const auto &f : term.factors) shifted.factors.push_back({f.site - anchor, f.axis});
        spec.terms.push_back(std::move(shifted));
    }
    std::vector<std::vector<Window>> layers(static_cast<std::size_t>(width));
    for (const auto &[anchor, spec] : local) {
        Window w;
        w.anchor = anchor;
        w.h = dense_matrix(spec);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(w.h);
        w.energies = eig.eigenvalues();
        w.vectors = eig.eigenvectors();
        layers[static_cast<std::size_t>(anchor % width)].push_back(std::move(w));
    }
    layers.erase(std::remove_if(layers.begin(), layers.end(), [](const auto &l) { return l.empty(); }), layers.end());

    EvolutionReport report;
    report.method = EvolutionMethod::trotter;
    const CompiledOperator compiled(h);
    const double e0 = expectation(state, compiled);
    std::vector<cplx> amps(state.amplitudes().begin(), state.amplitudes().end());

    const int steps = t == 0.0 ? 0 : static_cast<int>(std::ceil(std::abs(t) / opt.dt - 1e-9));
    if (steps > 0 && !layers.empty()) {
        const double dt = t / steps;
        // Gates for half and full steps, computed once.
        std::vector<std::vector<Eigen::MatrixXcd>> half(layers.size()), full(layers.size());
        for (std::size_t l = 0; l < layers.size(); ++l)
            for (const auto &w : layers[l]) {
                half[l].push_back(w.gate(dt / 2));
                full[l].push_back(w.gate(dt));
            }
        const std::size_t last = layers.size() - 1;
        auto sweep = [&](std::size_t l, const std::vector<std::vector<Eigen::MatrixXcd>> &gates) {
            for (std::size_t g = 0; g < layers[l].size(); ++g) apply_gate(amps, layers[l][g].anchor, width, gates[l][g]);
        };
        for (int s = 0; s < steps; ++s) {
            for (std::size_t l = 0; l < last; ++l) sweep(l, half);
            sweep(last, full);
            for (std::size_t l = last; l-- > 0;) sweep(l, half);
        }
    }
    report.steps = steps;
    report.norm_drift = std::abs(vector_norm(amps) - 1.0);
    StateVector out(state.length(), std::move(amps), state.time() + t);
    report.energy_drift = std::abs(expectation(out, compiled) - e0);
    return {std::move(out), report};
}

} // namespace scarcat
