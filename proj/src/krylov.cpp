#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "scarcat/errors.hpp"
#include "scarcat/state_engine.hpp"

namespace scarcat {

namespace {

using Vec = Eigen::VectorXcd;

// Orthonormal Lanczos basis and tridiagonal projection of H on span{v, Hv, ...}.
struct LanczosBasis {
    std::vector<Vec> vectors;
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta; // beta[j] couples vectors j and j+1
    double residual_beta = 0.0; // coupling to the first discarded vector
    bool exact = false;         // invariant subspace found
};

LanczosBasis lanczos(const CompiledOperator &h, const Vec &start, int max_dim) {
    LanczosBasis b;
    const Eigen::Index dim = start.size();
    max_dim = static_cast<int>(std::min<Eigen::Index>(max_dim, dim));
    b.alpha.resize(max_dim);
    b.beta.resize(max_dim);
    b.vectors.push_back(start);
    Vec w(dim);
    for (int j = 0; j < max_dim; ++j) {
        h.apply(std::span<const cplx>(b.vectors[j].data(), dim), std::span<cplx>(w.data(), dim));
        b.alpha[j] = b.vectors[j].dot(w).real();
        // Full re-orthogonalization (two passes).
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k <= j; ++k) w -= b.vectors[k].dot(w) * b.vectors[k];
        const double beta = w.norm();
        b.beta[j] = beta;
        if (beta < 1e-13 * std::max(1.0, std::abs(b.alpha[j]))) {
            b.alpha.conservativeResize(j + 1);
            b.beta.conservativeResize(j + 1);
            b.residual_beta = 0.0;
            b.exact = true;
            return b;
        }
        if (j + 1 == max_dim) {
            b.residual_beta = beta;
            b.exact = max_dim == dim;
            return b;
        }
        b.vectors.push_back(w / beta);
    }
    return b;
}

} // namespace

Evolved evolve_krylov(const HamiltonianSpec &h, const StateVector &state, double t, const KrylovOptions &opt) {
    return evolve_krylov(CompiledOperator(h), state, t, opt);
}

Evolved evolve_krylov(const CompiledOperator &h, const StateVector &state, double t, const KrylovOptions &opt) {
    if (h.length() != state.length())
        throw InvalidArgument(fmt::format("Hamiltonian on {} sites, state on {}", h.length(), state.length()));
    if (!std::isfinite(t)) throw InvalidArgument("evolution time is not finite");
    if (opt.dimension < 2) throw InvalidArgument("Krylov dimension must be at least 2");
    if (!(opt.tolerance > 0)) throw InvalidArgument("Krylov tolerance must be positive");

    EvolutionReport report;
    report.method = EvolutionMethod::krylov;
    const double e0 = expectation(state, h);
    if (t == 0.0) return {state, report};

    const Eigen::Index dim = static_cast<Eigen::Index>(state.dimension());
    Vec v = Eigen::Map<const Vec>(state.amplitudes().data(), dim);
    const double total = std::abs(t);
    const double sign = t > 0 ? 1.0 : -1.0;
    double done = 0.0;

    while (done < total) {
        if (report.steps >= opt.max_steps)
            throw ConvergenceError(fmt::format("Krylov evolution exceeded {} steps at t={}", opt.max_steps, done),
                                   report.max_residual);
        const double vnorm = v.norm();
        const LanczosBasis basis = lanczos(h, v / vnorm, opt.dimension);
        const Eigen::Index m = basis.alpha.size();
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            tri(j, j) = basis.alpha[j];
            if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = basis.beta[j];
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tri);
        const Eigen::VectorXd &lambda = eig.eigenvalues();
        const Eigen::MatrixXd &q = eig.eigenvectors();

        auto coefficients = [&](double tau) {
            Eigen::VectorXcd phase(m);
            for (Eigen::Index k = 0; k < m; ++k) phase[k] = std::polar(q(0, k), -sign * lambda[k] * tau);
            return Eigen::VectorXcd(q.cast<cplx>() * phase);
        };

        double tau = total - done;
        Eigen::VectorXcd c;
        double err = 0.0;
        for (;;) {
            c = coefficients(tau);
            err = basis.exact ? 0.0 : basis.residual_beta * std::abs(c[m - 1]);
            if (err <= opt.tolerance * tau / total) break;
            tau *= 0.5;
            if (tau < 1e-14 * total)
                throw ConvergenceError(fmt::format("Krylov step size underflow at t={} (residual {:.3e})", done, err),
                                       err);
        }
        Vec next = Vec::Zero(dim);
        for (Eigen::Index k = 0; k < m; ++k) next += c[k] * basis.vectors[k];
        v = vnorm * next;
        done = (total - done - tau) <= 1e-15 * total ? total : done + tau;
        report.steps += 1;
        report.max_residual = std::max(report.max_residual, err);
    }

    std::vector<cplx> amps(v.data(), v.data() + dim);
    report.norm_drift = std::abs(v.norm() - 1.0);
    StateVector out(state.length(), std::move(amps), state.time() + t);
    report.energy_drift = std::abs(expectation(out, h) - e0);
    return {std::move(out), report};
}

} // namespace scarcat
