#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scarcat/pauli_model.hpp"

namespace scarcat {

inline constexpr int default_state_cap = 24;

// Dense amplitude vector over the 2^L computational basis (bit j set = site j down).
class StateVector {
public:
    StateVector() = default;
    // Takes ownership of `amplitudes`; throws InvariantViolation unless the
    // norm is 1 within 1e-10.
    StateVector(int length, std::vector<cplx> amplitudes, double time = 0.0);

    int length() const { return length_; }
    std::size_t dimension() const { return amplitudes_.size(); }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    std::span<const cplx> amplitudes() const { return amplitudes_; }
    const cplx &operator[](std::size_t i) const { return amplitudes_[i]; }

    double norm() const;

    // Text dump "index re im" per line, for debugging only.
    std::string dump() const;

private:
    int length_ = 0;
    std::vector<cplx> amplitudes_;
    double time_ = 0.0;
};

double vector_norm(std::span<const cplx> v);
cplx inner_product(std::span<const cplx> a, std::span<const cplx> b); // <a|b>

StateVector product_state_up(int length, int cap = default_state_cap);
StateVector basis_state(int length, std::uint64_t index, int cap = default_state_cap);

// exp(i theta sigma^y) with the orientation |up> -> cos|up> + sin|down>.
StateVector apply_y_rotation(const StateVector &state, int site, double theta);

// Unnormalized H|psi>.
std::vector<cplx> apply_operator(const CompiledOperator &op, const StateVector &state);

// <psi|O|psi>. The real-valued overload requires |Im| < 1e-12.
cplx expectation_complex(const StateVector &state, const CompiledOperator &op);
double expectation(const StateVector &state, const CompiledOperator &op);

enum class EvolutionMethod { krylov, trotter };
std::string method_name(EvolutionMethod m);
EvolutionMethod parse_method(const std::string &s);

struct EvolutionReport {
    EvolutionMethod method = EvolutionMethod::krylov;
    int steps = 0;
    double max_residual = 0.0;
    double energy_drift = 0.0;
    double norm_drift = 0.0;
};

struct KrylovOptions {
    int dimension = 30;
    double tolerance = 1e-10;
    int max_steps = 100000;
};

struct TrotterOptions {
    double dt = 0.01;
};

struct Evolved {
    StateVector state;
    EvolutionReport report;
};

Evolved evolve_krylov(const CompiledOperator &h, const StateVector &state, double t, const KrylovOptions &opt = {});
Evolved evolve_krylov(const HamiltonianSpec &h, const StateVector &state, double t, const KrylovOptions &opt = {});

// Second-order symmetric splitting into layers of commuting gates acting on
// windows of at most three neighbouring sites. Open chains only.
Evolved evolve_trotter(const HamiltonianSpec &h, const StateVector &state, double t, const TrotterOptions &opt = {});

struct EvolutionSettings {
    EvolutionMethod method = EvolutionMethod::krylov;
    KrylovOptions krylov;
    TrotterOptions trotter;
};

Evolved evolve(const HamiltonianSpec &h, const StateVector &state, double t, const EvolutionSettings &settings = {});

struct PreQuench {
    HamiltonianSpec h0;
    double t0 = 0.0;
};

// cos(theta)|up> + sin(theta) exp(-iHt)|..up down up..>, flip at `site`.
// With a pre-quench the scar is first evolved under h0 for t0, then rotated,
// then the whole state is evolved under h.
Evolved prepare_protocol_state(const HamiltonianSpec &h, double theta, int site, double t,
                               const std::optional<PreQuench> &pre_quench = std::nullopt,
                               const EvolutionSettings &settings = {});

inline int default_measurement_site(int length) { return length / 2; }

// Protocol states at increasing times, each obtained from the previous one.
std::vector<StateVector> protocol_time_series(const HamiltonianSpec &h, double theta, int site,
                                              const std::vector<double> &times,
                                              const std::optional<PreQuench> &pre_quench = std::nullopt,
                                              const EvolutionSettings &settings = {},
                                              std::vector<EvolutionReport> *reports = nullptr);

} // namespace scarcat
