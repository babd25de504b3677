#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scarcat/pauli_model.hpp"
#include "scarcat/state_engine.hpp"

namespace scarcat {

// Model name plus flat parameters. Scalar keys match the builder parameter
// names (J, gamma, w, Delta, Dz, hz, h0z, h0x); list keys (h2 only) are
// J_r, gamma_x_r, gamma_y_r, gamma_z_r, D_x_r, D_y_r, D_z_r.
struct ModelConfig {
    std::string name = "h1";
    std::map<std::string, double> scalars;
    std::map<std::string, std::vector<double>> lists;
    bool operator==(const ModelConfig &) const = default;
};

struct TimeGrid {
    std::vector<double> explicit_times; // used when nonempty
    double t_max = 1.0;
    int steps = 10;                      // times t_max * i / steps, i = 1..steps
    std::vector<double> values() const;
    bool operator==(const TimeGrid &) const = default;
};

struct ProtocolConfig {
    double theta = 1.5707963267948966;
    std::optional<int> site; // unset = chain center
    TimeGrid times;
    double epsilon = 1e-3;
    bool operator==(const ProtocolConfig &) const = default;
};

struct EvolutionConfig {
    EvolutionMethod method = EvolutionMethod::krylov;
    double dt = 0.01;
    int krylov_dim = 30;
    double tolerance = 1e-10;
    bool operator==(const EvolutionConfig &) const = default;
    EvolutionSettings settings() const;
};

struct PreQuenchConfig {
    ModelConfig model; // ising or tilted_ising
    double t0 = 0.0;
    bool operator==(const PreQuenchConfig &) const = default;
};

struct SpectrumConfig {
    std::optional<double> magnetization;
    std::optional<int> momentum;
    std::optional<int> parity_x;
    std::optional<int> parity_z;
    std::optional<int> parity_z_even;
    bool zero_semilocal_charge = false;
    int degree = 7;
    double trim = 0.05;
    bool operator==(const SpectrumConfig &) const = default;
};

struct AnalysisConfig {
    double valley_threshold = 0.1;
    double quantumness_tolerance = 1e-10;
    int quantumness_max_iterations = 10000;
    // Leave out times whose region touches a chain end from the growth fit.
    bool fit_interior_only = true;
    bool operator==(const AnalysisConfig &) const = default;
};

struct U1Config {
    int flips = 1;
    std::string density = "z0"; // Pauli string on sites 0.., e.g. "x0 x1"
    bool operator==(const U1Config &) const = default;
};

struct ScenarioConfig {
    ModelConfig model;
    int length = 8;
    Boundary boundary = Boundary::open;
    ProtocolConfig protocol;
    EvolutionConfig evolution;
    std::optional<PreQuenchConfig> pre_quench;
    std::string output_directory = "out";
    std::uint64_t seed = 1;
    SpectrumConfig spectrum;
    AnalysisConfig analysis;
    U1Config u1;
    bool operator==(const ScenarioConfig &) const = default;

    int measurement_site() const { return protocol.site ? *protocol.site : default_measurement_site(length); }
};

// INI text with sections [model], [chain], [protocol], [evolution],
// [pre_quench], [output], [spectrum], [analysis], [u1]. Unknown sections or
// keys raise InvalidArgument naming the key path.
ScenarioConfig parse_config(const std::string &text);
ScenarioConfig load_config(const std::string &path);
std::string serialize_config(const ScenarioConfig &c);

// Validates against builder preconditions; throws InvalidArgument.
void validate_config(const ScenarioConfig &c);

HamiltonianSpec build_model(const ModelConfig &m, int length, Boundary boundary);
HamiltonianSpec parse_density(const std::string &text);

} // namespace scarcat
