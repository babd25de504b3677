#pragma once

#include <string>
#include <vector>

#include "scarcat/analysis.hpp"
#include "scarcat/config.hpp"
#include "scarcat/spectral.hpp"

namespace scarcat {

// Commands: scarcheck, evolve, omega, fcs, quantumness, spectrum, dualcheck,
// u1check, catreport. Each writes its files into c.output_directory and
// returns a one-line summary.
std::string run_command(const std::string &command, const ScenarioConfig &c);
const std::vector<std::string> &command_names();

// Series computed along the protocol; shared by the commands and by tests.
struct ProtocolRun {
    std::vector<double> times;
    std::vector<StateVector> states;          // Psi_theta(t)
    std::vector<EffectiveRegion> regions;     // from the theta = pi/2 branch
    std::vector<double> delta_sz;
};

ProtocolRun run_protocol(const ScenarioConfig &c, double theta, bool with_regions);

struct QuantumnessSeries {
    std::vector<double> times;
    std::vector<int> omega_size;
    std::vector<double> neff;
    std::vector<bool> converged;
    std::vector<bool> interior; // region does not touch a chain end
    FitResult fit;
    bool fit_ok = false;
    std::string fit_error;
};

QuantumnessSeries quantumness_series(const ScenarioConfig &c, const ProtocolRun &run);

struct CatVerdict {
    bool macroscopically_different = false;
    bool cat_state = false;
    Spreading spreading = Spreading::undetermined;
    double delta_sz_slope = 0.0;
    double delta_sz_ci_low = 0.0;
    FitResult fit_half_pi;
    bool fit_half_pi_flat = false;
    FitResult fit_theta; // quantumness fit of the configured theta
    bool fit_theta_ok = false;
    BimodalityReport bimodality;
};

CatVerdict cat_report(const ScenarioConfig &c);

} // namespace scarcat
