#pragma once

#include <string>
#include <vector>

#include "scarcat/observables.hpp"

namespace scarcat {

// Least squares fit y ~ b0 + b1 x + b2 / x.
struct FitResult {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double residual_norm = 0.0;
    std::size_t points = 0;
    // Standard errors from sigma^2 = RSS / (n - 3); zero when n = 3.
    double se_b0 = 0.0, se_b1 = 0.0, se_b2 = 0.0;
};

FitResult fit_growth(const std::vector<double> &xs, const std::vector<double> &ys);

// |b1| < max(0.05, 3 standard errors).
double flat_threshold(const FitResult &fit);
bool is_flat(const FitResult &fit);

// Ordinary least squares slope of y on x with its 95% Student-t interval.
struct Trend {
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};
Trend linear_trend(const std::vector<double> &x, const std::vector<double> &y);

enum class Spreading { ballistic, confined, undetermined };
std::string spreading_name(Spreading s);

struct SpreadingReport {
    Spreading classification = Spreading::undetermined;
    double slope = 0.0;
    double ci_low = 0.0;  // 95% confidence band of the slope
    double ci_high = 0.0;
    double saturation = 0.0; // mean size over the trailing window when confined
    std::size_t window_points = 0;
};

// Regression of region size on time over the trailing half (t >= midpoint of the time range).
SpreadingReport classify_spreading(const std::vector<double> &times, const std::vector<int> &sizes);
SpreadingReport classify_spreading(const std::vector<double> &times, const std::vector<EffectiveRegion> &regions);

struct Peak {
    double m = 0.0;
    double height = 0.0;
    double mass = 0.0;
};

struct BimodalityReport {
    std::vector<Peak> peaks;
    bool separated = false;
    double valley_ratio = 1.0; // interior minimum / smaller dominant peak height
    bool parity_sublattice = false;
};

BimodalityReport detect_bimodality(const FcsDistribution &p, double valley_threshold = 0.1);

struct U1Sample {
    double time = 0.0;
    int omega_size = 0;
    double expectation_difference = 0.0;
    double expectation_bound = 0.0;
    double variance = 0.0;
    double variance_bound = 0.0;
    double sz_variance = 0.0;
};

struct U1Report {
    std::vector<U1Sample> samples;
    double density_norm = 0.0;
    double max_ratio_expectation = 0.0;
    double max_ratio_variance = 0.0;
    double sz_variance_drift = 0.0;
    bool bounds_hold = false;
};

struct U1Options {
    double epsilon = 1e-3;
    double bound_slack = 1e-9;
    KrylovOptions krylov;
};

// Evolves s adjacent flips from the chain center under h and checks the
// expectation and variance bounds for O = sum over all translates of
// `density` (an operator written on sites 0..|A|-1). Also tracks Var(S^z) of
// a superposition of the s- and (s-1)-flip states. h must conserve S^z.
U1Report u1_macroscopic_check(const HamiltonianSpec &h, int flips, const HamiltonianSpec &density,
                              const std::vector<double> &times, const U1Options &opt = {});

// Largest |eigenvalue| of an operator, by dense diagonalization on its support.
double density_operator_norm(const HamiltonianSpec &density);

} // namespace scarcat
