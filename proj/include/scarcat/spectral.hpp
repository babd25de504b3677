#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scarcat/pauli_model.hpp"

namespace scarcat {

// Quantum numbers of a symmetry sector. Unset fields are not imposed.
// Translation and the spin flip prod sigma^x act on the basis; the remaining
// labels are diagonal and act as filters on basis states.
struct SectorSpec {
    int length = 0;
    std::optional<int> magnetization2;  // 2m, m = L/2 - (number of down spins)
    std::optional<int> momentum;        // k in [0, L); requires a periodic chain
    std::optional<int> parity_x;        // prod sigma^x
    std::optional<int> parity_z;        // prod sigma^z
    std::optional<int> parity_z_even;   // prod over even sites of sigma^z
    bool zero_semilocal_charge = false; // sum_l prod_{j<l} sigma^z_j = 0
};

std::string describe(const SectorSpec &s);

// Orthonormal sector basis; each vector is a sparse combination of basis
// states and no basis state appears in two vectors.
struct SectorBasis {
    SectorSpec spec;
    std::vector<SparseVector> vectors;
    std::size_t dimension() const { return vectors.size(); }
};

SectorBasis build_sector_basis(const SectorSpec &spec);

struct SectorMatrix {
    Eigen::MatrixXcd matrix;
    double leakage = 0.0; // max_j || H b_j - sum_i M_ij b_i ||
};

// Throws InvariantViolation when the sector is not invariant under h
// (leakage above 1e-10 times the coefficient norm).
SectorMatrix sector_matrix(const HamiltonianSpec &h, const SectorBasis &basis);

struct SectorSpectrum {
    SectorSpec sector;
    std::vector<double> eigenvalues;
    double leakage = 0.0;
    std::size_t dimension() const { return eigenvalues.size(); }
};

SectorSpectrum sector_spectrum(const HamiltonianSpec &h, const SectorSpec &spec);

struct UnfoldOptions {
    int degree = 7;
    double trim_fraction = 0.05;
};

struct Unfolded {
    std::vector<double> spacings;
    int zero_spacings = 0;
    bool few_levels = false; // fewer than 200 levels after trimming
};

Unfolded unfold(std::vector<double> eigenvalues, const UnfoldOptions &opt = {});

struct GapRatio {
    double mean = 0.0;
    int merged_degeneracies = 0;
    std::size_t count = 0;
};

// Consecutive levels closer than `merge_below` are merged before forming gaps.
GapRatio mean_gap_ratio(std::vector<double> eigenvalues, double merge_below = 1e-12);

struct SpacingStats {
    std::vector<double> sorted_spacings;
    std::vector<double> cdf;
    double mean_spacing = 0.0;
    double ks_poisson = 0.0;
    double ks_wigner = 0.0;
    GapRatio gap_ratio;
    int zero_spacings = 0;
};

SpacingStats spacing_stats(const Unfolded &unfolded, const std::vector<double> &raw_eigenvalues);

double poisson_cdf(double s);
double wigner_cdf(double s);
// Supremum distance between the empirical CDF of `samples` and `cdf`.
double ks_distance(std::vector<double> samples, double (*cdf)(double));

// Synthetic reference spectra.
std::vector<double> poisson_levels(std::size_t n, std::mt19937_64 &rng);
std::vector<double> goe_levels(std::size_t n, std::mt19937_64 &rng);

struct DualityReport {
    bool spectra_match = false;
    double max_deviation = 0.0;
    std::size_t sigma_dimension = 0;
    std::size_t tau_dimension = 0;
    double sigma_leakage = 0.0;
    double tau_leakage = 0.0;
    SectorSpec sigma_sector;
    SectorSpec tau_sector;
};

// Compares H1 (periodic) in its zero-momentum, zero-semilocal-charge parity
// sector with H_tau at zero momentum and magnetization, prod tau^x = +1.
DualityReport duality_spectrum_check(const TransistorParams &p, int length, double tolerance = 1e-9);

} // namespace scarcat
