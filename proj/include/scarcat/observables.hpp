#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "scarcat/state_engine.hpp"

namespace scarcat {

struct MagnetizationProfile {
    std::vector<double> sz; // <sigma^z_l>
    double time = 0.0;
    double theta = 0.0;
};

MagnetizationProfile magnetization_profile(const StateVector &state, double theta = 0.0);

// L/2 - <S^z>.
double delta_sz(const StateVector &state);

// Contiguous block [left, right]. `outside_weight` is the probability that
// some spin outside the block points down.
struct EffectiveRegion {
    int left = 0;
    int right = 0;
    double epsilon = 0.0;
    double outside_weight = 0.0;
    int size() const { return right - left + 1; }
    bool contains(int site) const { return site >= left && site <= right; }
};

// Probability that all spins outside each block are up, queried in O(1)
// after a single pass over the amplitudes.
class DownSpanTable {
public:
    explicit DownSpanTable(const StateVector &state);
    int length() const { return length_; }
    double outside_weight(int left, int right) const;

private:
    int length_;
    double total_ = 0.0;
    // prefix_[lo][hi]: weight of states whose down spins all lie in [lo, hi] (suffix in lo, prefix in hi).
    std::vector<double> contained_;
    double at(int lo, int hi) const { return contained_[static_cast<std::size_t>(lo * length_ + hi)]; }
};

// Smallest block around `site` with outside weight <= epsilon. Grows by the
// side that lowers the weight more (both sides on ties), then trims any edge
// that can be dropped without exceeding epsilon.
EffectiveRegion effective_region(const StateVector &flipped_branch, double epsilon, int site);

struct FcsDistribution {
    int length = 0;
    double theta = 0.0;
    std::vector<int> k2;      // 2k for k in [-L/2, L/2]
    std::vector<cplx> G;
    std::vector<int> m2;      // 2m for m in [-L/2, L/2], ascending
    std::vector<double> P;
    bool convention_warning = false; // L not divisible by 4
    double m_value(std::size_t i) const { return m2[i] / 2.0; }
};

FcsDistribution fcs(const StateVector &state, double theta = 0.0);

// Sum over basis states of |psi|^2 grouped by number of down spins.
std::vector<double> down_count_distribution(const StateVector &state);

// 4x4 reduced density matrix of sites (a, b); local index = bit_a + 2 bit_b.
Eigen::Matrix4cd two_site_density_matrix(const StateVector &state, int a, int b);
Eigen::Matrix2cd one_site_density_matrix(const StateVector &state, int a);

// Real symmetric 3|Omega| x 3|Omega| matrix, index 3*(site - left) + axis (x, y, z).
struct CovarianceMatrix {
    EffectiveRegion region;
    Eigen::MatrixXd entries;
};

CovarianceMatrix covariance_matrix(const StateVector &state, const EffectiveRegion &region);

struct QuantumnessResult {
    double value = 0.0;                    // N_eff^(1)
    std::vector<Eigen::Vector3d> directions;
    int iterations = 0;                    // summed over all starts
    bool converged = false;
    double variance_value = 0.0;           // v^T K v / |Omega| for the returned directions
};

struct QuantumnessOptions {
    double tolerance = 1e-10;
    int max_iterations = 10000;
    std::uint64_t seed = 12345;
    int starts = 8; // independent sweeps; the largest fixed point wins
};

QuantumnessResult quantumness_iterative(const CovarianceMatrix &k, const QuantumnessOptions &opt = {});

// Multi-start projected gradient ascent; oracle for |Omega| <= 8.
QuantumnessResult quantumness_dense(const CovarianceMatrix &k, int starts = 64, std::uint64_t seed = 777);

// Variance of O = sum_j n_j . sigma_j computed directly from the state.
double direction_variance(const StateVector &state, const EffectiveRegion &region,
                          const std::vector<Eigen::Vector3d> &directions);

} // namespace scarcat
