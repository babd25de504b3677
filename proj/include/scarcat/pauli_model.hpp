#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scarcat {

using cplx = std::complex<double>;

// Basis convention shared by every module: bit j of a basis index is 0 when
// site j points up (sigma^z = +1) and 1 when it points down.
inline constexpr int max_chain_length = 62;

enum class Axis : std::uint8_t { x, y, z };
enum class Boundary : std::uint8_t { open, periodic };

char axis_name(Axis a);
Axis parse_axis(char c);
std::string boundary_name(Boundary b);
Boundary parse_boundary(const std::string &s);

struct PauliFactor {
    int site = 0;
    Axis axis = Axis::z;
    friend bool operator==(const PauliFactor &, const PauliFactor &) = default;
};

// coefficient * prod_f sigma^{f.axis}_{f.site}; factors sorted by site, sites distinct.
struct PauliTerm {
    double coefficient = 0.0;
    std::vector<PauliFactor> factors;
    friend bool operator==(const PauliTerm &, const PauliTerm &) = default;
};

// Symbolic sum of Pauli strings on a chain of `length` sites. Also used for
// non-Hamiltonian operators (magnetization, semilocal charge, parities).
struct HamiltonianSpec {
    int length = 0;
    Boundary boundary = Boundary::open;
    std::vector<PauliTerm> terms;
    std::string label;
    friend bool operator==(const HamiltonianSpec &, const HamiltonianSpec &) = default;
};

// Throws InvalidArgument if a site is out of range, repeated inside a term,
// or a coefficient is not finite.
void validate(const HamiltonianSpec &h);

// Structured-text form used for golden files: JSON with fields
// label, length, boundary, terms[{coefficient, factors[[site, "x|y|z"]]}].
std::string to_text(const HamiltonianSpec &h);
HamiltonianSpec from_text(const std::string &text);

/// Bitmask form of a Pauli sum. A string P acts as
///   P|i> = scalar * (-1)^popcount(i & phase_mask) |i ^ flip_mask>
/// with flip_mask marking x/y factors, phase_mask marking y/z factors and
/// scalar = coefficient * i^(number of y factors).
class CompiledOperator {
public:
    struct Term {
        std::uint64_t flip_mask = 0;
        std::uint64_t phase_mask = 0;
        cplx scalar{};
    };

    CompiledOperator() = default;
    explicit CompiledOperator(const HamiltonianSpec &h);

    int length() const { return length_; }
    std::span<const Term> terms() const { return terms_; }
    bool is_diagonal() const;

    // out = Op * in, both of size 2^length. Gather form: each output entry is
    // written exactly once.
    void apply(std::span<const cplx> in, std::span<cplx> out) const;
    std::vector<cplx> apply(std::span<const cplx> in) const;

    // Sum of |coefficients|; upper bound on the operator norm.
    double coefficient_norm() const;

private:
    struct FlipGroup {
        std::uint64_t flip_mask = 0;
        std::vector<std::pair<std::uint64_t, cplx>> phases;
    };
    int length_ = 0;
    std::vector<Term> terms_;
    std::vector<FlipGroup> groups_;
};

// Sparse vector as (basis index, amplitude) pairs sorted by index.
using SparseVector = std::vector<std::pair<std::uint64_t, cplx>>;
SparseVector apply_sparse(const CompiledOperator &op, const SparseVector &in);

// Dense 2^L x 2^L matrix (L <= 12).
Eigen::MatrixXcd dense_matrix(const HamiltonianSpec &h);

// ---------------------------------------------------------------------------
// Model builders

// Transistor chain: sum_l (1 - sigma^z_l)/8 [J s_{l-1}.S.s_{l+1} + D.(s_{l-1} x s_{l+1})] - hz/2 sigma^z_l
// with S = [[(1+g)/2, w, 0], [w, (1-g)/2, 0], [0, 0, Delta]] and D = (0, 0, Dz).
struct TransistorParams {
    double J = 0.0;
    double gamma = 0.0;
    double w = 0.0;
    double Delta = 0.0;
    double Dz = 0.0;
    double hz = 0.0;
};
HamiltonianSpec build_h1(const TransistorParams &p, int length, Boundary boundary);

// Generic pairwise model with |up> as eigenstate. Entry r-1 of each list is the
// coupling at range r; all lists are padded with zeros to the longest one.
struct PairwiseParams {
    std::vector<double> J;
    std::vector<double> gamma_x, gamma_y, gamma_z;
    std::vector<double> D_x, D_y, D_z;
    double hz = 0.0;
};
HamiltonianSpec build_h2(const PairwiseParams &p, int length, Boundary boundary);

enum class IsingVariant { ising, tilted_ising };
struct IsingParams {
    double h0z = 0.0;
    double h0x = 0.0;
};
HamiltonianSpec build_h0(IsingVariant variant, const IsingParams &p, int length, Boundary boundary);

// Kramers-Wannier dual of the transistor chain (tau spins, periodic by default).
struct DualParams {
    double J = 0.0;
    double gamma = 0.0;
    double w = 0.0;
    double Dz = 0.0;
    double hz = 0.0;
};
HamiltonianSpec build_h_tau(const DualParams &p, int length, Boundary boundary = Boundary::periodic);

// ---------------------------------------------------------------------------
// Symmetry operators

// Pi^z(l) truncated at the open left edge: prod_{j<l} sigma^z_j (identity for l = 0).
struct SemilocalString {
    int boundary_site = 0;
    PauliTerm string;
};

struct SemilocalCharge {
    std::vector<SemilocalString> strings;
    HamiltonianSpec sum; // (1/2) sum_l Pi^z(l)
};
SemilocalCharge semilocal_charge(int length);

HamiltonianSpec total_sz(int length);     // (1/2) sum_l sigma^z_l
HamiltonianSpec parity_z(int length);     // prod_l sigma^z_l
HamiltonianSpec single_site(int length, int site, Axis axis);

// Returns E with H|up> = E|up>. Throws ResidualTooLarge when the residual
// norm ||H|up> - E|up>|| exceeds `tolerance`.
double verify_scar(const HamiltonianSpec &h, double tolerance = 1e-12);

// Frobenius norm of [A, B], evaluated column by column on the computational
// basis (exactly the dense-matrix value). Requires equal lengths, L <= 16.
double commutator_norm(const HamiltonianSpec &a, const HamiltonianSpec &b);

} // namespace scarcat
