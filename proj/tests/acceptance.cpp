// Acceptance suite: one PASS/FAIL line per criterion. Exit status is zero when
// the set of failing criteria equals the set passed with --known-failure.

#include <sys/wait.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "oracle.hpp"
#include "scarcat/errors.hpp"
#include "scarcat/scenarios.hpp"

using namespace scarcat;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string recipe(const std::string &name) { return std::string(SCARCAT_RECIPES) + "/" + name + ".ini"; }

ScenarioConfig load_recipe(const std::string &name, const fs::path &out) {
    auto c = load_config(recipe(name));
    c.output_directory = out.string();
    return c;
}

TransistorParams random_h1(std::mt19937_64 &rng, bool with_delta = true) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    return {u(rng), u(rng), u(rng), with_delta ? u(rng) : 0.0, u(rng), u(rng)};
}

PairwiseParams random_h2(std::mt19937_64 &rng, bool u1_only) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> ranges(1, 3);
    PairwiseParams p;
    const int n = ranges(rng);
    auto draw = [&](bool on) { return on ? u(rng) : 0.0; };
    for (int r = 0; r < n; ++r) {
        p.J.push_back(u(rng));
        p.gamma_x.push_back(draw(!u1_only));
        p.gamma_y.push_back(draw(!u1_only));
        p.gamma_z.push_back(u(rng));
        p.D_x.push_back(draw(!u1_only));
        p.D_y.push_back(draw(!u1_only));
        p.D_z.push_back(u(rng));
    }
    p.hz = u(rng);
    return p;
}

// <up|H|up> read off the symbolic terms: only pure-z strings contribute, each with +coefficient.
double symbolic_scar_energy(const HamiltonianSpec &h) {
    double e = 0;
    for (const auto &t : h.terms) {
        bool diagonal = true;
        for (const auto &f : t.factors) diagonal = diagonal && f.axis == Axis::z;
        if (diagonal) e += t.coefficient;
    }
    return e;
}

Outcome scar_exactness() {
    Outcome o;
    std::mt19937_64 rng(1001);
    double worst_residual = 0, worst_energy = 0;
    for (int i = 0; i < 100; ++i) {
        const Boundary b = i % 2 ? Boundary::periodic : Boundary::open;
        for (const auto &h : {build_h1(random_h1(rng), 10, b), build_h2(random_h2(rng, false), 10, b)}) {
            double e = 0;
            try {
                e = verify_scar(h);
            } catch (const ResidualTooLarge &err) {
                o.require(false, fmt::format("{} draw {} not a scar ({:.2e})", h.label, i, err.residual()));
                continue;
            }
            const auto image = apply_operator(CompiledOperator(h), product_state_up(10));
            double r = 0;
            for (std::size_t k = 0; k < image.size(); ++k) r += std::norm(image[k] - (k == 0 ? e : 0.0));
            worst_residual = std::max(worst_residual, std::sqrt(r));
            worst_energy = std::max(worst_energy, std::abs(e - symbolic_scar_energy(h)));
        }
    }
    o.require(worst_residual < 1e-12, fmt::format("residual {:.2e}", worst_residual));
    o.require(worst_energy < 1e-12, fmt::format("energy mismatch {:.2e}", worst_energy));
    if (o.pass) o.detail = fmt::format("200 draws, max residual {:.1e}, max |E - <up|H|up>| {:.1e}", worst_residual, worst_energy);
    return o;
}

Outcome evolution_oracle() {
    Outcome o;
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> time(0.5, 5.0);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        HamiltonianSpec h;
        switch (i % 4) {
        case 0: h = build_h1(random_h1(rng), 6, Boundary::open); break;
        case 1: h = build_h2(random_h2(rng, false), 6, Boundary::periodic); break;
        case 2: h = build_h_tau({1, 0.5, 0.7, 0.6, 0.3}, 6); break;
        default: h = build_h0(IsingVariant::tilted_ising, {0.7, 0.5}, 6, Boundary::open);
        }
        const auto psi = oracle::random_state(6, rng);
        const double t = time(rng);
        const oracle::Vec ref = (oracle::cplx(0, -t) * oracle::spec_matrix(h)).exp() * oracle::to_vec(psi);
        worst = std::max(worst, (oracle::to_vec(evolve_krylov(h, psi, t).state) - ref).norm());
    }
    o.require(worst < 1e-9, fmt::format("Krylov error {:.2e}", worst));
    const auto h = build_h1({2.8, 1, 0, 0, 0, 0}, 8, Boundary::open);
    const auto flip = basis_state(8, 1u << 4);
    const double trotter = (oracle::to_vec(evolve_krylov(h, flip, 0.5).state) -
                            oracle::to_vec(evolve_trotter(h, flip, 0.5, {0.01}).state))
                               .norm();
    o.require(trotter < 5e-4, fmt::format("Trotter deviation {:.2e}", trotter));
    if (o.pass) o.detail = fmt::format("Krylov vs expm max {:.1e}; Trotter vs Krylov {:.1e}", worst, trotter);
    return o;
}

Outcome fcs_identities() {
    Outcome o;
    const int L = 12;
    double worst_sum = 0, worst_m1 = 0, worst_var = 0, worst_parity = 0, worst_top = 0;
    for (const auto &p : {TransistorParams{2.8, 1, 0, 0, 0, 0}, TransistorParams{1, 0.5, 0.7, 0, 0.6, 0}}) {
        const auto h = build_h1(p, L, Boundary::open);
        for (double theta : {pi / 2, pi / 4, 0.3}) {
            const auto s = prepare_protocol_state(h, theta, L / 2, 2.0).state;
            const auto d = fcs(s, theta);
            double total = 0, m1 = 0, m2 = 0;
            for (std::size_t i = 0; i < d.P.size(); ++i) {
                total += d.P[i];
                m1 += d.m_value(i) * d.P[i];
                m2 += d.m_value(i) * d.m_value(i) * d.P[i];
            }
            const CompiledOperator sz(total_sz(L));
            const double mean = expectation(s, sz);
            const auto image = apply_operator(sz, s);
            const double var = std::pow(vector_norm(image), 2) - mean * mean;
            worst_sum = std::max(worst_sum, std::abs(total - 1));
            worst_m1 = std::max(worst_m1, std::abs(m1 - mean));
            worst_var = std::max(worst_var, std::abs(m2 - m1 * m1 - var));
            worst_top = std::max(worst_top, std::abs(d.P.back() - std::pow(std::cos(theta), 2)));
            if (theta == pi / 2)
                for (std::size_t i = 0; i < d.P.size(); ++i)
                    if (d.m2[i] % 4 == 0) worst_parity = std::max(worst_parity, d.P[i]);
        }
    }
    o.require(worst_sum < 1e-10, fmt::format("sum P - 1 = {:.2e}", worst_sum));
    o.require(worst_m1 < 1e-8, fmt::format("first moment {:.2e}", worst_m1));
    o.require(worst_var < 1e-8, fmt::format("variance {:.2e}", worst_var));
    o.require(worst_parity < 1e-10, fmt::format("P(even m) = {:.2e}", worst_parity));
    o.require(worst_top < 1e-10, fmt::format("P(L/2) - cos^2 = {:.2e}", worst_top));
    if (o.pass)
        o.detail = fmt::format("sum {:.0e}, moments {:.0e}/{:.0e}, P(even) {:.0e}, P(L/2) {:.0e}", worst_sum, worst_m1,
                               worst_var, worst_parity, worst_top);
    return o;
}

Outcome quantumness_solver() {
    Outcome o;
    std::mt19937_64 rng(4004);
    std::uniform_int_distribution<int> size(2, 6);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        const auto psi = oracle::random_state(6, rng);
        const int s = size(rng);
        const EffectiveRegion region{0, s - 1, 0.0, 0.0};
        const auto k = covariance_matrix(psi, region);
        worst = std::max(worst, std::abs(quantumness_iterative(k).value - quantumness_dense(k).value));
    }
    o.require(worst < 1e-6, fmt::format("iterative vs dense {:.2e}", worst));
    double worst_exact = 0;
    std::normal_distribution<double> g;
    for (int L : {4, 6}) {
        oracle::Vec product = oracle::Vec::Ones(1);
        for (int j = 0; j < L; ++j) {
            oracle::Vec q(2);
            q << oracle::cplx(g(rng), g(rng)), oracle::cplx(g(rng), g(rng));
            q.normalize();
            oracle::Vec next(product.size() * 2);
            next << product * q[0], product * q[1]; // site j is the new most significant bit
            product = next;
        }
        const EffectiveRegion all{0, L - 1, 0.0, 0.0};
        const double np = quantumness_iterative(covariance_matrix(oracle::from_vec(L, product), all)).value;
        const double ng = quantumness_iterative(covariance_matrix(oracle::ghz(L), all)).value;
        worst_exact = std::max({worst_exact, std::abs(np - 1.0), std::abs(ng - L)});
    }
    o.require(worst_exact < 1e-8, fmt::format("product/GHZ error {:.2e}", worst_exact));
    if (o.pass) o.detail = fmt::format("50 states max gap {:.1e}; product/GHZ error {:.1e}", worst, worst_exact);
    return o;
}

struct Branches {
    ProtocolRun half, theta;
    QuantumnessSeries q_half, q_theta;
};

Branches run_branches(const ScenarioConfig &c, double theta) {
    Branches b;
    b.half = run_protocol(c, pi / 2, true);
    b.theta = run_protocol(c, theta, false);
    b.theta.regions = b.half.regions;
    b.q_half = quantumness_series(c, b.half);
    b.q_theta = quantumness_series(c, b.theta);
    return b;
}

int dominant_peaks(const BimodalityReport &r) {
    int n = 0;
    for (const auto &p : r.peaks) n += p.mass > 0.05;
    return n;
}

Outcome cat_dichotomy(const fs::path &work) {
    Outcome o;
    {
        const auto c = load_recipe("fig3_h1_pi4", work / "c5_h1");
        const auto b = run_branches(c, pi / 4);
        bool monotone = true;
        for (std::size_t i = 1; i < b.half.delta_sz.size(); ++i) monotone = monotone && b.half.delta_sz[i] > b.half.delta_sz[i - 1];
        o.require(monotone, "H1: delta S^z(pi/2) not monotone");
        o.require(b.q_half.fit_ok && is_flat(b.q_half.fit),
                  fmt::format("H1: beta1(pi/2) = {:.3f} not flat", b.q_half.fit.b1));
        o.require(b.q_theta.fit_ok && b.q_theta.fit.b1 > 0 && !is_flat(b.q_theta.fit),
                  fmt::format("H1: beta1(pi/4) = {:.3f} not growing", b.q_theta.fit.b1));
        const auto cat = detect_bimodality(fcs(b.theta.states.back(), pi / 4), c.analysis.valley_threshold);
        const auto half = detect_bimodality(fcs(b.half.states.back(), pi / 2), c.analysis.valley_threshold);
        o.require(cat.separated, "H1: P_pi/4 not bimodal-separated");
        o.require(!half.separated && dominant_peaks(half) == 1, "H1: P_pi/2 not unimodal");
        o.detail = fmt::format("H1 beta1(pi/2) {:.3f}+-{:.3f}, beta1(pi/4) {:.3f}+-{:.3f}, valley {:.1e}", b.q_half.fit.b1,
                               b.q_half.fit.se_b1, b.q_theta.fit.b1, b.q_theta.fit.se_b1, cat.valley_ratio);
    }
    {
        const auto c = load_recipe("fig5_h2", work / "c5_h2");
        const auto b = run_branches(c, pi / 4);
        const bool grows_half = b.q_half.fit_ok && b.q_half.fit.b1 > 0 && !is_flat(b.q_half.fit);
        const bool grows_theta = b.q_theta.fit_ok && b.q_theta.fit.b1 > 0 && !is_flat(b.q_theta.fit);
        o.require(grows_half, fmt::format("H2: beta1(pi/2) = {:.3f}+-{:.3f} within flat threshold {:.3f}", b.q_half.fit.b1,
                                          b.q_half.fit.se_b1, flat_threshold(b.q_half.fit)));
        o.require(grows_theta, fmt::format("H2: beta1(pi/4) = {:.3f}+-{:.3f} within flat threshold {:.3f}",
                                           b.q_theta.fit.b1, b.q_theta.fit.se_b1, flat_threshold(b.q_theta.fit)));
        const bool separated = detect_bimodality(fcs(b.theta.states.back(), pi / 4)).separated ||
                               detect_bimodality(fcs(b.half.states.back(), pi / 2)).separated;
        o.require(!separated, "H2: separated bimodality found");
        if (o.pass)
            o.detail += fmt::format("; H2 beta1(pi/2) {:.3f}, beta1(pi/4) {:.3f}", b.q_half.fit.b1, b.q_theta.fit.b1);
    }
    return o;
}

Outcome localization(const fs::path &work) {
    Outcome o;
    std::string detail;
    for (const auto &[name, expected] : {std::pair{"figB_localized", Spreading::confined}, std::pair{"figB_ballistic", Spreading::ballistic}}) {
        const auto c = load_recipe(name, work / name);
        const auto run = run_protocol(c, pi / 2, true);
        const auto s = classify_spreading(run.times, run.regions);
        o.require(s.classification == expected,
                  fmt::format("{}: {} (slope {:.3f})", name, spreading_name(s.classification), s.slope));
        detail += fmt::format("{}{}: {} final |Omega| {}", detail.empty() ? "" : ", ", c.model.scalars.at("hz") > 0.5 ? "hz=1" : "hz=0",
                              spreading_name(s.classification), run.regions.back().size());
    }
    if (o.pass) o.detail = detail;
    return o;
}

Outcome u1_bounds() {
    Outcome o;
    std::mt19937_64 rng(7007);
    const std::vector<double> times = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    double worst_e = 0, worst_v = 0, worst_drift = 0;
    const std::vector<std::string> densities = {"x0 x1", "z0", "y0 z1 y2", "0.5 x0 y1"};
    for (int i = 0; i < 20; ++i) {
        const auto h = build_h2(random_h2(rng, true), 12, Boundary::open);
        for (int s : {1, 2}) {
            const auto r = u1_macroscopic_check(h, s, parse_density(densities[static_cast<std::size_t>(i) % densities.size()]), times);
            o.require(r.bounds_hold, fmt::format("draw {} s={} bound violated", i, s));
            worst_e = std::max(worst_e, r.max_ratio_expectation);
            worst_v = std::max(worst_v, r.max_ratio_variance);
            worst_drift = std::max(worst_drift, r.sz_variance_drift);
        }
    }
    o.require(worst_drift < 1e-9, fmt::format("Var(S^z) drift {:.2e}", worst_drift));
    if (o.pass)
        o.detail = fmt::format("40 runs, max ratio to bound {:.3f} (expectation) {:.3f} (variance), Var(S^z) drift {:.1e}",
                               worst_e, worst_v, worst_drift);
    return o;
}

Outcome duality() {
    Outcome o;
    std::mt19937_64 rng(8008);
    double worst = 0;
    for (int i = 0; i < 5; ++i) {
        const auto p = random_h1(rng, false);
        for (int L : {8, 10}) {
            const auto r = duality_spectrum_check(p, L);
            o.require(r.spectra_match && r.sigma_dimension > 0, fmt::format("draw {} L={} mismatch {:.2e}", i, L, r.max_deviation));
            worst = std::max(worst, r.max_deviation);
        }
    }
    if (o.pass) o.detail = fmt::format("10 comparisons, max deviation {:.1e}", worst);
    return o;
}

Outcome level_statistics(const fs::path &work) {
    Outcome o;
    std::mt19937_64 rng(9009);
    double rp = 0, rg = 0;
    const int samples = 10;
    for (int i = 0; i < samples; ++i) {
        rp += mean_gap_ratio(poisson_levels(10000, rng)).mean / samples;
        rg += mean_gap_ratio(goe_levels(1000, rng)).mean / samples;
    }
    o.require(std::abs(rp - 0.386) < 0.01, fmt::format("Poisson <r> {:.4f}", rp));
    o.require(std::abs(rg - 0.531) < 0.01, fmt::format("GOE <r> {:.4f}", rg));
    double r_value[2];
    std::size_t dims[2];
    int idx = 0;
    for (const char *name : {"figA_chaotic", "figA_integrable"}) {
        const auto c = load_recipe(name, work / name);
        SectorSpec s;
        s.length = c.length;
        s.magnetization2 = static_cast<int>(std::lround(2 * c.spectrum.magnetization.value_or(0)));
        s.momentum = c.spectrum.momentum;
        s.parity_x = c.spectrum.parity_x;
        const auto spec = sector_spectrum(build_model(c.model, c.length, c.boundary), s);
        r_value[idx] = mean_gap_ratio(spec.eigenvalues).mean;
        dims[idx++] = spec.dimension();
    }
    o.require(r_value[0] > 0.48, fmt::format("chaotic <r> {:.4f}", r_value[0]));
    o.require(r_value[1] < 0.43, fmt::format("integrable <r> {:.4f}", r_value[1]));
    o.detail = fmt::format("Poisson {:.4f}, GOE {:.4f}; L=14 sector of {} levels: chaotic {:.4f}, integrable {:.4f}", rp, rg,
                           dims[0], r_value[0], r_value[1]) +
               (o.pass ? "" : "; " + o.detail);
    return o;
}

int run_cli(const std::string &args, const std::string &env) {
    const std::string cmd = env + " " + std::string(SCARCAT_BIN) + " " + args + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const fs::path &work) {
    Outcome o;
    std::vector<fs::path> dirs;
    int run = 0;
    for (const char *threads : {"1", "1", "2"}) {
        const fs::path dir = work / fmt::format("c10_run{}", run++);
        fs::create_directories(dir);
        std::ifstream in(recipe("fig3_h1_pi4"));
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        const auto pos = text.find("directory = ");
        text = text.substr(0, pos) + "directory = " + (dir / "out").string() + "\nseed = 1\n";
        std::ofstream(dir / "config.ini") << text;
        const int code = run_cli("catreport " + (dir / "config.ini").string(), std::string("SCARCAT_THREADS=") + threads);
        o.require(code == 0, fmt::format("catreport exit {}", code));
        dirs.push_back(dir / "out");
    }
    std::size_t files = 0;
    for (const auto &entry : fs::directory_iterator(dirs[0])) {
        ++files;
        const auto name = entry.path().filename();
        const auto ref = slurp(entry.path());
        for (std::size_t i = 1; i < dirs.size(); ++i)
            o.require(slurp(dirs[i] / name) == ref, fmt::format("{} differs in run {}", name.string(), i));
    }
    o.require(files >= 5, "too few outputs");
    if (o.pass) o.detail = fmt::format("{} files byte-identical over 3 runs (1, 1, 2 threads)", files);
    return o;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> known;
    std::vector<int> only;
    std::string work_dir = (fs::temp_directory_path() / "scarcat_acceptance").string();
    app.add_option("--known-failure", known, "criterion expected to fail (documented)");
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--work-dir", work_dir, "scratch directory");
    CLI11_PARSE(app, argc, argv);
    const fs::path work(work_dir);
    fs::remove_all(work);
    fs::create_directories(work);

    struct Criterion {
        int id;
        std::string name;
        double budget_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "scar exactness", 10, scar_exactness},
        {2, "evolution oracle", 60, evolution_oracle},
        {3, "FCS identities", 60, fcs_identities},
        {4, "quantumness solver", 120, quantumness_solver},
        {5, "cat-state dichotomy", 1800, [&] { return cat_dichotomy(work); }},
        {6, "localization", 600, [&] { return localization(work); }},
        {7, "U(1) bounds", 600, u1_bounds},
        {8, "duality", 300, duality},
        {9, "level statistics", 1200, [&] { return level_statistics(work); }},
        {10, "determinism", 1e9, [&] { return determinism(work); }},
    };

    const std::set<int> expected(known.begin(), known.end());
    std::set<int> failed;
    for (const auto &c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.budget_seconds) o.require(false, fmt::format("runtime {:.0f} s over budget", seconds));
        if (!o.pass) failed.insert(c.id);
        std::cout << fmt::format("criterion {:>2} {:<22} {} ({:.1f} s) {}{}\n", c.id, c.name, o.pass ? "PASS" : "FAIL", seconds,
                                 o.detail, !o.pass && expected.count(c.id) ? " [known failure]" : "")
                  << std::flush;
    }
    std::set<int> expected_run;
    for (int id : expected)
        if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) expected_run.insert(id);
    if (failed != expected_run) {
        std::cout << "unexpected outcome: failing set differs from the documented known failures\n";
        return 1;
    }
    return 0;
}
