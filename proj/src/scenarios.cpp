#include "scarcat/scenarios.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "json.hpp"
#include "scarcat/errors.hpp"

namespace scarcat {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double half_pi = std::numbers::pi / 2;

void write_file(const ScenarioConfig &c, const std::string &name, const std::string &content) {
    const fs::path dir(c.output_directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidArgument(fmt::format("output.directory: cannot create '{}': {}", dir.string(), ec.message()));
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument(fmt::format("output.directory: cannot write '{}'", (dir / name).string()));
    out << content;
}

void write_json(const ScenarioConfig &c, const std::string &name, const json &doc) {
    write_file(c, name, doc.dump(2) + "\n");
}

std::optional<PreQuench> pre_quench_of(const ScenarioConfig &c) {
    if (!c.pre_quench) return std::nullopt;
    return PreQuench{build_model(c.pre_quench->model, c.length, c.boundary), c.pre_quench->t0};
}

json fit_json(const FitResult &f) {
    return {{"b0", f.b0},       {"b1", f.b1},       {"b2", f.b2},     {"resid", f.residual_norm},
            {"points", f.points}, {"se_b1", f.se_b1}, {"flat", is_flat(f)}, {"flat_threshold", flat_threshold(f)}};
}

json spreading_json(const SpreadingReport &s) {
    return {{"class", spreading_name(s.classification)},
            {"slope", s.slope},
            {"ci", {s.ci_low, s.ci_high}},
            {"saturation", s.saturation}};
}

json bimodality_json(const BimodalityReport &b) {
    json peaks = json::array();
    for (const auto &p : b.peaks) peaks.push_back({p.m, p.mass});
    return {{"peaks", peaks}, {"separated", b.separated}, {"valley_ratio", b.valley_ratio}};
}

std::string omega_csv(const ProtocolRun &run) {
    std::string out = "t,left,right,size,w_out\n";
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const auto &r = run.regions[i];
        out += fmt::format("{},{},{},{},{}\n", run.times[i], r.left, r.right, r.size(), r.outside_weight);
    }
    return out;
}

std::string delta_sz_csv(const ProtocolRun &run) {
    std::string out = "t,delta_sz\n";
    for (std::size_t i = 0; i < run.times.size(); ++i) out += fmt::format("{},{}\n", run.times[i], run.delta_sz[i]);
    return out;
}

std::string neff_csv(const QuantumnessSeries &q) {
    std::string out = "t,omega_size,neff,converged\n";
    for (std::size_t i = 0; i < q.times.size(); ++i)
        out += fmt::format("{},{},{},{}\n", q.times[i], q.omega_size[i], q.neff[i], q.converged[i] ? 1 : 0);
    return out;
}

std::string fcs_csv(const FcsDistribution &d) {
    std::string out = "m,P\n";
    for (std::size_t i = 0; i < d.P.size(); ++i) out += fmt::format("{},{}\n", d.m_value(i), d.P[i]);
    return out;
}

std::string scarcheck(const ScenarioConfig &c) {
    const HamiltonianSpec h = build_model(c.model, c.length, c.boundary);
    json doc;
    doc["model"] = c.model.name;
    doc["length"] = c.length;
    doc["boundary"] = boundary_name(c.boundary);
    doc["terms"] = h.terms.size();
    std::string summary;
    try {
        const double e = verify_scar(h);
        doc["scar"] = true;
        doc["energy"] = e;
        summary = fmt::format("|up> is an eigenstate with E = {}", e);
    } catch (const ResidualTooLarge &err) {
        doc["scar"] = false;
        doc["residual"] = err.residual();
        summary = fmt::format("|up> is not an eigenstate (residual {:.3e})", err.residual());
    }
    if (c.length <= 10) {
        const Eigen::MatrixXcd m = dense_matrix(h);
        doc["hermiticity_error"] = (m - m.adjoint()).cwiseAbs().maxCoeff();
    }
    if (c.length <= 16) {
        json comm;
        comm["total_sz"] = commutator_norm(h, total_sz(c.length));
        comm["parity_z"] = commutator_norm(h, parity_z(c.length));
        if (c.boundary == Boundary::open) comm["semilocal_charge"] = commutator_norm(h, semilocal_charge(c.length).sum);
        doc["commutators"] = comm;
    }
    write_json(c, "scarcheck.json", doc);
    return summary;
}

std::string evolve_command(const ScenarioConfig &c) {
    const ProtocolRun run = run_protocol(c, c.protocol.theta, false);
    std::string profile = "t,site,sz\n";
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const auto p = magnetization_profile(run.states[i], c.protocol.theta);
        for (int l = 0; l < c.length; ++l) profile += fmt::format("{},{},{}\n", run.times[i], l, p.sz[l]);
    }
    write_file(c, "profile.csv", profile);
    write_file(c, "delta_sz.csv", delta_sz_csv(run));
    return fmt::format("evolved {} time points; final delta_sz = {}", run.times.size(), run.delta_sz.back());
}

std::string omega_command(const ScenarioConfig &c) {
    const ProtocolRun run = run_protocol(c, half_pi, true);
    write_file(c, "omega.csv", omega_csv(run));
    std::string summary = fmt::format("final region [{}, {}]", run.regions.back().left, run.regions.back().right);
    if (run.times.size() >= 5) {
        const auto s = classify_spreading(run.times, run.regions);
        write_json(c, "spreading.json", spreading_json(s));
        summary += fmt::format(", spreading {}", spreading_name(s.classification));
    }
    return summary;
}

std::string fcs_command(const ScenarioConfig &c) {
    const ProtocolRun run = run_protocol(c, c.protocol.theta, false);
    json doc = json::array();
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        const auto d = fcs(run.states[i], c.protocol.theta);
        write_file(c, fmt::format("fcs_{}.csv", run.times[i]), fcs_csv(d));
        doc.push_back({{"t", run.times[i]},
                       {"convention_warning", d.convention_warning},
                       {"bimodality", bimodality_json(detect_bimodality(d, c.analysis.valley_threshold))}});
    }
    write_json(c, "fcs.json", doc);
    return fmt::format("wrote {} distributions", run.times.size());
}

std::string quantumness_command(const ScenarioConfig &c) {
    const ProtocolRun run = run_protocol(c, c.protocol.theta, true);
    const QuantumnessSeries q = quantumness_series(c, run);
    write_file(c, "neff.csv", neff_csv(q));
    json doc;
    doc["theta"] = c.protocol.theta;
    if (q.fit_ok)
        doc["fit"] = fit_json(q.fit);
    else
        doc["fit_error"] = q.fit_error;
    write_json(c, "fit.json", doc);
    return q.fit_ok ? fmt::format("b1 = {:.4f} (flat: {})", q.fit.b1, is_flat(q.fit)) : "fit not possible: " + q.fit_error;
}

SectorSpec sector_of(const ScenarioConfig &c) {
    SectorSpec s;
    s.length = c.length;
    if (c.spectrum.magnetization) {
        const double m2 = 2.0 * *c.spectrum.magnetization;
        if (std::abs(m2 - std::round(m2)) > 1e-12) throw InvalidArgument("spectrum.magnetization: must be a multiple of 1/2");
        s.magnetization2 = static_cast<int>(std::lround(m2));
    }
    s.momentum = c.spectrum.momentum;
    s.parity_x = c.spectrum.parity_x;
    s.parity_z = c.spectrum.parity_z;
    s.parity_z_even = c.spectrum.parity_z_even;
    s.zero_semilocal_charge = c.spectrum.zero_semilocal_charge;
    return s;
}

std::string spectrum_command(const ScenarioConfig &c) {
    const HamiltonianSpec h = build_model(c.model, c.length, c.boundary);
    const SectorSpectrum spec = sector_spectrum(h, sector_of(c));
    std::string levels = "index,E\n";
    for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) levels += fmt::format("{},{}\n", i, spec.eigenvalues[i]);
    write_file(c, "levels.csv", levels);
    const Unfolded u = unfold(spec.eigenvalues, {c.spectrum.degree, c.spectrum.trim});
    const SpacingStats st = spacing_stats(u, spec.eigenvalues);
    std::string cdf = "s,cdf\n";
    for (std::size_t i = 0; i < st.sorted_spacings.size(); ++i)
        cdf += fmt::format("{},{}\n", st.sorted_spacings[i], st.cdf[i]);
    write_file(c, "spacing_cdf.csv", cdf);
    json doc;
    doc["sector"] = describe(spec.sector);
    doc["dimension"] = spec.dimension();
    doc["leakage"] = spec.leakage;
    doc["mean_r"] = st.gap_ratio.mean;
    doc["merged_degeneracies"] = st.gap_ratio.merged_degeneracies;
    doc["mean_spacing"] = st.mean_spacing;
    doc["zero_spacings"] = st.zero_spacings;
    doc["ks_poisson"] = st.ks_poisson;
    doc["ks_wigner"] = st.ks_wigner;
    doc["few_levels"] = u.few_levels;
    write_json(c, "stats.json", doc);
    return fmt::format("{} levels, <r> = {:.4f}", spec.dimension(), st.gap_ratio.mean);
}

std::string dualcheck_command(const ScenarioConfig &c) {
    if (c.model.name != "h1") throw InvalidArgument("model.name: dualcheck requires model h1");
    auto get = [&](const char *k) {
        const auto it = c.model.scalars.find(k);
        return it == c.model.scalars.end() ? 0.0 : it->second;
    };
    const TransistorParams p{get("J"), get("gamma"), get("w"), get("Delta"), get("Dz"), get("hz")};
    const DualityReport r = duality_spectrum_check(p, c.length);
    json doc;
    doc["spectra_match"] = r.spectra_match;
    doc["max_deviation"] = std::isfinite(r.max_deviation) ? json(r.max_deviation) : json(nullptr);
    doc["sigma_sector"] = describe(r.sigma_sector);
    doc["tau_sector"] = describe(r.tau_sector);
    doc["sigma_dimension"] = r.sigma_dimension;
    doc["tau_dimension"] = r.tau_dimension;
    write_json(c, "dual.json", doc);
    return fmt::format("dimensions {} / {}, max deviation {:.3e}", r.sigma_dimension, r.tau_dimension, r.max_deviation);
}

std::string u1check_command(const ScenarioConfig &c) {
    const HamiltonianSpec h = build_model(c.model, c.length, c.boundary);
    U1Options opt;
    opt.epsilon = c.protocol.epsilon;
    opt.krylov = c.evolution.settings().krylov;
    const U1Report r = u1_macroscopic_check(h, c.u1.flips, parse_density(c.u1.density), c.protocol.times.values(), opt);
    json samples = json::array();
    for (const auto &s : r.samples)
        samples.push_back({{"t", s.time},
                           {"omega_size", s.omega_size},
                           {"expectation_difference", s.expectation_difference},
                           {"expectation_bound", s.expectation_bound},
                           {"variance", s.variance},
                           {"variance_bound", s.variance_bound},
                           {"sz_variance", s.sz_variance}});
    json doc;
    doc["flips"] = c.u1.flips;
    doc["density"] = c.u1.density;
    doc["density_norm"] = r.density_norm;
    doc["max_ratio_expectation"] = r.max_ratio_expectation;
    doc["max_ratio_variance"] = r.max_ratio_variance;
    doc["sz_variance_drift"] = r.sz_variance_drift;
    doc["bounds_hold"] = r.bounds_hold;
    doc["samples"] = samples;
    write_json(c, "u1.json", doc);
    return fmt::format("bounds hold: {} (max ratios {:.3f}, {:.3f})", r.bounds_hold, r.max_ratio_expectation,
                       r.max_ratio_variance);
}

std::string catreport_command(const ScenarioConfig &c) {
    const CatVerdict v = cat_report(c);
    json doc;
    doc["macroscopically_different"] = v.macroscopically_different;
    doc["cat_state"] = v.cat_state;
    doc["spreading"] = spreading_name(v.spreading);
    doc["details"] = {{"delta_sz_slope", v.delta_sz_slope},
                      {"delta_sz_ci_low", v.delta_sz_ci_low},
                      {"fit_half_pi", fit_json(v.fit_half_pi)},
                      {"fit_theta", v.fit_theta_ok ? fit_json(v.fit_theta) : json(nullptr)},
                      {"bimodality", bimodality_json(v.bimodality)}};
    write_json(c, "verdict.json", doc);
    return fmt::format("macroscopically_different={} cat_state={} spreading={}", v.macroscopically_different,
                       v.cat_state, spreading_name(v.spreading));
}

} // namespace

const std::vector<std::string> &command_names() {
    static const std::vector<std::string> names = {"scarcheck", "evolve",    "omega",    "fcs",      "quantumness",
                                                   "spectrum",  "dualcheck", "u1check", "catreport"};
    return names;
}

ProtocolRun run_protocol(const ScenarioConfig &c, double theta, bool with_regions) {
    validate_config(c);
    const HamiltonianSpec h = build_model(c.model, c.length, c.boundary);
    const int site = c.measurement_site();
    const auto settings = c.evolution.settings();
    const auto pre = pre_quench_of(c);
    ProtocolRun run;
    run.times = c.protocol.times.values();
    run.states = protocol_time_series(h, theta, site, run.times, pre, settings);
    for (const auto &s : run.states) run.delta_sz.push_back(delta_sz(s));
    if (with_regions) {
        const auto branch =
            theta == half_pi ? run.states : protocol_time_series(h, half_pi, site, run.times, pre, settings);
        for (const auto &s : branch) run.regions.push_back(effective_region(s, c.protocol.epsilon, site));
    }
    return run;
}

QuantumnessSeries quantumness_series(const ScenarioConfig &c, const ProtocolRun &run) {
    if (run.regions.size() != run.states.size()) throw InvalidArgument("quantumness series needs regions");
    QuantumnessSeries q;
    QuantumnessOptions opt;
    opt.tolerance = c.analysis.quantumness_tolerance;
    opt.max_iterations = c.analysis.quantumness_max_iterations;
    opt.seed = c.seed;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        const auto &region = run.regions[i];
        const auto k = covariance_matrix(run.states[i], region);
        const auto r = quantumness_iterative(k, opt);
        q.times.push_back(run.times[i]);
        q.omega_size.push_back(region.size());
        q.neff.push_back(r.value);
        q.converged.push_back(r.converged);
        const bool interior = region.left > 0 && region.right < c.length - 1;
        q.interior.push_back(interior);
        if (interior || !c.analysis.fit_interior_only) {
            xs.push_back(region.size());
            ys.push_back(r.value);
        }
    }
    try {
        q.fit = fit_growth(xs, ys);
        q.fit_ok = true;
    } catch (const InvalidArgument &e) {
        q.fit_error = e.what();
    }
    return q;
}

CatVerdict cat_report(const ScenarioConfig &c) {
    const ProtocolRun half = run_protocol(c, half_pi, true);
    ProtocolRun chosen;
    if (c.protocol.theta == half_pi) {
        chosen = half;
    } else {
        chosen = run_protocol(c, c.protocol.theta, false);
        chosen.regions = half.regions;
    }
    const QuantumnessSeries q_half = quantumness_series(c, half);
    const QuantumnessSeries q_chosen = quantumness_series(c, chosen);
    const FcsDistribution final_fcs = fcs(chosen.states.back(), c.protocol.theta);

    write_file(c, "omega.csv", omega_csv(half));
    write_file(c, "delta_sz.csv", delta_sz_csv(half));
    write_file(c, "neff.csv", neff_csv(q_chosen));
    write_file(c, "neff_half_pi.csv", neff_csv(q_half));
    write_file(c, fmt::format("fcs_{}.csv", chosen.times.back()), fcs_csv(final_fcs));

    CatVerdict v;
    const Trend trend = linear_trend(half.times, half.delta_sz);
    v.delta_sz_slope = trend.slope;
    v.delta_sz_ci_low = trend.ci_low;
    v.macroscopically_different = trend.ci_low > 0;
    if (!q_half.fit_ok) throw InvalidArgument(fmt::format("catreport: growth fit failed: {}", q_half.fit_error));
    v.fit_half_pi = q_half.fit;
    v.fit_half_pi_flat = is_flat(q_half.fit);
    v.fit_theta = q_chosen.fit;
    v.fit_theta_ok = q_chosen.fit_ok;
    v.bimodality = detect_bimodality(final_fcs, c.analysis.valley_threshold);
    v.cat_state = v.bimodality.separated && v.fit_half_pi_flat;
    v.spreading = half.times.size() >= 5 ? classify_spreading(half.times, half.regions).classification
                                         : Spreading::undetermined;
    return v;
}

std::string run_command(const std::string &command, const ScenarioConfig &c) {
    validate_config(c);
    if (command == "scarcheck") return scarcheck(c);
    if (command == "evolve") return evolve_command(c);
    if (command == "omega") return omega_command(c);
    if (command == "fcs") return fcs_command(c);
    if (command == "quantumness") return quantumness_command(c);
    if (command == "spectrum") return spectrum_command(c);
    if (command == "dualcheck") return dualcheck_command(c);
    if (command == "u1check") return u1check_command(c);
    if (command == "catreport") return catreport_command(c);
    throw InvalidArgument(fmt::format("unknown command '{}'", command));
}

} // namespace scarcat
