#include "scarcat/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "scarcat/errors.hpp"

namespace scarcat {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string &raw, const std::string &path) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw InvalidArgument(fmt::format("{}: '{}' is not a finite number", path, raw));
    return v;
}

// Accepts a plain number or a multiple of pi such as "pi/4" or "3*pi/4".
double parse_angle(const std::string &raw, const std::string &path) {
    const std::string s = trim(raw);
    const auto pos = s.find("pi");
    if (pos == std::string::npos) return parse_number(s, path);
    double factor = 1.0, divisor = 1.0;
    std::string head = trim(s.substr(0, pos));
    if (!head.empty()) {
        if (head.back() == '*') head.pop_back();
        factor = head == "-" ? -1.0 : parse_number(head, path);
    }
    const std::string tail = trim(s.substr(pos + 2));
    if (!tail.empty()) {
        if (tail.front() != '/') throw InvalidArgument(fmt::format("{}: cannot parse angle '{}'", path, raw));
        divisor = parse_number(tail.substr(1), path);
        if (divisor == 0.0) throw InvalidArgument(fmt::format("{}: division by zero", path));
    }
    return factor * std::numbers::pi / divisor;
}

long long parse_integer(const std::string &raw, const std::string &path) {
    const std::string s = trim(raw);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InvalidArgument(fmt::format("{}: '{}' is not an integer", path, raw));
    return v;
}

int parse_int(const std::string &raw, const std::string &path) {
    const long long v = parse_integer(raw, path);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw InvalidArgument(fmt::format("{}: {} out of range", path, v));
    return static_cast<int>(v);
}

bool parse_bool(const std::string &raw, const std::string &path) {
    const std::string s = trim(raw);
    if (s == "true") return true;
    if (s == "false") return false;
    throw InvalidArgument(fmt::format("{}: expected true or false, got '{}'", path, raw));
}

int parse_sign(const std::string &raw, const std::string &path) {
    const int v = parse_int(raw, path);
    if (v != 1 && v != -1) throw InvalidArgument(fmt::format("{}: expected +1 or -1", path));
    return v;
}

std::vector<double> parse_list(const std::string &raw, const std::string &path) {
    std::vector<double> out;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_number(item, path));
    }
    return out;
}

std::string format_list(const std::vector<double> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt::format("{}", v[i]);
    return out;
}

const std::set<std::string> &scalar_keys(const std::string &model) {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"h1", {"J", "gamma", "w", "Delta", "Dz", "hz"}},
        {"h2", {"hz"}},
        {"ising", {"h0z"}},
        {"tilted_ising", {"h0z", "h0x"}},
        {"h_tau", {"J", "gamma", "w", "Dz", "hz"}},
    };
    const auto it = keys.find(model);
    if (it == keys.end())
        throw InvalidArgument(
            fmt::format("model.name: unknown model '{}' (expected h1, h2, ising, tilted_ising, h_tau)", model));
    return it->second;
}

const std::set<std::string> &list_keys(const std::string &model) {
    static const std::set<std::string> h2 = {"J_r", "gamma_x_r", "gamma_y_r", "gamma_z_r", "D_x_r", "D_y_r", "D_z_r"};
    static const std::set<std::string> none;
    return model == "h2" ? h2 : none;
}

ModelConfig parse_model(const pt::ptree &section, const std::string &prefix) {
    ModelConfig m;
    const auto name = section.get_optional<std::string>("name");
    if (!name) throw InvalidArgument(fmt::format("{}.name: missing", prefix));
    m.name = trim(*name);
    const auto &scalars = scalar_keys(m.name);
    const auto &lists = list_keys(m.name);
    for (const auto &[key, node] : section) {
        const std::string path = prefix + "." + key;
        if (key == "name" || (prefix == "pre_quench" && key == "t0")) continue;
        if (scalars.count(key))
            m.scalars[key] = parse_number(node.data(), path);
        else if (lists.count(key))
            m.lists[key] = parse_list(node.data(), path);
        else
            throw InvalidArgument(fmt::format("{}: unknown key for model '{}'", path, m.name));
    }
    return m;
}

void write_model(std::string &out, const ModelConfig &m) {
    out += fmt::format("name = {}\n", m.name);
    for (const auto &[k, v] : m.scalars) out += fmt::format("{} = {}\n", k, v);
    for (const auto &[k, v] : m.lists) out += fmt::format("{} = {}\n", k, format_list(v));
}

double scalar(const ModelConfig &m, const char *key) {
    const auto it = m.scalars.find(key);
    return it == m.scalars.end() ? 0.0 : it->second;
}

std::vector<double> list(const ModelConfig &m, const char *key) {
    const auto it = m.lists.find(key);
    return it == m.lists.end() ? std::vector<double>{} : it->second;
}

void require_keys(const pt::ptree &section, const std::string &name, const std::set<std::string> &allowed) {
    for (const auto &[key, node] : section) {
        if (!node.empty()) throw InvalidArgument(fmt::format("{}.{}: nested sections are not supported", name, key));
        if (!allowed.count(key)) throw InvalidArgument(fmt::format("{}.{}: unknown key", name, key));
    }
}

} // namespace

std::vector<double> TimeGrid::values() const {
    if (!explicit_times.empty()) return explicit_times;
    std::vector<double> out;
    for (int i = 1; i <= steps; ++i) out.push_back(t_max * i / steps);
    return out;
}

EvolutionSettings EvolutionConfig::settings() const {
    EvolutionSettings s;
    s.method = method;
    s.krylov.dimension = krylov_dim;
    s.krylov.tolerance = tolerance;
    s.trotter.dt = dt;
    return s;
}

ScenarioConfig parse_config(const std::string &text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw InvalidArgument(fmt::format("config syntax error: {}", e.what()));
    }
    static const std::set<std::string> sections = {"model", "chain", "protocol", "evolution", "pre_quench",
                                                   "output", "spectrum", "analysis", "u1"};
    for (const auto &[key, node] : tree) {
        if (node.empty()) throw InvalidArgument(fmt::format("{}: keys must belong to a section", key));
        if (!sections.count(key)) throw InvalidArgument(fmt::format("{}: unknown section", key));
    }

    ScenarioConfig c;
    if (const auto s = tree.get_child_optional("model"))
        c.model = parse_model(*s, "model");
    else
        throw InvalidArgument("model: section missing");

    if (const auto s = tree.get_child_optional("chain")) {
        require_keys(*s, "chain", {"length", "boundary"});
        if (const auto v = s->get_optional<std::string>("length")) c.length = parse_int(*v, "chain.length");
        if (const auto v = s->get_optional<std::string>("boundary")) {
            try {
                c.boundary = parse_boundary(trim(*v));
            } catch (const InvalidArgument &e) {
                throw InvalidArgument(fmt::format("chain.boundary: {}", e.what()));
            }
        }
    }

    if (const auto s = tree.get_child_optional("protocol")) {
        require_keys(*s, "protocol", {"theta", "site", "times", "t_max", "steps", "epsilon"});
        if (const auto v = s->get_optional<std::string>("theta")) c.protocol.theta = parse_angle(*v, "protocol.theta");
        if (const auto v = s->get_optional<std::string>("site")) {
            if (trim(*v) != "center") c.protocol.site = parse_int(*v, "protocol.site");
        }
        if (const auto v = s->get_optional<std::string>("times")) {
            if (s->count("t_max") || s->count("steps"))
                throw InvalidArgument("protocol.times: give either times or t_max/steps, not both");
            c.protocol.times.explicit_times = parse_list(*v, "protocol.times");
        }
        if (const auto v = s->get_optional<std::string>("t_max"))
            c.protocol.times.t_max = parse_number(*v, "protocol.t_max");
        if (const auto v = s->get_optional<std::string>("steps"))
            c.protocol.times.steps = parse_int(*v, "protocol.steps");
        if (const auto v = s->get_optional<std::string>("epsilon"))
            c.protocol.epsilon = parse_number(*v, "protocol.epsilon");
    }

    if (const auto s = tree.get_child_optional("evolution")) {
        require_keys(*s, "evolution", {"method", "dt", "krylov_dim", "tolerance"});
        if (const auto v = s->get_optional<std::string>("method")) {
            try {
                c.evolution.method = parse_method(trim(*v));
            } catch (const InvalidArgument &e) {
                throw InvalidArgument(fmt::format("evolution.method: {}", e.what()));
            }
        }
        if (const auto v = s->get_optional<std::string>("dt")) c.evolution.dt = parse_number(*v, "evolution.dt");
        if (const auto v = s->get_optional<std::string>("krylov_dim"))
            c.evolution.krylov_dim = parse_int(*v, "evolution.krylov_dim");
        if (const auto v = s->get_optional<std::string>("tolerance"))
            c.evolution.tolerance = parse_number(*v, "evolution.tolerance");
    }

    if (const auto s = tree.get_child_optional("pre_quench")) {
        PreQuenchConfig p;
        p.model = parse_model(*s, "pre_quench");
        const auto t0 = s->get_optional<std::string>("t0");
        if (!t0) throw InvalidArgument("pre_quench.t0: missing");
        p.t0 = parse_number(*t0, "pre_quench.t0");
        c.pre_quench = p;
    }

    if (const auto s = tree.get_child_optional("output")) {
        require_keys(*s, "output", {"directory", "seed"});
        if (const auto v = s->get_optional<std::string>("directory")) c.output_directory = trim(*v);
        if (const auto v = s->get_optional<std::string>("seed")) {
            const long long seed = parse_integer(*v, "output.seed");
            if (seed < 0) throw InvalidArgument("output.seed: must be non-negative");
            c.seed = static_cast<std::uint64_t>(seed);
        }
    }

    if (const auto s = tree.get_child_optional("spectrum")) {
        require_keys(*s, "spectrum",
                     {"magnetization", "momentum", "parity_x", "parity_z", "parity_z_even", "zero_semilocal_charge",
                      "degree", "trim"});
        auto &sp = c.spectrum;
        if (const auto v = s->get_optional<std::string>("magnetization"))
            sp.magnetization = parse_number(*v, "spectrum.magnetization");
        if (const auto v = s->get_optional<std::string>("momentum")) sp.momentum = parse_int(*v, "spectrum.momentum");
        if (const auto v = s->get_optional<std::string>("parity_x")) sp.parity_x = parse_sign(*v, "spectrum.parity_x");
        if (const auto v = s->get_optional<std::string>("parity_z")) sp.parity_z = parse_sign(*v, "spectrum.parity_z");
        if (const auto v = s->get_optional<std::string>("parity_z_even"))
            sp.parity_z_even = parse_sign(*v, "spectrum.parity_z_even");
        if (const auto v = s->get_optional<std::string>("zero_semilocal_charge"))
            sp.zero_semilocal_charge = parse_bool(*v, "spectrum.zero_semilocal_charge");
        if (const auto v = s->get_optional<std::string>("degree")) sp.degree = parse_int(*v, "spectrum.degree");
        if (const auto v = s->get_optional<std::string>("trim")) sp.trim = parse_number(*v, "spectrum.trim");
    }

    if (const auto s = tree.get_child_optional("analysis")) {
        require_keys(*s, "analysis",
                     {"valley_threshold", "quantumness_tolerance", "quantumness_max_iterations", "fit_interior_only"});
        auto &a = c.analysis;
        if (const auto v = s->get_optional<std::string>("valley_threshold"))
            a.valley_threshold = parse_number(*v, "analysis.valley_threshold");
        if (const auto v = s->get_optional<std::string>("quantumness_tolerance"))
            a.quantumness_tolerance = parse_number(*v, "analysis.quantumness_tolerance");
        if (const auto v = s->get_optional<std::string>("quantumness_max_iterations"))
            a.quantumness_max_iterations = parse_int(*v, "analysis.quantumness_max_iterations");
        if (const auto v = s->get_optional<std::string>("fit_interior_only"))
            a.fit_interior_only = parse_bool(*v, "analysis.fit_interior_only");
    }

    if (const auto s = tree.get_child_optional("u1")) {
        require_keys(*s, "u1", {"flips", "density"});
        if (const auto v = s->get_optional<std::string>("flips")) c.u1.flips = parse_int(*v, "u1.flips");
        if (const auto v = s->get_optional<std::string>("density")) c.u1.density = trim(*v);
    }

    validate_config(c);
    return c;
}

ScenarioConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open config file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig &c) {
    std::string out = "[model]\n";
    write_model(out, c.model);
    out += fmt::format("\n[chain]\nlength = {}\nboundary = {}\n", c.length, boundary_name(c.boundary));
    out += fmt::format("\n[protocol]\ntheta = {}\nsite = {}\n", c.protocol.theta,
                       c.protocol.site ? std::to_string(*c.protocol.site) : std::string("center"));
    if (!c.protocol.times.explicit_times.empty())
        out += fmt::format("times = {}\n", format_list(c.protocol.times.explicit_times));
    else
        out += fmt::format("t_max = {}\nsteps = {}\n", c.protocol.times.t_max, c.protocol.times.steps);
    out += fmt::format("epsilon = {}\n", c.protocol.epsilon);
    out += fmt::format("\n[evolution]\nmethod = {}\ndt = {}\nkrylov_dim = {}\ntolerance = {}\n",
                       method_name(c.evolution.method), c.evolution.dt, c.evolution.krylov_dim, c.evolution.tolerance);
    if (c.pre_quench) {
        out += "\n[pre_quench]\n";
        write_model(out, c.pre_quench->model);
        out += fmt::format("t0 = {}\n", c.pre_quench->t0);
    }
    out += fmt::format("\n[output]\ndirectory = {}\nseed = {}\n", c.output_directory, c.seed);
    const auto &sp = c.spectrum;
    out += "\n[spectrum]\n";
    if (sp.magnetization) out += fmt::format("magnetization = {}\n", *sp.magnetization);
    if (sp.momentum) out += fmt::format("momentum = {}\n", *sp.momentum);
    if (sp.parity_x) out += fmt::format("parity_x = {}\n", *sp.parity_x);
    if (sp.parity_z) out += fmt::format("parity_z = {}\n", *sp.parity_z);
    if (sp.parity_z_even) out += fmt::format("parity_z_even = {}\n", *sp.parity_z_even);
    out += fmt::format("zero_semilocal_charge = {}\ndegree = {}\ntrim = {}\n", sp.zero_semilocal_charge, sp.degree,
                       sp.trim);
    const auto &a = c.analysis;
    out += fmt::format("\n[analysis]\nvalley_threshold = {}\nquantumness_tolerance = {}\n"
                       "quantumness_max_iterations = {}\nfit_interior_only = {}\n",
                       a.valley_threshold, a.quantumness_tolerance, a.quantumness_max_iterations, a.fit_interior_only);
    out += fmt::format("\n[u1]\nflips = {}\ndensity = {}\n", c.u1.flips, c.u1.density);
    return out;
}

void validate_config(const ScenarioConfig &c) {
    if (c.length < 1 || c.length > default_state_cap)
        throw InvalidArgument(fmt::format("chain.length: {} outside [1, {}]", c.length, default_state_cap));
    try {
        build_model(c.model, c.length, c.boundary);
    } catch (const InvalidArgument &e) {
        throw InvalidArgument(fmt::format("model: {}", e.what()));
    }
    if (c.protocol.site && (*c.protocol.site < 0 || *c.protocol.site >= c.length))
        throw InvalidArgument(fmt::format("protocol.site: {} outside chain of length {}", *c.protocol.site, c.length));
    if (!(c.protocol.epsilon > 0 && c.protocol.epsilon < 1)) throw InvalidArgument("protocol.epsilon: must lie in (0, 1)");
    if (c.protocol.times.explicit_times.empty()) {
        if (c.protocol.times.steps < 1) throw InvalidArgument("protocol.steps: must be positive");
        if (!(c.protocol.times.t_max > 0)) throw InvalidArgument("protocol.t_max: must be positive");
    }
    double prev = 0.0;
    for (double t : c.protocol.times.explicit_times) {
        if (t < prev) throw InvalidArgument("protocol.times: must be non-negative and non-decreasing");
        prev = t;
    }
    if (!(c.evolution.dt > 0)) throw InvalidArgument("evolution.dt: must be positive");
    if (c.evolution.krylov_dim < 2) throw InvalidArgument("evolution.krylov_dim: must be at least 2");
    if (!(c.evolution.tolerance > 0)) throw InvalidArgument("evolution.tolerance: must be positive");
    if (c.pre_quench) {
        if (c.pre_quench->model.name != "ising" && c.pre_quench->model.name != "tilted_ising")
            throw InvalidArgument("pre_quench.name: must be ising or tilted_ising");
        if (!(c.pre_quench->t0 >= 0)) throw InvalidArgument("pre_quench.t0: must be non-negative");
        try {
            build_model(c.pre_quench->model, c.length, c.boundary);
        } catch (const InvalidArgument &e) {
            throw InvalidArgument(fmt::format("pre_quench: {}", e.what()));
        }
    }
    if (c.output_directory.empty()) throw InvalidArgument("output.directory: must not be empty");
    if (c.spectrum.degree < 1) throw InvalidArgument("spectrum.degree: must be positive");
    if (!(c.spectrum.trim >= 0 && c.spectrum.trim < 0.5)) throw InvalidArgument("spectrum.trim: must lie in [0, 0.5)");
    if (!(c.analysis.valley_threshold > 0)) throw InvalidArgument("analysis.valley_threshold: must be positive");
    if (!(c.analysis.quantumness_tolerance > 0)) throw InvalidArgument("analysis.quantumness_tolerance: must be positive");
    if (c.analysis.quantumness_max_iterations < 1)
        throw InvalidArgument("analysis.quantumness_max_iterations: must be positive");
    if (c.u1.flips < 1) throw InvalidArgument("u1.flips: must be positive");
    try {
        parse_density(c.u1.density);
    } catch (const InvalidArgument &e) {
        throw InvalidArgument(fmt::format("u1.density: {}", e.what()));
    }
}

HamiltonianSpec build_model(const ModelConfig &m, int length, Boundary boundary) {
    scalar_keys(m.name); // rejects unknown names
    if (m.name == "h1")
        return build_h1({scalar(m, "J"), scalar(m, "gamma"), scalar(m, "w"), scalar(m, "Delta"), scalar(m, "Dz"),
                         scalar(m, "hz")},
                        length, boundary);
    if (m.name == "h2") {
        PairwiseParams p;
        p.J = list(m, "J_r");
        p.gamma_x = list(m, "gamma_x_r");
        p.gamma_y = list(m, "gamma_y_r");
        p.gamma_z = list(m, "gamma_z_r");
        p.D_x = list(m, "D_x_r");
        p.D_y = list(m, "D_y_r");
        p.D_z = list(m, "D_z_r");
        p.hz = scalar(m, "hz");
        return build_h2(p, length, boundary);
    }
    if (m.name == "ising") return build_h0(IsingVariant::ising, {scalar(m, "h0z"), 0.0}, length, boundary);
    if (m.name == "tilted_ising")
        return build_h0(IsingVariant::tilted_ising, {scalar(m, "h0z"), scalar(m, "h0x")}, length, boundary);
    return build_h_tau({scalar(m, "J"), scalar(m, "gamma"), scalar(m, "w"), scalar(m, "Dz"), scalar(m, "hz")}, length,
                       boundary);
}

HamiltonianSpec parse_density(const std::string &text) {
    // Optional leading coefficient, then factors like "x0 x1".
    std::istringstream in(text);
    std::string token;
    PauliTerm term{1.0, {}};
    int max_site = -1;
    bool first = true;
    while (in >> token) {
        if (first && (std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '-' || token[0] == '.')) {
            term.coefficient = parse_number(token, "density");
            first = false;
            continue;
        }
        first = false;
        if (token.size() < 2) throw InvalidArgument(fmt::format("bad Pauli factor '{}'", token));
        const int site = parse_int(token.substr(1), "density");
        if (site < 0) throw InvalidArgument(fmt::format("negative site in '{}'", token));
        term.factors.push_back({site, parse_axis(token[0])});
        max_site = std::max(max_site, site);
    }
    if (term.factors.empty()) throw InvalidArgument(fmt::format("density '{}' has no Pauli factors", text));
    std::sort(term.factors.begin(), term.factors.end(),
              [](const PauliFactor &a, const PauliFactor &b) { return a.site < b.site; });
    HamiltonianSpec h{max_site + 1, Boundary::open, {term}, "density"};
    validate(h);
    return h;
}

} // namespace scarcat
