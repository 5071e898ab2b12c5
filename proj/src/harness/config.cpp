#include "parlr/harness.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace parlr::harness {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    std::ostringstream msg;
    msg << "invalid value '" << value << "' for key '" << key << "': expected " << expected;
    throw InvalidInput(msg.str());
}

double parse_double(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, value, "a number");
    }
    return out;
}

long long parse_integer(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, value, "an integer");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    bad_value(key, value, "true or false");
}

template <class Parse>
auto parse_enum(std::string_view key, std::string_view value, Parse parse, std::string_view expected) {
    try {
        return parse(trim(value));
    } catch (const InvalidInput&) {
        bad_value(key, value, expected);
    }
}

std::vector<double> parse_list(std::string_view key, std::string_view value) {
    std::vector<double> out;
    const std::string v = trim(value);
    std::size_t start = 0;
    while (start <= v.size() && !v.empty()) {
        const auto comma = v.find(',', start);
        const std::string item = v.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(parse_double(key, item));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += format_number(values[i]);
    }
    return out;
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::planesource:
            return "planesource";
        case ProblemKind::sylvester:
            return "sylvester";
        case ProblemKind::tangential:
            return "tangential";
    }
    return "?";
}

ProblemKind parse_problem(std::string_view name) {
    if (name == "planesource") {
        return ProblemKind::planesource;
    }
    if (name == "sylvester") {
        return ProblemKind::sylvester;
    }
    if (name == "tangential") {
        return ProblemKind::tangential;
    }
    throw InvalidInput("unknown problem: " + std::string(name));
}

std::string_view to_string(Metric metric) {
    return metric == Metric::flux_l2_rel ? "flux_l2_rel" : "dense_l2_rel";
}

Metric parse_metric(std::string_view name) {
    if (name == "flux_l2_rel") {
        return Metric::flux_l2_rel;
    }
    if (name == "dense_l2_rel") {
        return Metric::dense_l2_rel;
    }
    throw InvalidInput("unknown metric: " + std::string(name));
}

std::string_view to_string(ThetaRule rule) { return rule == ThetaRule::fixed ? "fixed" : "h_squared"; }

ThetaRule parse_theta_rule(std::string_view name) {
    if (name == "fixed") {
        return ThetaRule::fixed;
    }
    if (name == "h_squared") {
        return ThetaRule::h_squared;
    }
    throw InvalidInput("unknown theta rule: " + std::string(name));
}

void RunConfig::set(std::string_view key, std::string_view value) {
    if (key == "problem") {
        problem = parse_enum(key, value, parse_problem, "planesource|sylvester|tangential");
    } else if (key == "integrator") {
        integrator = parse_enum(key, value, parse_stepper, "parallel|parallel_serial_s11|bug");
    } else if (key == "theta_bar") {
        theta_bar = parse_double(key, value);
    } else if (key == "theta_mode") {
        theta_mode = parse_enum(key, value, parse_theta_mode, "absolute|relative");
    } else if (key == "c_reject") {
        c_reject = parse_double(key, value);
    } else if (key == "r_max") {
        r_max = parse_integer(key, value);
    } else if (key == "max_retries") {
        max_retries = static_cast<int>(parse_integer(key, value));
    } else if (key == "reject") {
        reject = parse_bool(key, value);
    } else if (key == "substep_method") {
        substep_method = parse_enum(key, value, parse_ode_kind, "euler|rk4");
    } else if (key == "substep_count") {
        substep_count = static_cast<int>(parse_integer(key, value));
    } else if (key == "eta_columns") {
        eta_columns = parse_integer(key, value);
    } else if (key == "nx") {
        nx = parse_integer(key, value);
    } else if (key == "nmoments") {
        nmoments = parse_integer(key, value);
    } else if (key == "cfl") {
        cfl = parse_double(key, value);
    } else if (key == "initial_rank") {
        initial_rank = parse_integer(key, value);
    } else if (key == "sylvester_m") {
        sylvester_m = parse_integer(key, value);
    } else if (key == "sylvester_n") {
        sylvester_n = parse_integer(key, value);
    } else if (key == "sylvester_rank") {
        sylvester_rank = parse_integer(key, value);
    } else if (key == "sylvester_decay") {
        sylvester_decay = parse_double(key, value);
    } else if (key == "tangential_m") {
        tangential_m = parse_integer(key, value);
    } else if (key == "tangential_n") {
        tangential_n = parse_integer(key, value);
    } else if (key == "t_end") {
        t_end = parse_double(key, value);
    } else if (key == "snapshots") {
        snapshot_times = parse_list(key, value);
    } else if (key == "h") {
        h = parse_double(key, value);
    } else if (key == "seed") {
        const long long s = parse_integer(key, value);
        if (s < 0) {
            bad_value(key, value, "a non-negative integer");
        }
        seed = static_cast<std::uint64_t>(s);
    } else if (key == "output_dir") {
        output_dir = trim(value);
    } else {
        throw InvalidInput("unknown config key '" + std::string(key) + "'");
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    auto num = [](double v) { return format_number(v); };
    auto integer = [](long long v) { return std::to_string(v); };
    return {
        {"problem", std::string(to_string(problem))},
        {"integrator", std::string(to_string(integrator))},
        {"theta_bar", num(theta_bar)},
        {"theta_mode", std::string(to_string(theta_mode))},
        {"c_reject", num(c_reject)},
        {"r_max", integer(r_max)},
        {"max_retries", integer(max_retries)},
        {"reject", reject ? "true" : "false"},
        {"substep_method", std::string(to_string(substep_method))},
        {"substep_count", integer(substep_count)},
        {"eta_columns", integer(eta_columns)},
        {"nx", integer(nx)},
        {"nmoments", integer(nmoments)},
        {"cfl", num(cfl)},
        {"initial_rank", integer(initial_rank)},
        {"sylvester_m", integer(sylvester_m)},
        {"sylvester_n", integer(sylvester_n)},
        {"sylvester_rank", integer(sylvester_rank)},
        {"sylvester_decay", num(sylvester_decay)},
        {"tangential_m", integer(tangential_m)},
        {"tangential_n", integer(tangential_n)},
        {"t_end", num(t_end)},
        {"snapshots", join(snapshot_times)},
        {"h", num(h)},
        {"seed", std::to_string(seed)},
        {"output_dir", output_dir.string()},
    };
}

void RunConfig::validate() const {
    auto fail = [](std::string_view key, std::string_view why) {
        throw InvalidInput("invalid value for key '" + std::string(key) + "': " + std::string(why));
    };
    if (!(theta_bar >= 0.0)) {
        fail("theta_bar", "must be >= 0");
    }
    if (!(c_reject > 0.0)) {
        fail("c_reject", "must be > 0");
    }
    if (max_retries < 0) {
        fail("max_retries", "must be >= 0");
    }
    if (substep_count < 1) {
        fail("substep_count", "must be >= 1");
    }
    if (!(t_end >= 0.0)) {
        fail("t_end", "must be >= 0");
    }
    if (h < 0.0) {
        fail("h", "must be >= 0 (0 selects the default)");
    }
    for (double tau : snapshot_times) {
        if (!(tau >= 0.0 && tau <= t_end)) {
            fail("snapshots", "times must lie in [0, t_end]");
        }
    }
    if (output_dir.empty()) {
        fail("output_dir", "must not be empty");
    }
    switch (problem) {
        case ProblemKind::planesource:
            if (nx < 3) {
                fail("nx", "must be >= 3");
            }
            if (nmoments < 2) {
                fail("nmoments", "must be >= 2");
            }
            if (!(cfl > 0.0 && cfl <= 1.0)) {
                fail("cfl", "must lie in (0, 1]");
            }
            if (initial_rank < 1 || initial_rank > std::min(nx, nmoments)) {
                fail("initial_rank", "must lie in [1, min(nx, nmoments)]");
            }
            break;
        case ProblemKind::sylvester:
            if (sylvester_m < 1 || sylvester_n < 1) {
                fail("sylvester_m", "sizes must be >= 1");
            }
            if (sylvester_rank < 1 || sylvester_rank > std::min(sylvester_m, sylvester_n)) {
                fail("sylvester_rank", "must lie in [1, min(m, n)]");
            }
            if (!(sylvester_decay > 0.0)) {
                fail("sylvester_decay", "must be > 0");
            }
            break;
        case ProblemKind::tangential:
            if (tangential_m < 6 || tangential_n < 6) {
                fail("tangential_m", "sizes must be >= 6");
            }
            break;
    }
}

void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput(std::string(origin) + ":" + std::to_string(number) + ": expected key=value");
        }
        config.set(trim(std::string_view(stripped).substr(0, eq)), trim(std::string_view(stripped).substr(eq + 1)));
    }
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(base, text.str(), path.string());
    return base;
}

StepConfig step_config(const RunConfig& config) {
    StepConfig cfg;
    cfg.theta_bar = config.theta_bar;
    cfg.theta_mode = config.theta_mode;
    cfg.c_reject = config.c_reject;
    cfg.r_max = config.r_max;
    cfg.max_retries = config.max_retries;
    cfg.reject = config.reject;
    cfg.substep = OdeMethod{config.substep_method, config.substep_count};
    if (config.eta_columns > 0) {
        cfg.eta_columns = config.eta_columns;
    }
    return cfg;
}

}  // namespace parlr::harness
