#include "cpg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cpg/format.hpp"

namespace cpg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct RawConfig {
    // section -> ordered key/value pairs
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
        sections;

    const std::vector<std::pair<std::string, std::string>>* find(
        const std::string& name) const {
        for (const auto& s : sections)
            if (s.first == name) return &s.second;
        return nullptr;
    }
};

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno),
                                  "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            raw.sections.push_back({section, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno),
                              "expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno),
                              "key outside any [section]");
        raw.sections.back().second.push_back(
            {trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return raw;
}

double parse_number(const std::string& path, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
        return x;
    } catch (const std::exception& e) {
        throw ConfigError(path, std::string("bad numeric value '") + v + "' (" +
                                    e.what() + ")");
    }
}

long long parse_int(const std::string& path, const std::string& v) {
    long long x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(path, "bad integer value '" + v + "'");
    return x;
}

bool parse_bool(const std::string& path, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(path, "bad boolean value '" + v + "'");
}

class SectionReader {
  public:
    SectionReader(const RawConfig& raw, std::string name) : name_(std::move(name)) {
        if (const auto* kv = raw.find(name_))
            for (const auto& [k, v] : *kv) values_[k] = v;
    }

    std::optional<std::string> take(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        std::string v = it->second;
        values_.erase(it);
        return v;
    }

    void finish() const {
        if (!values_.empty())
            throw ConfigError(name_ + "." + values_.begin()->first, "unknown key");
    }

    std::string path(const std::string& key) const { return name_ + "." + key; }

  private:
    std::string name_;
    std::map<std::string, std::string> values_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
    const RawConfig raw = tokenize(text);
    for (const auto& s : raw.sections)
        if (s.first != "system" && s.first != "integrator" && s.first != "run" &&
            s.first != "sweep")
            throw ConfigError(s.first, "unknown section");

    RunConfig cfg;
    auto echo = [&](const std::string& key, const std::string& v) {
        cfg.echo.push_back(key + " = " + v);
    };

    // --- [system]: all physical parameters required, no defaults ---
    SectionReader sys(raw, "system");
    auto required = [&](const char* key) -> double {
        auto v = sys.take(key);
        if (!v)
            throw ConfigError(sys.path(key), "missing required physical parameter");
        return parse_number(sys.path(key), *v);
    };
    auto optional_phase = [&](const char* key) -> double {
        auto v = sys.take(key);
        return v ? parse_number(sys.path(key), *v) : 0.0;
    };
    const double gA = required("g_A");
    const double gB = required("g_B");
    const double OmA = required("Omega_A");
    const double OmB = required("Omega_B");
    cfg.system.g_A = std::polar(gA, optional_phase("g_A_phase_rad"));
    cfg.system.g_B = std::polar(gB, optional_phase("g_B_phase_rad"));
    cfg.system.Omega_A = std::polar(OmA, optional_phase("Omega_A_phase_rad"));
    cfg.system.Omega_B = std::polar(OmB, optional_phase("Omega_B_phase_rad"));
    cfg.system.Delta_A = required("Delta_A");
    cfg.system.Delta_B = required("Delta_B");
    cfg.system.delta = required("delta");
    cfg.system.nu = required("nu");
    cfg.system.tau_c = required("tau_c");
    cfg.system.tau_e = required("tau_e");
    if (auto v = sys.take("n_max"))
        cfg.system.n_max = int(parse_int(sys.path("n_max"), *v));
    sys.finish();
    echo("system.g_A", fmt_double(gA));
    echo("system.g_B", fmt_double(gB));
    echo("system.Omega_A", fmt_double(OmA));
    echo("system.Omega_B", fmt_double(OmB));
    echo("system.Delta_A", fmt_double(cfg.system.Delta_A));
    echo("system.Delta_B", fmt_double(cfg.system.Delta_B));
    echo("system.delta", fmt_double(cfg.system.delta));
    echo("system.nu", fmt_double(cfg.system.nu));
    echo("system.tau_c", fmt_double(cfg.system.tau_c));
    echo("system.tau_e", fmt_double(cfg.system.tau_e));
    echo("system.n_max", std::to_string(cfg.system.n_max));

    // --- [integrator]: defaults allowed ---
    SectionReader integ(raw, "integrator");
    if (auto v = integ.take("method")) {
        auto m = method_from_name(*v);
        if (!m) throw ConfigError(integ.path("method"), "unknown method '" + *v + "'");
        cfg.integrator.method = *m;
    }
    if (auto v = integ.take("dt"))
        cfg.integrator.dt = parse_number(integ.path("dt"), *v);
    if (cfg.integrator.dt <= 0.0)
        throw ConfigError(integ.path("dt"), "dt must be > 0");
    if (auto v = integ.take("sample_every"))
        cfg.integrator.sample_every = int(parse_int(integ.path("sample_every"), *v));
    if (auto v = integ.take("max_steps"))
        cfg.integrator.max_steps = parse_int(integ.path("max_steps"), *v);
    if (auto v = integ.take("allow_unstable_dt"))
        cfg.integrator.allow_unstable_dt =
            parse_bool(integ.path("allow_unstable_dt"), *v);
    if (auto v = integ.take("snapshot_stride"))
        cfg.integrator.snapshot_stride =
            int(parse_int(integ.path("snapshot_stride"), *v));
    integ.finish();
    echo("integrator.method", method_name(cfg.integrator.method));
    echo("integrator.dt", fmt_double(cfg.integrator.dt));
    echo("integrator.sample_every", std::to_string(cfg.integrator.sample_every));

    // --- [run]: defaults allowed ---
    SectionReader run(raw, "run");
    if (auto v = run.take("engine")) {
        const bool known = protocol_engine_from_name(*v).has_value() ||
                           source_from_name(*v).has_value();
        if (!known)
            throw ConfigError(run.path("engine"), "unknown engine '" + *v + "'");
        cfg.run.engine = *v;
    }
    if (auto v = run.take("horizon"))
        cfg.run.horizon = parse_number(run.path("horizon"), *v);
    if (auto v = run.take("initial")) cfg.run.initial = *v;
    if (auto v = run.take("with_decay"))
        cfg.run.with_decay = parse_bool(run.path("with_decay"), *v);
    if (auto v = run.take("calibrate"))
        cfg.run.calibrate = parse_bool(run.path("calibrate"), *v);
    if (auto v = run.take("seed"))
        cfg.run.seed = std::uint64_t(parse_int(run.path("seed"), *v));
    if (auto v = run.take("n_trajectories"))
        cfg.run.n_trajectories = int(parse_int(run.path("n_trajectories"), *v));
    if (auto v = run.take("sample_dt"))
        cfg.run.sample_dt = parse_number(run.path("sample_dt"), *v);
    run.finish();
    echo("run.engine", cfg.run.engine);
    echo("run.horizon", fmt_double(cfg.run.horizon));
    echo("run.initial", cfg.run.initial);
    echo("run.with_decay", cfg.run.with_decay ? "true" : "false");
    echo("run.seed", std::to_string(cfg.run.seed));
    echo("run.sample_dt", fmt_double(cfg.run.sample_dt));

    cfg.system.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::optional<SweepSpec> parse_sweep(const std::string& text) {
    const RawConfig raw = tokenize(text);
    const auto* kv = raw.find("sweep");
    if (!kv) return std::nullopt;
    SweepSpec spec;
    bool have_values = false;
    for (const auto& [k, v] : *kv) {
        if (k == "parameter") {
            spec.parameter = v;
        } else if (k == "values") {
            have_values = true;
            std::istringstream ss(v);
            std::string tok;
            while (std::getline(ss, tok, ','))
                spec.values.push_back(parse_number("sweep.values", trim(tok)));
        } else if (k == "range") {
            have_values = true;
            std::istringstream ss(v);
            std::string a, b, c;
            if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
                !std::getline(ss, c))
                throw ConfigError("sweep.range", "expected start:stop:step");
            const double start = parse_number("sweep.range", trim(a));
            const double stop = parse_number("sweep.range", trim(b));
            const double step = parse_number("sweep.range", trim(c));
            if (step <= 0.0) throw ConfigError("sweep.range", "step must be > 0");
            for (double x = start; x <= stop + 1e-12 * std::abs(step); x += step)
                spec.values.push_back(x);
        } else {
            throw ConfigError("sweep." + k, "unknown key");
        }
    }
    if (spec.parameter.empty())
        throw ConfigError("sweep.parameter", "missing parameter name");
    if (!have_values || spec.values.empty())
        throw ConfigError("sweep.values", "sweep needs at least one point");
    return spec;
}

SystemParams with_parameter(const SystemParams& base, const std::string& name,
                            double value) {
    SystemParams p = base;
    if (name == "g_A") p.g_A = std::polar(value, std::arg(base.g_A));
    else if (name == "g_B") p.g_B = std::polar(value, std::arg(base.g_B));
    else if (name == "Omega_A") p.Omega_A = std::polar(value, std::arg(base.Omega_A));
    else if (name == "Omega_B") p.Omega_B = std::polar(value, std::arg(base.Omega_B));
    else if (name == "Delta_A") p.Delta_A = value;
    else if (name == "Delta_B") p.Delta_B = value;
    else if (name == "delta") p.delta = value;
    else if (name == "nu") p.nu = value;
    else if (name == "tau_c") p.tau_c = value;
    else if (name == "tau_e") p.tau_e = value;
    else if (name == "n_max") p.n_max = int(std::lround(value));
    else throw ConfigError("sweep.parameter", "unknown parameter '" + name + "'");
    return p;
}

StateVector initial_state(const RunConfig& cfg, const HilbertSpace& space) {
    const std::string& label = cfg.run.initial;
    for (int s = 0; s < 4; ++s)
        if (label == kCompLabels[s]) return computational_state(space, s);
    if (label.rfind("custom:", 0) == 0) {
        std::istringstream ss(label.substr(7));
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ','))
            vals.push_back(parse_number("run.initial", trim(tok)));
        if (vals.size() != 8)
            throw ConfigError("run.initial",
                              "custom state needs 8 numbers (re,im x 4)");
        Vector v = Vector::Zero(space.total_dim());
        for (int s = 0; s < 4; ++s) {
            const StateVector b = computational_state(space, s);
            Eigen::Index idx;
            b.amplitudes.cwiseAbs().maxCoeff(&idx);
            v[idx] = Complex(vals[2 * s], vals[2 * s + 1]);
        }
        const double n = v.norm();
        if (n <= 0.0) throw ConfigError("run.initial", "custom state has zero norm");
        return StateVector(space, v / n);
    }
    throw ConfigError("run.initial", "unknown initial state '" + label + "'");
}

}  // namespace cpg
