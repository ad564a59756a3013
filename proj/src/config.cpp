#include "lrcov/config.hpp"
#include "lrcov/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace lrcov {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

double parse_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("bad number for " + key + ": '" + v + "'");
    return x;
}

Index parse_index(const std::string& key, const std::string& v)
{
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("bad integer for " + key + ": '" + v + "'");
    return static_cast<Index>(x);
}

bool parse_bool(const std::string& key, const std::string& v)
{
    const std::string s = lower(v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class E>
std::string enum_name(E e, const std::vector<std::pair<std::string, E>>& table)
{
    for (const auto& [name, val] : table)
        if (val == e) return name;
    return "?";
}

template <class E>
E enum_parse(const std::string& key, const std::string& v, const std::vector<std::pair<std::string, E>>& table)
{
    for (const auto& [name, val] : table)
        if (name == lower(v)) return val;
    std::string opts;
    for (const auto& [name, val] : table) opts += (opts.empty() ? "" : "|") + name;
    throw ConfigError("bad value for " + key + ": '" + v + "' (expected " + opts + ")");
}

const std::vector<std::pair<std::string, ProblemKind>> kProblems = {
    {"heat", ProblemKind::Heat}, {"convdiff", ProblemKind::ConvDiff},
    {"steady-poisson", ProblemKind::SteadyPoisson}};
const std::vector<std::pair<std::string, ParamMode>> kModes = {
    {"ic", ParamMode::InitialCondition}, {"source", ParamMode::Source}};
const std::vector<std::pair<std::string, PriorPreset>> kPriors = {
    {"scalar", PriorPreset::Scalar}, {"beta", PriorPreset::Beta}};

#define LRCOV_DOUBLE(name)                                                                   \
    {#name, {[](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); },    \
             [](const RunConfig& c) { return format_double(c.name); }}}
#define LRCOV_INDEX(name)                                                                    \
    {#name, {[](RunConfig& c, const std::string& v) { c.name = parse_index(#name, v); },     \
             [](const RunConfig& c) { return std::to_string(c.name); }}}

const std::vector<std::pair<std::string, Field>>& fields()
{
    static const std::vector<std::pair<std::string, Field>> table = {
        {"problem", {[](RunConfig& c, const std::string& v) { c.problem = enum_parse("problem", v, kProblems); },
                     [](const RunConfig& c) { return enum_name(c.problem, kProblems); }}},
        {"mode", {[](RunConfig& c, const std::string& v) { c.mode = enum_parse("mode", v, kModes); },
                  [](const RunConfig& c) { return enum_name(c.mode, kModes); }}},
        LRCOV_INDEX(n_side),
        LRCOV_INDEX(n_t),
        LRCOV_DOUBLE(t_final),
        LRCOV_DOUBLE(nu),
        {"wind", {[](RunConfig& c, const std::string& v) {
                      const auto comma = v.find(',');
                      if (comma == std::string::npos) throw ConfigError("wind expects 'wx,wy'");
                      c.wind = {parse_double("wind", trim(v.substr(0, comma))),
                                parse_double("wind", trim(v.substr(comma + 1)))};
                  },
                  [](const RunConfig& c) { return format_double(c.wind[0]) + "," + format_double(c.wind[1]); }}},
        LRCOV_DOUBLE(beta_ratio),
        {"prior", {[](RunConfig& c, const std::string& v) { c.prior = enum_parse("prior", v, kPriors); },
                   [](const RunConfig& c) { return enum_name(c.prior, kPriors); }}},
        LRCOV_DOUBLE(gamma_prior),
        LRCOV_DOUBLE(beta_prior),
        {"sensors", {[](RunConfig& c, const std::string& v) { c.sensors = lower(v); },
                     [](const RunConfig& c) { return c.sensors; }}},
        LRCOV_DOUBLE(eps0),
        LRCOV_INDEX(r_max),
        LRCOV_DOUBLE(eps_eig),
        LRCOV_INDEX(m_a),
        LRCOV_INDEX(check_every),
        LRCOV_DOUBLE(stability_tol),
        LRCOV_INDEX(nev),
        {"restart", {[](RunConfig& c, const std::string& v) { c.restart = parse_bool("restart", v); },
                     [](const RunConfig& c) { return std::string(c.restart ? "true" : "false"); }}},
        LRCOV_INDEX(k),
        LRCOV_INDEX(oracle_k),
        LRCOV_INDEX(oracle_cap),
        LRCOV_DOUBLE(oracle_retain),
        {"seed", {[](RunConfig& c, const std::string& v) {
                      const Index s = parse_index("seed", v);
                      if (s < 0) throw ConfigError("seed must be nonnegative");
                      c.seed = static_cast<std::uint64_t>(s);
                  },
                  [](const RunConfig& c) { return std::to_string(c.seed); }}},
        {"out", {[](RunConfig& c, const std::string& v) { c.out = v; },
                 [](const RunConfig& c) { return c.out; }}},
    };
    return table;
}

#undef LRCOV_DOUBLE
#undef LRCOV_INDEX

const Field& find_field(const std::string& key)
{
    for (const auto& [name, f] : fields())
        if (name == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

} // namespace

std::string format_double(double x)
{
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

const std::vector<std::string>& RunConfig::keys()
{
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, f] : fields()) out.push_back(name);
        return out;
    }();
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    std::string k = lower(trim(key));
    std::replace(k.begin(), k.end(), '-', '_');
    find_field(k).set(*this, trim(value));
}

std::string RunConfig::get(const std::string& key) const { return find_field(key).get(*this); }

void RunConfig::validate() const
{
    if (n_side < 2) throw ConfigError("n_side must be >= 2");
    if (problem != ProblemKind::SteadyPoisson && n_t < 1) throw ConfigError("n_t must be >= 1");
    if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
    if (problem == ProblemKind::ConvDiff && !(nu > 0.0)) throw ConfigError("nu must be positive");
    if (!(beta_ratio > 0.0)) throw ConfigError("beta_ratio must be positive");
    if (!(gamma_prior > 0.0)) throw ConfigError("gamma_prior must be positive");
    if (!(beta_prior > 0.0)) throw ConfigError("beta_prior must be positive");
    if (!(eps0 >= 0.0 && eps0 < 1.0)) throw ConfigError("eps0 must lie in [0, 1)");
    if (r_max < 0) throw ConfigError("r_max must be >= 0");
    if (!(eps_eig > 0.0)) throw ConfigError("eps_eig must be positive");
    if (m_a < 1) throw ConfigError("m_a must be >= 1");
    if (check_every < 1) throw ConfigError("check_every must be >= 1");
    if (!(stability_tol > 0.0)) throw ConfigError("stability_tol must be positive");
    if (nev < 0) throw ConfigError("nev must be >= 0");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (oracle_k < 1) throw ConfigError("oracle_k must be >= 1");
    if (oracle_cap < 1) throw ConfigError("oracle_cap must be >= 1");
    if (!(oracle_retain > 0.0)) throw ConfigError("oracle_retain must be positive");
    if (problem == ProblemKind::SteadyPoisson && mode == ParamMode::Source)
        throw ConfigError("steady-poisson has no time axis; use mode=ic");
    if (out.empty()) throw ConfigError("out must be nonempty");
}

void RunConfig::write(std::ostream& os) const
{
    for (const auto& key : keys()) os << key << '=' << get(key) << '\n';
}

void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& origin)
{
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        try {
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    apply_config_text(cfg, in, path);
}

void apply_env(RunConfig& cfg)
{
    for (const auto& key : RunConfig::keys()) {
        std::string var = "LRCOV_" + key;
        std::transform(var.begin(), var.end(), var.begin(), [](unsigned char c) { return std::toupper(c); });
        if (const char* v = std::getenv(var.c_str())) {
            try {
                cfg.set(key, v);
            } catch (const ConfigError& e) {
                throw ConfigError(var + ": " + e.what());
            }
        }
    }
}

std::string flag_name(const std::string& key)
{
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

} // namespace lrcov
