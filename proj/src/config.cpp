#include <pks/config.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <pks/errors.hpp>

namespace pks::cfg {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_real(const std::string& s, double& out) {
    const char* p = s.c_str();
    char* end = nullptr;
    out = std::strtod(p, &end);
    return end != p && *end == '\0';
}

bool parse_long(const std::string& s, long& out) {
    const char* p = s.c_str();
    char* end = nullptr;
    out = std::strtol(p, &end, 10);
    return end != p && *end == '\0';
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t cpos = line.find_first_of("#;");
        if (cpos != std::string::npos) line.erase(cpos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        kv[key] = val;
    }
    return kv;
}

KeyValues parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got: " + s);
        kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
}

int levenshtein(const std::string& a, const std::string& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

namespace {

Schema make_profile_schema() {
    return {
        {"b", {ValueKind::real_list, "1e-3", false,
               "comma-separated list of profile parameters b (0 < b <= 1e-2; 0 = ground state)"}},
        {"rmin", {ValueKind::real, "1e-4", false, "inner grid radius"}},
        {"rmax", {ValueKind::real, "0", false, "outer grid radius; 0 picks max(1e4, 5 B1) per b"}},
        {"n", {ValueKind::count, "0", false, "grid size; 0 picks the matched default per b"}},
        {"localized", {ValueKind::flag, "true", false,
                       "apply the outer cutoff to the corrections (full profile family)"}},
    };
}

Schema make_ode_schema() {
    return {
        {"b0", {ValueKind::real, "1e-2", false, "initial b (0 < b0 < 1/e)"}},
        {"lambda0", {ValueKind::real, "1", false, "initial scale"}},
        {"s_max", {ValueKind::real, "1e8", false, "renormalized-time horizon"}},
        {"rtol", {ValueKind::real, "1e-10", false, "relative step tolerance"}},
        {"atol", {ValueKind::real, "1e-14", false, "absolute step tolerance"}},
        {"records_per_decade", {ValueKind::count, "200", false, "output density in s"}},
    };
}

Schema make_simulate_schema() {
    return {
        {"b0", {ValueKind::real, "1e-2", false, "initial profile parameter (0 = ground state)"}},
        {"mass_excess", {ValueKind::real, "0", false,
                         "extra mass added multiplicatively on top of the profile"}},
        {"grid.rmin", {ValueKind::real, "1e-4", false, "inner grid radius"}},
        {"grid.rmax", {ValueKind::real, "1e4", false, "outer grid radius"}},
        {"grid.n", {ValueKind::count, "4096", false, "grid size"}},
        {"dt0", {ValueKind::real, "0.1", false, "step control: dt = dt0 / max |u|"}},
        {"lambda_stop", {ValueKind::real, "0.1", false, "stop when the effective scale reaches this"}},
        {"record_every", {ValueKind::count, "20", false, "steps between diagnostic records"}},
        {"M", {ValueKind::real, "20", false, "localization scale of the decomposition"}},
        {"frame", {ValueKind::text, "renormalized", false, "fixed | renormalized"}},
        {"trigger", {ValueKind::real, "4", false,
                     "renormalize when the central density reaches trigger * 8"}},
        {"decompose_every", {ValueKind::count, "10", false,
                             "records between decompositions (0 disables)"}},
        {"max_steps", {ValueKind::count, "300000", false, "hard step budget"}},
        {"t_max", {ValueKind::real, "0", false, "physical-time budget (0 disables)"}},
        {"checkpoint", {ValueKind::text, "", false,
                        "checkpoint path (default <out>/checkpoint.txt)"}},
        {"resume", {ValueKind::text, "", false, "resume from this checkpoint"}},
    };
}

Schema make_spectral_schema() {
    return {
        {"n", {ValueKind::count, "2048", false, "grid size for residuals and eigenproblems"}},
        {"rmin", {ValueKind::real, "1e-4", false, "inner grid radius"}},
        {"rmax", {ValueKind::real, "1e4", false, "outer grid radius"}},
        {"M", {ValueKind::real_list, "32,64,128", false,
               "localization scales for the direction construction"}},
        {"samples", {ValueKind::count, "200", false, "random fields per coercivity probe"}},
        {"coercivity_n", {ValueKind::count, "1024", false,
                          "grid size for the eigenvalue problems (0 skips them)"}},
    };
}

Schema make_report_schema() {
    return {
        {"dir", {ValueKind::text, "", false,
                 "directory holding profile/ode/spectral JSON outputs (default: --out)"}},
    };
}

}  // namespace

const Schema& schema_for(const std::string& subcommand) {
    static const std::map<std::string, Schema> all = {
        {"profile", make_profile_schema()},   {"ode", make_ode_schema()},
        {"simulate", make_simulate_schema()}, {"spectral", make_spectral_schema()},
        {"report", make_report_schema()},
    };
    const auto it = all.find(subcommand);
    if (it == all.end()) throw ConfigError("unknown subcommand: " + subcommand);
    return it->second;
}

namespace {

void type_check(const std::string& key, const FieldSpec& spec, const std::string& val) {
    switch (spec.kind) {
        case ValueKind::real: {
            double d;
            if (!parse_real(val, d))
                throw ConfigError("key '" + key + "': expected a real number, got '" + val + "'");
            break;
        }
        case ValueKind::count: {
            long l;
            if (!parse_long(val, l) || l < 0)
                throw ConfigError("key '" + key + "': expected a non-negative integer, got '" +
                                  val + "'");
            break;
        }
        case ValueKind::flag: {
            if (val != "true" && val != "false" && val != "1" && val != "0" && val != "yes" &&
                val != "no")
                throw ConfigError("key '" + key + "': expected a flag (true/false), got '" + val +
                                  "'");
            break;
        }
        case ValueKind::text:
            break;
        case ValueKind::real_list: {
            std::istringstream ss(val);
            std::string item;
            bool any = false;
            while (std::getline(ss, item, ',')) {
                double d;
                if (!parse_real(trim(item), d))
                    throw ConfigError("key '" + key + "': expected comma-separated reals, got '" +
                                      val + "'");
                any = true;
            }
            if (!any)
                throw ConfigError("key '" + key + "': expected comma-separated reals, got '" +
                                  val + "'");
            break;
        }
    }
}

}  // namespace

KeyValues validate(const std::string& subcommand, const KeyValues& kv) {
    const Schema& schema = schema_for(subcommand);
    for (const auto& [key, val] : kv) {
        const auto it = schema.find(key);
        if (it == schema.end()) {
            int best = 1 << 20;
            std::string suggestion;
            for (const auto& [skey, spec] : schema) {
                const int d = levenshtein(key, skey);
                if (d < best) {
                    best = d;
                    suggestion = skey;
                }
            }
            std::string msg = "unknown key '" + key + "' for subcommand '" + subcommand + "'";
            if (best <= 2) msg += "; did you mean '" + suggestion + "'?";
            throw ConfigError(msg);
        }
        type_check(key, it->second, val);
    }
    KeyValues out = kv;
    for (const auto& [skey, spec] : schema) {
        if (out.count(skey)) continue;
        if (spec.required)
            throw ConfigError("missing required key '" + skey + "' for subcommand '" +
                              subcommand + "'");
        out[skey] = spec.default_value;
    }
    return out;
}

namespace {

const std::string& fetch(const KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw UsageError("config key not present: " + key);
    return it->second;
}

}  // namespace

double as_real(const KeyValues& kv, const std::string& key) {
    double d;
    if (!parse_real(fetch(kv, key), d))
        throw ConfigError("key '" + key + "': expected a real number");
    return d;
}

long as_count(const KeyValues& kv, const std::string& key) {
    long l;
    if (!parse_long(fetch(kv, key), l) || l < 0)
        throw ConfigError("key '" + key + "': expected a non-negative integer");
    return l;
}

bool as_flag(const KeyValues& kv, const std::string& key) {
    const std::string& v = fetch(kv, key);
    return v == "true" || v == "1" || v == "yes";
}

const std::string& as_text(const KeyValues& kv, const std::string& key) {
    return fetch(kv, key);
}

std::vector<double> as_reals(const KeyValues& kv, const std::string& key) {
    std::istringstream ss(fetch(kv, key));
    std::string item;
    std::vector<double> out;
    while (std::getline(ss, item, ',')) {
        double d;
        if (!parse_real(trim(item), d))
            throw ConfigError("key '" + key + "': expected comma-separated reals");
        out.push_back(d);
    }
    return out;
}

}  // namespace pks::cfg
