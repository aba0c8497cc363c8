#include <pks/io.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <pks/errors.hpp>

namespace pks::io {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidDataError("cannot read file for digest: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::map<std::string, std::map<std::string, std::string>> make_docs() {
    std::map<std::string, std::map<std::string, std::string>> d;
    d["profile_fields.csv"] = {
        {"r", "radial node"},
        {"Q", "ground state 8/(1+r^2)^2"},
        {"T1", "first-order profile correction"},
        {"Sigma_b", "radiation term at this b"},
        {"T2", "second-order profile correction"},
        {"Qb_tilde", "assembled profile Q + b chi T1 + b^2 chi T2"},
        {"Psi_b_tilde", "localized profile error field"},
    };
    d["profile.json"] = {
        {"runs[].b", "profile parameter"},
        {"runs[].B0", "radiation cutoff radius 1/sqrt(b)"},
        {"runs[].B1", "localization cutoff radius |log b|/sqrt(b)"},
        {"runs[].c_b", "radiation normalization constant"},
        {"runs[].d_b", "outer radiation amplitude"},
        {"runs[].mass_excess", "mass of Qb minus 8 pi"},
        {"runs[].int_Psit2", "plane integral of Psi_b_tilde^2"},
        {"runs[].int_Psit2_log2_over_b5", "error-size statistic, O(1) in b"},
        {"runs[].G2_log2_over_b4", "gradient statistic of the M-image of the error"},
        {"runs[].flux_logb_over_b2", "flux pairing against the tapered r^2 direction"},
        {"runs[].noise", "1 when the error field is roundoff-dominated"},
        {"runs[].grid_rmax", "outer radius used for this b"},
        {"runs[].grid_n", "grid size used for this b"},
        {"checks[].name", "named diagnostic gate"},
        {"checks[].value", "measured value"},
        {"checks[].lo", "lower admissible bound"},
        {"checks[].hi", "upper admissible bound"},
        {"checks[].pass", "whether value lies in [lo, hi]"},
    };
    d["ode_trajectory.csv"] = {
        {"s", "renormalized time"},
        {"t", "physical time"},
        {"lambda", "scale"},
        {"b", "modulation parameter"},
        {"b_asymptote_ratio", "b divided by (log s - log log s)/(2s)"},
        {"R", "blow-up speed statistic at this record"},
    };
    d["ode.json"] = {
        {"terminal.T", "extrapolated blow-up time"},
        {"terminal.tail", "T minus the final integration time"},
        {"terminal.conclusive", "whether the rate-law check resolved"},
        {"terminal.used_terminal", "terminal extrapolation (true) or power-law fallback"},
        {"terminal.R_min", "min of R over the resolved window"},
        {"terminal.R_max", "max of R over the resolved window"},
        {"terminal.window_count", "records in the resolved window"},
        {"endpoint.s", "final renormalized time"},
        {"endpoint.t", "final physical time"},
        {"endpoint.b", "final b"},
        {"endpoint.lambda", "final scale"},
        {"endpoint.asymptote_ratio", "final b over the predicted asymptote"},
        {"checks[].name", "named diagnostic gate"},
        {"checks[].value", "measured value"},
        {"checks[].lo", "lower admissible bound"},
        {"checks[].hi", "upper admissible bound"},
        {"checks[].pass", "whether value lies in [lo, hi]"},
    };
    d["trajectory.csv"] = {
        {"t", "physical time"},
        {"s", "renormalized time"},
        {"lambda", "effective scale lambda_frame * lambda_pin"},
        {"b_pinned", "minus the smoothed d log(lambda)/ds"},
        {"b_orth", "b from the orthogonality decomposition (nan between cadences)"},
        {"mass", "2 pi m at the last interior node"},
        {"free_energy", "free energy unscaled to the original frame"},
        {"second_moment", "second moment unscaled to the original frame"},
        {"virial_residual", "relative defect of the second-moment identity"},
    };
    d["events.csv"] = {
        {"step", "step index at the renormalization event"},
        {"t", "physical time at the event"},
        {"s", "renormalized time at the event"},
        {"lambda_frame", "frame scale after the event"},
        {"resample_error", "roundtrip error of the resampling"},
    };
    d["simulate.json"] = {
        {"stop_reason", "lambda_stop | t_max | max_steps"},
        {"steps", "total steps taken"},
        {"records", "diagnostic records written"},
        {"events", "renormalization events"},
        {"final.t", "final physical time"},
        {"final.s", "final renormalized time"},
        {"final.lambda_eff", "final effective scale"},
        {"final.mass", "final total mass"},
        {"subcritical", "initial mass at or below 8 pi"},
        {"checks[].name", "named diagnostic gate"},
        {"checks[].value", "measured value"},
        {"checks[].lo", "lower admissible bound"},
        {"checks[].hi", "upper admissible bound"},
        {"checks[].pass", "whether value lies in [lo, hi]"},
    };
    d["spectral.json"] = {
        {"kernel[].name", "kernel identity"},
        {"kernel[].residual", "relative residual at the requested grid"},
        {"kernel[].order", "refinement order from n/2 (null at roundoff floor)"},
        {"directions[].M", "localization scale"},
        {"directions[].c_M", "mixing constant of the direction"},
        {"directions[].cM_logM_over_M2", "normalized mixing constant"},
        {"directions[].inner_T1_rel", "(Phi_M, T1) normalized by the norms"},
        {"directions[].inner_LamQ", "(Phi_M, LamQ)"},
        {"directions[].ref_32pi_logM", "reference constant -32 pi log M"},
        {"directions[].ref_24_logM", "reference constant -24 log M"},
        {"directions[].ratio_32pi", "inner_LamQ / ref_32pi_logM"},
        {"directions[].ratio_24", "inner_LamQ / ref_24_logM"},
        {"coercivity_M.n", "grid size of the eigenproblem"},
        {"coercivity_M.delta0", "constrained minimum of the linearized-energy form"},
        {"coercivity_M.unprojected_min", "unconstrained minimum (kernel detection)"},
        {"coercivity_M.constraint_res_mass", "mass-constraint residual of the minimizer"},
        {"coercivity_M.constraint_res_lamq", "scaling-constraint residual of the minimizer"},
        {"coercivity_M.asymmetry", "metric asymmetry of the assembled form"},
        {"coercivity_M.n_kept", "nodes kept after the boundary taper"},
        {"coercivity_L[].M", "localization scale"},
        {"coercivity_L[].min_ratio1", "min (M L eps, L eps)/||L eps||^2"},
        {"coercivity_L[].min_ratio2", "min ||L eps||^2 / weighted-Sobolev energy"},
        {"coercivity_L[].samples", "admissible random fields"},
        {"coercivity_L[].skipped", "degenerate draws"},
        {"coercivity_L[].kernel_ratio2", "ratio2 of the unprojected kernel direction"},
        {"checks[].name", "named diagnostic gate"},
        {"checks[].value", "measured value"},
        {"checks[].lo", "lower admissible bound"},
        {"checks[].hi", "upper admissible bound"},
        {"checks[].pass", "whether value lies in [lo, hi]"},
    };
    d["report.json"] = {
        {"sources[]", "artifact files aggregated"},
        {"checks[].name", "source-qualified gate name"},
        {"checks[].value", "measured value"},
        {"checks[].lo", "lower admissible bound"},
        {"checks[].hi", "upper admissible bound"},
        {"checks[].pass", "whether value lies in [lo, hi]"},
        {"pass", "conjunction of all aggregated checks"},
    };
    d["manifest.json"] = {
        {"artifact_version", "artifact format tag"},
        {"subcommand", "subcommand that produced the outputs"},
        {"seed", "seed echoed from the command line"},
        {"config.*", "validated configuration with defaults filled"},
        {"files[].name", "emitted file"},
        {"files[].fnv1a64", "content digest"},
        {"timings_s.*", "wall-clock timings (not part of determinism)"},
    };
    return d;
}

void collect_leaf_paths(const nlohmann::json& j, const std::string& prefix,
                        std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            collect_leaf_paths(v, prefix.empty() ? k : prefix + "." + k, out);
        }
    } else if (j.is_array()) {
        for (const auto& v : j) collect_leaf_paths(v, prefix + "[]", out);
        if (j.empty()) out.push_back(prefix + "[]");
    } else {
        out.push_back(prefix);
    }
}

bool documented(const std::map<std::string, std::string>& docs, const std::string& path) {
    if (docs.count(path)) return true;
    // wildcard subtrees: "config.*" documents every key below "config"
    for (const auto& [key, doc] : docs) {
        if (key.size() >= 2 && key.back() == '*' &&
            path.compare(0, key.size() - 1, key, 0, key.size() - 1) == 0)
            return true;
    }
    return false;
}

const std::map<std::string, std::string>& docs_for(const std::string& artifact) {
    const auto& all = field_docs();
    const auto it = all.find(artifact);
    if (it == all.end())
        throw UsageError("no documented schema for artifact '" + artifact + "'");
    return it->second;
}

}  // namespace

const std::map<std::string, std::map<std::string, std::string>>& field_docs() {
    static const auto docs = make_docs();
    return docs;
}

void write_schema(const std::string& path) {
    nlohmann::json j(nlohmann::json::value_t::object);
    for (const auto& [artifact, fields] : field_docs()) {
        nlohmann::json f(nlohmann::json::value_t::object);
        for (const auto& [name, doc] : fields) f[name] = doc;
        j[artifact] = f;
    }
    std::ofstream out(path);
    if (!out) throw InvalidDataError("cannot write schema file: " + path);
    out << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const std::string& artifact,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    const auto& docs = docs_for(artifact);
    for (const std::string& c : columns)
        if (!docs.count(c))
            throw UsageError("undocumented column '" + c + "' for artifact '" + artifact + "'");
    std::ofstream out(path);
    if (!out) throw InvalidDataError("cannot write file: " + path);
    for (size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw UsageError("csv row width does not match the header");
        for (size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << fmt17(row[k]);
        out << "\n";
    }
    if (!out) throw InvalidDataError("write failed: " + path);
}

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDataError("cannot read file: " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) throw InvalidDataError("empty csv: " + path);
    {
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) csv.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str())
                throw InvalidDataError("unparseable csv cell '" + cell + "' in " + path);
            row.push_back(v);
        }
        if (row.size() != csv.columns.size())
            throw InvalidDataError("ragged csv row in " + path);
        csv.rows.push_back(std::move(row));
    }
    return csv;
}

void write_json(const std::string& path, const std::string& artifact,
                const nlohmann::json& j) {
    const auto& docs = docs_for(artifact);
    std::vector<std::string> paths;
    collect_leaf_paths(j, "", paths);
    for (const std::string& p : paths)
        if (!documented(docs, p))
            throw UsageError("undocumented field '" + p + "' for artifact '" + artifact + "'");
    std::ofstream out(path);
    if (!out) throw InvalidDataError("cannot write file: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw InvalidDataError("write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDataError("cannot read file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidDataError("malformed json in " + path + ": " + e.what());
    }
    return j;
}

void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j;
    j["artifact_version"] = m.artifact_version;
    j["subcommand"] = m.subcommand;
    j["seed"] = m.seed;
    nlohmann::json cfg(nlohmann::json::value_t::object);
    for (const auto& [k, v] : m.config) cfg[k] = v;
    j["config"] = cfg;
    nlohmann::json files(nlohmann::json::value_t::array);
    for (const auto& [name, digest] : m.files) {
        nlohmann::json f;
        f["name"] = name;
        f["fnv1a64"] = digest;
        files.push_back(f);
    }
    j["files"] = files;
    nlohmann::json t(nlohmann::json::value_t::object);
    for (const auto& [k, v] : m.timings_s) t[k] = v;
    j["timings_s"] = t;
    write_json(path, "manifest.json", j);
}

void write_checkpoint(const std::string& path, const num::RadialGrid& g,
                      const sim::SimState& st) {
    std::ofstream out(path);
    if (!out) throw InvalidDataError("cannot write checkpoint: " + path);
    out << "pks-checkpoint 1\n";
    out << "rmin " << fmt17(g.rmin) << " rmax " << fmt17(g.rmax) << " n " << g.n << "\n";
    out << "t " << fmt17(st.t) << "\n";
    out << "s " << fmt17(st.s) << "\n";
    out << "lambda_frame " << fmt17(st.lambda_frame) << "\n";
    out << "lambda_pin " << fmt17(st.lambda_pin) << "\n";
    out << "step " << st.step << "\n";
    out << "mass_initial " << fmt17(st.mass_initial) << "\n";
    out << "subcritical " << (st.subcritical ? 1 : 0) << "\n";
    out << "mbc " << fmt17(st.mbc) << "\n";
    out << "m " << st.m.size() << "\n";
    for (const double v : st.m) out << fmt17(v) << "\n";
    if (!out) throw InvalidDataError("write failed: " + path);
}

namespace {

void expect_token(std::istream& in, const char* tok, const std::string& path) {
    std::string got;
    if (!(in >> got) || got != tok)
        throw InvalidDataError("malformed checkpoint " + path + ": expected '" +
                               tok + "', got '" + got + "'");
}

}  // namespace

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDataError("cannot read checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "pks-checkpoint" || version != 1)
        throw InvalidDataError("not a recognized checkpoint: " + path);
    Checkpoint cp;
    expect_token(in, "rmin", path);
    in >> cp.rmin;
    expect_token(in, "rmax", path);
    in >> cp.rmax;
    expect_token(in, "n", path);
    in >> cp.n;
    expect_token(in, "t", path);
    in >> cp.state.t;
    expect_token(in, "s", path);
    in >> cp.state.s;
    expect_token(in, "lambda_frame", path);
    in >> cp.state.lambda_frame;
    expect_token(in, "lambda_pin", path);
    in >> cp.state.lambda_pin;
    expect_token(in, "step", path);
    in >> cp.state.step;
    expect_token(in, "mass_initial", path);
    in >> cp.state.mass_initial;
    expect_token(in, "subcritical", path);
    int sub = 0;
    in >> sub;
    cp.state.subcritical = sub != 0;
    expect_token(in, "mbc", path);
    in >> cp.state.mbc;
    expect_token(in, "m", path);
    size_t count = 0;
    in >> count;
    if (!in || cp.n <= 0 || count != static_cast<size_t>(cp.n))
        throw InvalidDataError("malformed checkpoint " + path + ": bad sizes");
    cp.state.m.resize(count);
    for (size_t i = 0; i < count; ++i) {
        if (!(in >> cp.state.m[i]))
            throw InvalidDataError("malformed checkpoint " + path + ": truncated data");
    }
    return cp;
}

}  // namespace pks::io
