// Command-line front end: profile | ode | simulate | spectral | report.
// Every run writes its artifacts plus schema.json and manifest.json (config
// echo, content digests, timings) into the --out directory. Exit codes:
// 0 success, 2 configuration error, 3 numeric failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <pks/config.hpp>
#include <pks/errors.hpp>
#include <pks/grid.hpp>
#include <pks/ground_state.hpp>
#include <pks/io.hpp>
#include <pks/modulation.hpp>
#include <pks/operators.hpp>
#include <pks/profiles.hpp>
#include <pks/solver.hpp>
#include <pks/spectral.hpp>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using pks::cfg::as_count;
using pks::cfg::as_flag;
using pks::cfg::as_real;
using pks::cfg::as_reals;
using pks::cfg::as_text;

constexpr double kPi = 3.14159265358979323846;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Args {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    long seed = 0;
};

pks::cfg::KeyValues load_config(const std::string& subcommand, const Args& a) {
    pks::cfg::KeyValues kv;
    if (!a.config_path.empty()) kv = pks::cfg::parse_config_file(a.config_path);
    pks::cfg::apply_overrides(kv, a.sets);
    return pks::cfg::validate(subcommand, kv);
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// Collects the artifacts of one run: paths under --out, manifest digests,
// phase timings. finish() emits schema.json and manifest.json last.
class Emitter {
  public:
    Emitter(const std::string& subcommand, const Args& a, const pks::cfg::KeyValues& kv)
        : dir_(a.out_dir) {
        manifest_.artifact_version = "pks-1";
        manifest_.subcommand = subcommand;
        manifest_.seed = a.seed;
        manifest_.config = kv;
    }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    void note(const std::string& name) { note_at(name, path(name)); }
    void note_at(const std::string& name, const std::string& file_path) {
        manifest_.files.emplace_back(name, pks::io::hex64(pks::io::fnv1a64_file(file_path)));
    }
    void timing(const std::string& key, double seconds) { manifest_.timings_s[key] = seconds; }

    void finish() {
        pks::io::write_schema(path("schema.json"));
        note("schema.json");
        timing("total", total_.seconds());
        pks::io::write_manifest(path("manifest.json"), manifest_);
    }

  private:
    std::string dir_;
    pks::io::RunManifest manifest_;
    Timer total_;
};

json check_entry(const std::string& name, double value, double lo, double hi) {
    json c;
    c["name"] = name;
    c["value"] = value;
    c["lo"] = lo;
    c["hi"] = hi;
    c["pass"] = std::isfinite(value) && value >= lo && value <= hi;
    return c;
}

int worker_count(int jobs) {
    int w = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PKS_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw pks::ConfigError("PKS_WORKERS must be a positive integer, got '" +
                                   std::string(env) + "'");
        w = static_cast<int>(v);
    }
    return std::max(1, std::min(w, jobs));
}

std::string short_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// ---------------------------------------------------------------- profile

struct ProfileResult {
    double b = 0.0, B0 = 0.0, B1 = 0.0, cb = 0.0, db = 0.0;
    double mass_excess = 0.0;
    double int_psit2 = 0.0;
    double stat_i2 = kNan;    // int |Psi~|^2 * log^2 b / b^5
    double stat_g2 = kNan;    // int Q |grad M Psi~|^2 * log^2 b / b^4
    double stat_flux = kNan;  // (Psi~, Lstar(chi_B0 r^2)) * |log b| / b^2
    bool noise = false;
    double grid_rmax = 0.0;
    int grid_n = 0;
    std::vector<std::vector<double>> rows;  // r, Q, T1, Sigma_b, T2, Qb~, Psi~
};

ProfileResult build_one_profile(double b, double rmin, double rmax, long n, bool localized) {
    const pks::num::RadialGrid g = (n <= 0 || rmax <= 0.0)
                                       ? pks::prof::profile_grid(b, rmin)
                                       : pks::num::build_grid(rmin, rmax, static_cast<int>(n));
    const auto fam = pks::prof::assemble_profile(g, b, localized);
    const auto err = pks::prof::compute_error(fam);

    ProfileResult out;
    out.b = b;
    out.B0 = fam.B0;
    out.B1 = fam.B1;
    out.cb = fam.cb;
    out.db = fam.db;
    out.noise = err.noise_flag;
    out.grid_rmax = g.rmax;
    out.grid_n = g.n;
    out.mass_excess = pks::num::integrate_plane(g, fam.Qb) - 8.0 * kPi;

    const double l2 = pks::ops::norm_l2_plane(g, err.Psi_tilde);
    out.int_psit2 = l2 * l2;
    if (b > 0.0) {
        const double lg = std::log(b);
        // gradient of M Psi~: d_r(Psi~/Q) + m_{Psi~}/r, the potential slope
        // being the partial mass over r
        const size_t nn = static_cast<size_t>(g.n);
        std::vector<double> over_q(nn), qgrad2(nn);
        for (size_t i = 0; i < nn; ++i) over_q[i] = err.Psi_tilde[i] / pks::gs::Q(g.r[i]);
        const auto dq = pks::num::d_r(g, over_q, 4);
        const auto pm = pks::ops::partial_mass_vec(g, err.Psi_tilde);
        for (size_t i = 0; i < nn; ++i) {
            const double gm = dq[i] + pm[i] / g.r[i];
            qgrad2[i] = pks::gs::Q(g.r[i]) * gm * gm;
        }
        const double G2 = pks::num::integrate_plane(g, qgrad2);

        std::vector<double> dir(nn);
        for (size_t i = 0; i < nn; ++i)
            dir[i] = pks::gs::chi(g.r[i] / fam.B0) * g.r[i] * g.r[i];
        const auto ls = pks::ops::apply_Lstar(
            pks::num::RadialField(g, dir, pks::num::FieldRole::generic), 4);
        const double flux = pks::num::inner_plane(g, err.Psi_tilde, ls.v);

        out.stat_i2 = out.int_psit2 * lg * lg / std::pow(b, 5);
        out.stat_g2 = G2 * lg * lg / std::pow(b, 4);
        out.stat_flux = flux * std::abs(lg) / (b * b);
    }

    out.rows.reserve(static_cast<size_t>(g.n));
    for (size_t i = 0; i < static_cast<size_t>(g.n); ++i) {
        out.rows.push_back({g.r[i], pks::gs::Q(g.r[i]), fam.t1.T1[i], fam.rad.Sb[i],
                            fam.t2.T2[i], fam.Qb[i], err.Psi_tilde[i]});
    }
    return out;
}

void run_profile(const Args& a) {
    const auto kv = load_config("profile", a);
    Emitter em("profile", a, kv);

    const auto bs = as_reals(kv, "b");
    if (bs.empty()) throw pks::ConfigError("profile: key 'b' needs at least one value");
    const double rmin = as_real(kv, "rmin");
    const double rmax = as_real(kv, "rmax");
    const long n = as_count(kv, "n");
    const bool localized = as_flag(kv, "localized");

    Timer build_t;
    const size_t nb = bs.size();
    std::vector<ProfileResult> results(nb);
    std::vector<std::exception_ptr> errors(nb);
    const int nw = worker_count(static_cast<int>(nb));
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (size_t i; (i = next.fetch_add(1)) < nb;) {
            try {
                results[i] = build_one_profile(bs[i], rmin, rmax, n, localized);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (nw <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(nw));
        for (int k = 0; k < nw; ++k) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    em.timing("build", build_t.seconds());

    const std::vector<std::string> cols = {"r",  "Q",        "T1",         "Sigma_b",
                                           "T2", "Qb_tilde", "Psi_b_tilde"};
    json runs(json::value_t::array);
    for (const auto& res : results) {
        const std::string name = "profile_fields_b" + short_real(res.b) + ".csv";
        pks::io::write_csv(em.path(name), "profile_fields.csv", cols, res.rows);
        em.note(name);
        json r;
        r["b"] = res.b;
        r["B0"] = res.B0;
        r["B1"] = res.B1;
        r["c_b"] = res.cb;
        r["d_b"] = res.db;
        r["mass_excess"] = res.mass_excess;
        r["int_Psit2"] = res.int_psit2;
        r["int_Psit2_log2_over_b5"] = res.stat_i2;
        r["G2_log2_over_b4"] = res.stat_g2;
        r["flux_logb_over_b2"] = res.stat_flux;
        r["noise"] = res.noise ? 1 : 0;
        r["grid_rmax"] = res.grid_rmax;
        r["grid_n"] = res.grid_n;
        runs.push_back(r);
    }

    // scaling diagnostics over the b scan (meaningful with >= 2 values)
    json checks(json::value_t::array);
    std::vector<double> xs, ys, g2s;
    for (const auto& res : results) {
        if (res.b > 0.0 && std::isfinite(res.stat_i2) && res.stat_i2 > 0.0) {
            xs.push_back(std::log(res.b));
            ys.push_back(std::log(res.int_psit2 * std::log(res.b) * std::log(res.b)));
        }
        if (std::isfinite(res.stat_g2)) g2s.push_back(res.stat_g2);
    }
    if (xs.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double m = static_cast<double>(xs.size());
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        checks.push_back(check_entry("psit_scaling_slope", slope, 4.7, 5.3));
    }
    if (!g2s.empty()) {
        const auto [lo, hi] = std::minmax_element(g2s.begin(), g2s.end());
        checks.push_back(check_entry("g2_ratio_spread", *hi / *lo, 0.0, 10.0));
    }

    json summary;
    summary["runs"] = runs;
    summary["checks"] = checks;
    pks::io::write_json(em.path("profile.json"), "profile.json", summary);
    em.note("profile.json");
    em.finish();
}

// -------------------------------------------------------------------- ode

void run_ode(const Args& a) {
    const auto kv = load_config("ode", a);
    Emitter em("ode", a, kv);

    pks::mod::OdeOptions opts;
    opts.rtol = as_real(kv, "rtol");
    opts.atol = as_real(kv, "atol");
    opts.records_per_decade = static_cast<int>(as_count(kv, "records_per_decade"));

    Timer t;
    const auto traj = pks::mod::integrate_reduced(as_real(kv, "b0"), as_real(kv, "lambda0"),
                                                  as_real(kv, "s_max"), opts);
    const auto rate = pks::mod::rate_law_check(traj);
    em.timing("integrate", t.seconds());

    const double t_end = traj.states.back().t;
    const bool have_T = traj.terminal_T.has_value() || rate.conclusive;
    auto time_left = [&](double ti) {
        // form T - t as tail + (t_end - t); the tail underflows t_end's last
        // bit near collapse, so the direct difference loses all precision
        if (traj.terminal_T.has_value()) return traj.terminal_tail + (t_end - ti);
        return rate.T - ti;
    };
    auto speed_stat = [&](const pks::mod::ModulationState& st) {
        if (!have_T) return kNan;
        const double left = time_left(st.t);
        if (!(left > 0.0)) return kNan;
        const double den = std::sqrt(std::abs(std::log(left)) / 2.0);
        if (!(den > 0.0)) return kNan;
        return (st.log_lambda - 0.5 * std::log(left)) / den;
    };
    auto asym_ratio = [](const pks::mod::ModulationState& st) {
        const double e = std::exp(1.0);
        return st.s > e ? st.b / pks::mod::b_asymptote(st.s) : kNan;
    };

    std::vector<std::vector<double>> rows;
    rows.reserve(traj.states.size());
    for (const auto& st : traj.states)
        rows.push_back({st.s, st.t, st.lambda, st.b, asym_ratio(st), speed_stat(st)});
    pks::io::write_csv(em.path("ode_trajectory.csv"), "ode_trajectory.csv",
                       {"s", "t", "lambda", "b", "b_asymptote_ratio", "R"}, rows);
    em.note("ode_trajectory.csv");

    const auto& fin = traj.states.back();
    json j;
    j["terminal"]["T"] = traj.terminal_T.has_value() ? *traj.terminal_T
                                                     : (rate.conclusive ? rate.T : kNan);
    j["terminal"]["tail"] = traj.terminal_tail;
    j["terminal"]["conclusive"] = rate.conclusive;
    j["terminal"]["used_terminal"] = rate.used_terminal;
    j["terminal"]["R_min"] = rate.conclusive ? rate.R_min : kNan;
    j["terminal"]["R_max"] = rate.conclusive ? rate.R_max : kNan;
    j["terminal"]["window_count"] = rate.window_count;
    j["endpoint"]["s"] = fin.s;
    j["endpoint"]["t"] = fin.t;
    j["endpoint"]["b"] = fin.b;
    j["endpoint"]["lambda"] = fin.lambda;
    j["endpoint"]["asymptote_ratio"] = asym_ratio(fin);

    json checks(json::value_t::array);
    checks.push_back(check_entry("endpoint_asymptote_ratio", asym_ratio(fin), 0.95, 1.05));
    checks.push_back(
        check_entry("rate_R_min", rate.conclusive ? rate.R_min : kNan, -1.5, -0.6));
    checks.push_back(
        check_entry("rate_R_max", rate.conclusive ? rate.R_max : kNan, -1.5, -0.6));
    j["checks"] = checks;

    pks::io::write_json(em.path("ode.json"), "ode.json", j);
    em.note("ode.json");
    em.finish();
}

// --------------------------------------------------------------- simulate

void run_simulate(const Args& a) {
    const auto kv = load_config("simulate", a);
    Emitter em("simulate", a, kv);

    const auto g = pks::num::build_grid(as_real(kv, "grid.rmin"), as_real(kv, "grid.rmax"),
                                        static_cast<int>(as_count(kv, "grid.n")));

    pks::sim::RunConfig rc;
    rc.b0 = as_real(kv, "b0");
    rc.mass_excess = as_real(kv, "mass_excess");
    rc.dt0 = as_real(kv, "dt0");
    rc.lambda_stop = as_real(kv, "lambda_stop");
    rc.record_every = static_cast<int>(as_count(kv, "record_every"));
    rc.M = as_real(kv, "M");
    rc.trigger = as_real(kv, "trigger");
    rc.decompose_every = static_cast<int>(as_count(kv, "decompose_every"));
    rc.max_steps = as_count(kv, "max_steps");
    rc.t_max = as_real(kv, "t_max");
    const std::string& frame = as_text(kv, "frame");
    if (frame == "fixed")
        rc.frame = pks::sim::Frame::fixed;
    else if (frame == "renormalized")
        rc.frame = pks::sim::Frame::renormalized;
    else
        throw pks::ConfigError("simulate: frame must be 'fixed' or 'renormalized', got '" +
                               frame + "'");

    std::optional<pks::sim::SimState> resume;
    const std::string& resume_path = as_text(kv, "resume");
    if (!resume_path.empty()) {
        auto cp = pks::io::read_checkpoint(resume_path);
        const double drmin = std::abs(cp.rmin - g.rmin) / g.rmin;
        const double drmax = std::abs(cp.rmax - g.rmax) / g.rmax;
        if (cp.n != g.n || drmin > 1e-12 || drmax > 1e-12)
            throw pks::ConfigError("simulate: checkpoint grid (" + short_real(cp.rmin) + ", " +
                                   short_real(cp.rmax) + ", " + std::to_string(cp.n) +
                                   ") does not match the configured grid");
        cp.state.grid = &g;
        resume = std::move(cp.state);
    }

    Timer t;
    const auto res = pks::sim::run(g, rc, resume);
    em.timing("run", t.seconds());

    std::vector<std::vector<double>> rows;
    rows.reserve(res.records.size());
    for (const auto& d : res.records)
        rows.push_back({d.t, d.s, d.lambda_eff, d.b_pinned, d.b_orth, d.mass, d.free_energy,
                        d.second_moment, d.virial_residual});
    pks::io::write_csv(em.path("trajectory.csv"), "trajectory.csv",
                       {"t", "s", "lambda", "b_pinned", "b_orth", "mass", "free_energy",
                        "second_moment", "virial_residual"},
                       rows);
    em.note("trajectory.csv");

    std::vector<std::vector<double>> evrows;
    evrows.reserve(res.events.size());
    for (const auto& ev : res.events)
        evrows.push_back({static_cast<double>(ev.step), ev.t, ev.s, ev.lambda_frame,
                          ev.resample_error});
    pks::io::write_csv(em.path("events.csv"), "events.csv",
                       {"step", "t", "s", "lambda_frame", "resample_error"}, evrows);
    em.note("events.csv");

    const std::string& cp_cfg = as_text(kv, "checkpoint");
    const std::string cp_name = cp_cfg.empty() ? "checkpoint.txt" : cp_cfg;
    const std::string cp_path = cp_cfg.empty() ? em.path("checkpoint.txt") : cp_cfg;
    pks::io::write_checkpoint(cp_path, g, res.final_state);
    em.note_at(cp_name, cp_path);

    // conservation gates over this run's records
    double mass_drift = kNan, df_max = kNan, virial_max = kNan;
    if (!res.records.empty()) {
        const double m0 = res.records.front().mass;
        mass_drift = 0.0;
        for (const auto& d : res.records)
            mass_drift = std::max(mass_drift, std::abs(d.mass - m0) / std::abs(m0));
        df_max = 0.0;
        for (size_t i = 0; i + 1 < res.records.size(); ++i)
            df_max = std::max(df_max,
                              res.records[i + 1].free_energy - res.records[i].free_energy);
        df_max = std::max(df_max, 0.0);
        for (const auto& d : res.records)
            if (std::isfinite(d.virial_residual)) {
                if (!std::isfinite(virial_max)) virial_max = 0.0;
                virial_max = std::max(virial_max, std::abs(d.virial_residual));
            }
    }

    json j;
    j["stop_reason"] = res.stop_reason;
    j["steps"] = res.final_state.step;
    j["records"] = static_cast<long>(res.records.size());
    j["events"] = static_cast<long>(res.events.size());
    j["final"]["t"] = res.final_state.t;
    j["final"]["s"] = res.final_state.s;
    j["final"]["lambda_eff"] = res.final_state.lambda_frame * res.final_state.lambda_pin;
    j["final"]["mass"] =
        res.records.empty() ? 2.0 * kPi * res.final_state.m[static_cast<size_t>(g.n - 2)]
                            : res.records.back().mass;
    j["subcritical"] = res.final_state.subcritical;
    json checks(json::value_t::array);
    checks.push_back(check_entry("mass_drift_rel", mass_drift, 0.0, 1e-6));
    checks.push_back(check_entry("free_energy_max_increase", df_max, 0.0, 1e-8));
    checks.push_back(check_entry("virial_max_rel", virial_max, 0.0, 0.01));
    j["checks"] = checks;

    pks::io::write_json(em.path("simulate.json"), "simulate.json", j);
    em.note("simulate.json");
    em.finish();
}

// --------------------------------------------------------------- spectral

void run_spectral(const Args& a) {
    const auto kv = load_config("spectral", a);
    Emitter em("spectral", a, kv);

    const double rmin = as_real(kv, "rmin");
    const double rmax = as_real(kv, "rmax");
    const auto g = pks::num::build_grid(rmin, rmax, static_cast<int>(as_count(kv, "n")));
    const auto Ms = as_reals(kv, "M");
    const int samples = static_cast<int>(as_count(kv, "samples"));
    const std::uint64_t seed =
        a.seed == 0 ? 424242ULL : static_cast<std::uint64_t>(a.seed);

    json j;
    json checks(json::value_t::array);

    Timer tk;
    const auto kernel = pks::spectral::kernel_residuals(g, 4);
    em.timing("kernel", tk.seconds());
    json kj(json::value_t::array);
    for (const auto& kr : kernel) {
        json row;
        row["name"] = kr.name;
        row["residual"] = kr.residual;
        row["order"] = kr.order;  // NaN serializes as null: refinement at the roundoff floor
        kj.push_back(row);
        const double hi = kr.name == "M LamQ + 2" ? 1e-5 : 1e-4;
        checks.push_back(check_entry("kernel " + kr.name, kr.residual, 0.0, hi));
        if (std::isfinite(kr.order))
            checks.push_back(check_entry("order " + kr.name, kr.order, 1.8, 100.0));
    }
    j["kernel"] = kj;

    Timer td;
    const auto t1 = pks::prof::build_T1(g);
    const double t1_l2q = pks::ops::norm_l2q(g, t1.T1);
    json dj(json::value_t::array);
    std::vector<pks::spectral::DirectionSet> dirs;
    dirs.reserve(Ms.size());
    for (const double M : Ms) {
        dirs.push_back(pks::spectral::build_Phi_M(g, t1, M));
        const auto& ds = dirs.back();
        const double rel_t1 =
            ds.inner_T1 / (pks::ops::norm_l2q(g, ds.phi_M) * t1_l2q);
        json row;
        row["M"] = ds.M;
        row["c_M"] = ds.c_M;
        row["cM_logM_over_M2"] = ds.c_M * std::log(ds.M) / (ds.M * ds.M);
        row["inner_T1_rel"] = rel_t1;
        row["inner_LamQ"] = ds.inner_LamQ;
        row["ref_32pi_logM"] = ds.ref_32pi_logM;
        row["ref_24_logM"] = ds.ref_24_logM;
        row["ratio_32pi"] = ds.inner_LamQ / ds.ref_32pi_logM;
        row["ratio_24"] = ds.inner_LamQ / ds.ref_24_logM;
        dj.push_back(row);
        const std::string tag = " M=" + short_real(M);
        checks.push_back(check_entry("phiM_T1_rel" + tag, rel_t1, -1e-8, 1e-8));
        checks.push_back(check_entry("phiM_LamQ_32pi_dev" + tag,
                                     std::abs(ds.inner_LamQ / ds.ref_32pi_logM - 1.0), 0.0,
                                     0.25));
    }
    j["directions"] = dj;
    em.timing("directions", td.seconds());

    Timer tc;
    const long cn = as_count(kv, "coercivity_n");
    const auto gc = pks::num::build_grid(rmin, rmax, static_cast<int>(cn));
    const auto cm = pks::spectral::coercivity_M(gc);
    j["coercivity_M"]["n"] = cn;
    j["coercivity_M"]["delta0"] = cm.delta0;
    j["coercivity_M"]["unprojected_min"] = cm.unprojected_min;
    j["coercivity_M"]["constraint_res_mass"] = cm.constraint_res_mass;
    j["coercivity_M"]["constraint_res_lamq"] = cm.constraint_res_lamq;
    j["coercivity_M"]["asymmetry"] = cm.asymmetry;
    j["coercivity_M"]["n_kept"] = cm.n_kept;
    checks.push_back(check_entry("coercivity_delta0", cm.delta0, 1e-6, 10.0));
    checks.push_back(check_entry("coercivity_unprojected_min", cm.unprojected_min, -10.0, 1e-6));

    json lj(json::value_t::array);
    for (const auto& ds : dirs) {
        const auto cl = pks::spectral::coercivity_L(g, ds, samples, seed);
        json row;
        row["M"] = cl.M;
        row["min_ratio1"] = cl.min_ratio1;
        row["min_ratio2"] = cl.min_ratio2;
        row["samples"] = cl.samples;
        row["skipped"] = cl.skipped;
        row["kernel_ratio2"] = cl.kernel_ratio2;
        lj.push_back(row);
        const std::string tag = " M=" + short_real(ds.M);
        checks.push_back(check_entry("coercL_min_ratio1" + tag, cl.min_ratio1, 1e-9, 1e9));
        checks.push_back(check_entry("coercL_min_ratio2" + tag, cl.min_ratio2, 1e-9, 1e9));
    }
    j["coercivity_L"] = lj;
    em.timing("coercivity", tc.seconds());

    j["checks"] = checks;
    pks::io::write_json(em.path("spectral.json"), "spectral.json", j);
    em.note("spectral.json");
    em.finish();
}

// ----------------------------------------------------------------- report

void run_report(const Args& a) {
    const auto kv = load_config("report", a);
    Emitter em("report", a, kv);

    std::string dir = as_text(kv, "dir");
    if (dir.empty()) dir = a.out_dir;

    json rep;
    rep["sources"] = json(json::value_t::array);
    json checks(json::value_t::array);
    bool all_pass = true;
    int found = 0;
    for (const std::string name :
         {"profile.json", "ode.json", "simulate.json", "spectral.json"}) {
        const std::string path = (fs::path(dir) / name).string();
        if (!fs::exists(path)) continue;
        const json src = pks::io::read_json(path);
        rep["sources"].push_back(name);
        ++found;
        if (!src.contains("checks")) continue;
        const std::string stem = name.substr(0, name.size() - 5);
        for (const auto& c : src["checks"]) {
            json q = c;
            q["name"] = stem + ": " + c.value("name", std::string("?"));
            const bool pass = c.value("pass", false);
            all_pass = all_pass && pass;
            checks.push_back(q);
        }
    }
    if (found == 0)
        throw pks::ConfigError("report: no artifact summaries (profile.json, ode.json, "
                               "simulate.json, spectral.json) found in '" + dir + "'");
    rep["checks"] = checks;
    rep["pass"] = all_pass;

    pks::io::write_json(em.path("report.json"), "report.json", rep);
    em.note("report.json");
    em.finish();

    std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << " ("
              << checks.size() << " checks from " << found << " artifacts)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical toolkit for radial chemotaxis blow-up dynamics"};
    app.require_subcommand(1);

    Args a;
    auto attach = [&a](CLI::App* cmd) {
        cmd->add_option("--config", a.config_path, "key = value configuration file")
            ->check(CLI::ExistingFile);
        cmd->add_option("--set", a.sets, "override key=value (repeatable)");
        cmd->add_option("--out", a.out_dir, "output directory, created if missing");
        cmd->add_option("--seed", a.seed,
                        "sampling seed (0 keeps the built-in default); echoed to the manifest");
    };
    attach(app.add_subcommand("profile",
                              "Build deformed profiles Qb and their error statistics"));
    attach(app.add_subcommand("ode", "Integrate the reduced (b, lambda) modulation system"));
    attach(app.add_subcommand("simulate",
                              "Evolve the radial aggregation flow in partial-mass form"));
    attach(app.add_subcommand("spectral",
                              "Kernel identities, localized directions, coercivity probes"));
    attach(app.add_subcommand("report", "Aggregate artifact checks into a single summary"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        std::filesystem::create_directories(a.out_dir);
        if (sub == "profile")
            run_profile(a);
        else if (sub == "ode")
            run_ode(a);
        else if (sub == "simulate")
            run_simulate(a);
        else if (sub == "spectral")
            run_spectral(a);
        else
            run_report(a);
        return 0;
    } catch (const pks::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
