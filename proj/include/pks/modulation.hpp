#pragma once

#include <optional>
#include <vector>

namespace pks::mod {

// One record of the reduced blow-up dynamics in rescaled time s:
//   db/ds = -2 b^2 / |log b|,  d(log lambda)/ds = -b,  dt/ds = lambda^2.
struct ModulationState {
    double s = 0.0;
    double t = 0.0;
    double b = 0.0;
    double lambda = 0.0;
    double log_lambda = 0.0;
};

struct Trajectory {
    std::vector<ModulationState> states;
    // Extrapolated blow-up time T and its resolved tail T - t_end. The tail is
    // kept separately because it underflows t_end's last bit near collapse;
    // T - t must be formed as tail + (t_end - t) to stay resolved.
    std::optional<double> terminal_T;
    double terminal_tail = 0.0;
};

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-14;
    int records_per_decade = 200;
};

// Adaptive fifth-order integration from s = 1 to s = s_max with records at
// geometric marks in s. Requires 0 < b0 < 1/e (the |log b| factor changes
// branch at 1/e), lambda0 > 0, s_max > 1.
Trajectory integrate_reduced(double b0, double lambda0, double s_max,
                             const OdeOptions& opts = {});

// Leading asymptote b(s) ~ (log s - log log s) / (2 s); s must exceed e.
double b_asymptote(double s);

struct RateLawReport {
    bool conclusive = false;
    bool used_terminal = false;  // extrapolated T from decade increments vs power-law fit
    double T = 0.0;
    double R_min = 0.0;          // corrector statistic over the window
    double R_max = 0.0;
    int window_count = 0;
};

// Check log lambda = (1/2) log(T-t) - sqrt(|log(T-t)|/2) (1 + o(1)) against
// the trajectory: extracts T, then evaluates
//   R = (log lambda - (1/2) log(T-t)) / sqrt(|log(T-t)|/2)
// over the last resolved decade of T-t. R -> -1 on the exact law.
// Inconclusive when lambda has not dropped by 1e3 or T cannot be extracted.
RateLawReport rate_law_check(const Trajectory& traj);

}  // namespace pks::mod
