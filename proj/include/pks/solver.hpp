#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <pks/grid.hpp>
#include <pks/profiles.hpp>

namespace pks::sim {

// Evolution state in the working frame. The physical density is
// u(t, x) = lambda_frame^{-2} v(s, x / lambda_frame) with v = m'/r on the
// grid; lambda_pin = sqrt(8 / v(0)) tracks the in-frame core scale.
struct SimState {
    const num::RadialGrid* grid = nullptr;
    std::vector<double> m;  // partial mass at the nodes
    double mbc = 0.0;       // Dirichlet value at rmax (total mass / 2 pi)
    double t = 0.0;         // physical time
    double s = 0.0;         // renormalized time, ds = dt / lambda_eff^2
    double lambda_frame = 1.0;
    double lambda_pin = 1.0;
    long step = 0;
    double mass_initial = 0.0;
    bool subcritical = false;
};

// Semi-implicit stepper for the partial-mass flow
// dm/dt = m'' - m'/r + m m'/r: diffusion implicit (pentadiagonal solve in
// x = log r), nonlinear flux explicit. Row 0 enforces the even origin
// expansion m ~ a r^2 + c r^4, the last row pins m(rmax).
class Stepper {
  public:
    explicit Stepper(const num::RadialGrid& g);
    ~Stepper();
    Stepper(const Stepper&) = delete;
    Stepper& operator=(const Stepper&) = delete;

    // Advances m in place. Throws InstabilityError when the step grows the
    // solution more than tenfold (reduce dt).
    void step(std::vector<double>& m, double dt, double mbc);

    // Steady-state residual (m'' - m'/r) + m m'/r at the interior nodes.
    std::vector<double> flow_residual(const std::vector<double>& m) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    const num::RadialGrid* g_;
};

// Central density from the even fit m ~ (u0/2) r^2 + (c/4) r^4 through
// nodes 1 and 2.
double central_density(const num::RadialGrid& g, const std::vector<double>& m);

// Central density from a weighted least-squares fit of the same expansion
// over all nodes with r <= 0.05 * band_scale (at least 8), robust against
// node-level jitter of the two-point fit.
double u0_band(const num::RadialGrid& g, const std::vector<double>& m, double band_scale);

// 2 pi int r^2 u r dr via parts: 2 pi ([r^2 m] - 2 int m r dr).
double second_moment(const num::RadialGrid& g, const std::vector<double>& m);

struct FreeEnergyResult {
    double value = 0.0;
    int clamped_nodes = 0;  // nodes where u was clamped to 1e-300 in u log u
};

// Free energy int u log u + (1/2) int u phi_u (plane measure) of the state
// with partial mass m, including the even-expansion origin pieces.
FreeEnergyResult free_energy(const num::RadialGrid& g, const std::vector<double>& m);

// Initial state from the assembled profile at b0 (b0 = 0 gives the ground
// state). mass_excess rescales the density multiplicatively by
// 1 + mass_excess/(8 pi); an optional density perturbation is added before
// conversion to partial mass. Throws InvalidDataError on negative density;
// total mass <= 8 pi only sets the subcritical flag.
SimState init_from_profile(const num::RadialGrid& g, double b0, double mass_excess = 0.0,
                           const std::vector<double>* perturbation = nullptr);

// Rescale the frame so the central density is pinned back to Q(0) = 8:
// resamples m(r) -> m(lambda_pin r), folds lambda_pin into lambda_frame.
// Exact no-op when lambda_pin == 1. Returns the resampling roundtrip error
// estimate; above 1e-6 the state is under-resolved -> ResolutionError.
double renormalize(SimState& st);

// Profile family cache for the decomposition: T1 is grid-permanent, the
// last few b-profiles are kept (FIFO). Cutoff radii are clamped to the grid
// (B0 <= rmax/16, B1 <= rmax/4) so small-b profiles remain representable.
class ProfileCache {
  public:
    explicit ProfileCache(const num::RadialGrid& g);
    const prof::T1Parts& t1() const { return t1_; }
    const std::vector<double>& Qb(double b);

  private:
    const num::RadialGrid* g_;
    prof::T1Parts t1_;
    std::vector<double> q_;  // b == 0
    std::unordered_map<double, std::vector<double>> cache_;
    std::deque<double> order_;
};

struct DecomposeResult {
    double lambda1 = 0.0;
    double b = 0.0;
    std::vector<double> eps;  // residual density in the profile frame
    int iters = 0;
};

// Orthogonality-based decomposition u = lambda1^{-2}(Qb + eps)(./lambda1):
// damped Newton on (lambda1, b) driving (eps, Phi_M) = (eps, Lstar Phi_M) = 0.
// Directions are built once per (grid, M); M >= 20 required.
class Decomposer {
  public:
    Decomposer(const num::RadialGrid& g, double M);

    DecomposeResult decompose(const std::vector<double>& m, double lambda_hint,
                              double b_hint) const;

    const std::vector<double>& Phi_M() const { return PhiM_; }
    const std::vector<double>& Lstar_Phi_M() const { return LsPhiM_; }
    double c_M() const { return cM_; }

  private:
    const num::RadialGrid* g_;
    double M_;
    mutable ProfileCache cache_;
    std::vector<double> PhiM_, LsPhiM_;
    double cM_ = 0.0;
    double scale_ = 0.0;  // (Q, |Phi_M|) sets the tolerance scale
};

enum class Frame { fixed, renormalized };

struct RunConfig {
    double b0 = 1e-2;
    double mass_excess = 0.0;
    double dt0 = 0.1;          // explicit stability control: dt = dt0 / ||u||_inf
    double lambda_stop = 0.1;  // stop when lambda_eff falls to this value
    int record_every = 20;     // steps between diagnostic records
    double M = 20.0;           // localization scale of the decomposition
    Frame frame = Frame::renormalized;
    double trigger = 4.0;      // renormalize when v(0) >= 8 * trigger
    int decompose_every = 10;  // records between decompositions (0 disables)
    long max_steps = 300000;
    double t_max = 0.0;        // 0 disables the physical-time budget
};

struct DiagnosticsRecord {
    double t = 0.0, s = 0.0;
    double lambda_eff = 0.0, lambda_pin = 0.0;
    double mass = 0.0;           // 2 pi m at the last interior node
    double free_energy = 0.0;    // unscaled to the original frame
    double second_moment = 0.0;  // unscaled to the original frame
    double u_max = 0.0, u_min = 0.0, w0 = 0.0;
    double b_pinned = 0.0, b_orth = 0.0, virial_residual = 0.0;  // NaN when absent
    bool post_event = false;
    int clamped_nodes = 0;
};

struct Event {
    long step = 0;
    double t = 0.0, s = 0.0;
    double lambda_frame = 0.0;   // after the rescale
    double resample_error = 0.0;
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    std::vector<Event> events;
    SimState final_state;
    std::string stop_reason;  // "lambda_stop" | "t_max" | "max_steps"
};

// Evolve from the given state (or a fresh init_from_profile state) until a
// stopping criterion holds. Post-processing fills b_pinned (five-point
// smoothed -dlog(lambda)/ds) and the virial residual
// (d/dt second_moment vs 4(1 - mass/8pi) mass, centered differences,
// event-spanning pairs excluded).
RunResult run(const num::RadialGrid& g, const RunConfig& cfg,
              std::optional<SimState> resume_from = std::nullopt);

// Five-point local-quadratic least-squares derivative dy/dx at each sample
// (the smoothing used for b_pinned and the b_s diagnostics).
std::vector<double> smooth_derivative(const std::vector<double>& x,
                                      const std::vector<double>& y, int half_window = 2);

}  // namespace pks::sim
