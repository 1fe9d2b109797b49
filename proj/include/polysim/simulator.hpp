#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polysim/fenwick.hpp"
#include "polysim/model.hpp"
#include "polysim/rng.hpp"

namespace polysim {

/// Full is the process U^N; Truncated is the auxiliary chain X^N whose
/// size-n_c slot is absorbing: polymers there neither grow nor fragment,
/// the count only ever increments.
enum class SimulationMode { Full, Truncated };

struct StopRule {
    enum class Kind {
        FirstNucleation,
        Lag,
        FixedHorizon,
        FixedRescaledHorizon,
        EventBudget,
        // Truncated mode only: observe the window [0, t*Psi(N)] and end at
        // the first nucleation event beyond it. Gap statistics pooled over
        // the window then carry no right-censoring bias, because whether a
        // gap is included depends only on where it starts.
        PoissonWindow,
    };

    Kind kind = Kind::FirstNucleation;
    double horizon = 0.0;        // FixedHorizon / FixedRescaledHorizon / PoissonWindow
    std::uint64_t events = 0;    // EventBudget

    static StopRule first_nucleation() { return {Kind::FirstNucleation, 0.0, 0}; }
    static StopRule lag() { return {Kind::Lag, 0.0, 0}; }
    static StopRule fixed_horizon(double t) { return {Kind::FixedHorizon, t, 0}; }
    static StopRule fixed_rescaled_horizon(double t) { return {Kind::FixedRescaledHorizon, t, 0}; }
    static StopRule event_budget(std::uint64_t n) { return {Kind::EventBudget, 0.0, n}; }
    static StopRule poisson_window(double t) { return {Kind::PoissonWindow, t, 0}; }
};

struct ObserverSet {
    bool balance = false;
    bool curve = false;
    int curve_points = 512;
    /// Grid span for the mass curve, in rescaled time t/Psi(N). When 0 the
    /// span is inferred from a fixed-horizon stop rule.
    double curve_horizon_scaled = 0.0;
};

struct InitialCondition {
    enum class Kind { PureMonomers, Seeded };

    Kind kind = Kind::PureMonomers;
    // Seeded: (size, count) for sizes 2..n_c-1.
    std::vector<std::pair<std::int64_t, std::int64_t>> counts;
    double epsilon = 0.1;  // finite-N slack in the initial-state gate

    static InitialCondition pure_monomers() { return {}; }
    static InitialCondition seeded(std::vector<std::pair<std::int64_t, std::int64_t>> counts,
                                   double epsilon = 0.1) {
        return {Kind::Seeded, std::move(counts), epsilon};
    }
};

struct CurvePoint {
    double t = 0.0;
    std::int64_t stable_mass = 0;  // mass in sizes >= n_c
    std::int64_t poly_mass = 0;    // mass in sizes >= 2
};

struct TrajectoryRecord {
    std::optional<double> first_nucleation_time;   // T^N (tau^N in Truncated mode)
    std::vector<double> nucleation_event_times;    // jump times of the size-n_c count (Truncated)
    std::optional<double> lag_time;                // L_delta^N
    std::optional<double> half_time;               // first t with poly_mass >= N/2
    std::vector<CurvePoint> mass_curve;
    std::vector<double> balance_acc_a;  // [k-1] = int X_1^{k+1} X_{n_c-k-1} du
    std::vector<double> balance_acc_b;  // [k-1] = int X_1^k X_{n_c-k} du
    std::uint64_t event_count = 0;
    double end_time = 0.0;
    std::uint64_t seed = 0;
    bool truncated = false;   // stopped by the safety event budget
    bool absorbed = false;    // total rate reached zero
    SystemState final_state;
};

struct RunSpec {
    ModelParams params;
    std::int64_t N = 0;
    SimulationMode mode = SimulationMode::Full;
    InitialCondition init;
    StopRule stop;
    ObserverSet observers;
    double delta = 0.1;                          // lag threshold fraction
    std::uint64_t event_budget = 1'000'000'000;  // safety net, independent of the stop rule
};

/// Statistically exact jump-chain sampler backed by two prefix-sum trees
/// (growth and fragmentation weights per size). Monomer-dependent growth
/// rates share the u_1/N factor, applied at selection time, so monomer
/// jitter never touches the trees.
class SimulationEngine {
public:
    SimulationEngine(const ModelParams& params, std::int64_t N, SimulationMode mode,
                     SystemState initial);

    /// Computes the exit rate and draws the waiting time. False from an
    /// absorbing state.
    bool begin_step(Rng& rng, double& dt);

    /// Selects and applies the jump begun by begin_step.
    Transition finish_step(Rng& rng);

    const SystemState& state() const { return state_; }
    std::int64_t monomers() const { return state_.counts[1]; }
    std::int64_t poly_mass() const { return N_ - state_.counts[1]; }
    std::int64_t stable_mass() const { return stable_mass_; }
    std::int64_t nucleus_count() const { return state_.count(n_c_); }
    std::int64_t N() const { return N_; }

    /// Exact integer mass audit; throws std::logic_error on a breach.
    void verify_mass() const;

private:
    void refresh_size(std::int64_t k);
    void ensure_capacity(std::int64_t k);
    void apply_growth_event(std::int64_t k);
    void apply_fragmentation_event(std::int64_t k, Rng& rng);

    ModelParams params_;
    std::int64_t N_ = 0;
    SimulationMode mode_;
    int n_c_ = 0;
    double phi_N_ = 0.0;
    std::vector<double> frag_rate_;  // per-size fragmentation rate (one polymer)
    SystemState state_;
    FenwickTree growth_;  // weight lambda_k * u_k
    FenwickTree frag_;    // weight mu_k^N * u_k
    std::int64_t stable_mass_ = 0;
    double pending_growth_part_ = 0.0;
    double pending_total_ = 0.0;
    std::uint64_t steps_since_audit_ = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> piece_buffer_;
};

/// Single reference step off the enumerated rate table; the engine's fast
/// path is validated against this in tests.
struct StepResult {
    bool absorbed = false;
    double waiting_time = 0.0;
    Transition transition;
};
StepResult step(const SystemState& state, const ModelParams& params, Rng& rng);

TrajectoryRecord run(const RunSpec& spec, std::uint64_t seed);

/// Adds the occupation-integral increments for one inter-event interval,
/// taken at the pre-jump state.
void accumulate_balance(TrajectoryRecord& record, const SystemState& state,
                        const ModelParams& params, double dt);

/// Scaled balance functional for index k in 1..n_c-2; the limit theory
/// sends it to zero on the fast time scale.
double delta_k(const TrajectoryRecord& record, const ModelParams& params, std::int64_t N, int k);

/// Finite-N gate for seeded initial states; throws config_error on violation.
void validate_initial_condition(const ModelParams& params, std::int64_t N,
                                const InitialCondition& init);

SystemState build_initial_state(const ModelParams& params, std::int64_t N,
                                const InitialCondition& init);

}  // namespace polysim
