#include "polysim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "polysim/errors.hpp"

namespace polysim {

namespace {

constexpr std::uint64_t kAuditInterval = 1u << 16;

std::int64_t ceil_threshold(double x) {
    return static_cast<std::int64_t>(std::ceil(x - 1e-9));
}

}  // namespace

SimulationEngine::SimulationEngine(const ModelParams& params, std::int64_t N, SimulationMode mode,
                                   SystemState initial)
    : params_(params), N_(N), mode_(mode), n_c_(params.n_c), phi_N_(params.phi(N)),
      state_(std::move(initial)) {
    const auto wanted =
        std::max<std::int64_t>({state_.max_size + 2, n_c_ + 2, params_.k_max_tracked, 16});
    if (static_cast<std::int64_t>(state_.counts.size()) < wanted + 1)
        state_.counts.resize(static_cast<std::size_t>(wanted) + 1, 0);

    const auto cap = static_cast<std::int64_t>(state_.counts.size()) - 1;
    frag_rate_.assign(state_.counts.size(), 0.0);
    for (std::int64_t k = 2; k <= cap; ++k) {
        if (k < n_c_)
            frag_rate_[static_cast<std::size_t>(k)] = phi_N_ * params_.mu_at(k);
        else
            frag_rate_[static_cast<std::size_t>(k)] =
                mode_ == SimulationMode::Truncated ? 0.0 : params_.mu_stable();
    }
    growth_.reset(static_cast<std::size_t>(cap));
    frag_.reset(static_cast<std::size_t>(cap));
    stable_mass_ = 0;
    for (std::int64_t k = 1; k <= state_.max_size; ++k) {
        refresh_size(k);
        if (k >= n_c_) stable_mass_ += k * state_.counts[static_cast<std::size_t>(k)];
    }
    verify_mass();
}

void SimulationEngine::refresh_size(std::int64_t k) {
    const auto cap = static_cast<std::int64_t>(growth_.size());
    if (k < 1 || k > cap) return;
    const auto u = state_.counts[static_cast<std::size_t>(k)];
    double growth_weight = 0.0;
    double frag_weight = 0.0;
    if (u > 0) {
        if (!(mode_ == SimulationMode::Truncated && k >= n_c_))
            growth_weight = params_.lambda_at(k) * static_cast<double>(u);
        frag_weight = frag_rate_[static_cast<std::size_t>(k)] * static_cast<double>(u);
    }
    growth_.set(static_cast<std::size_t>(k), growth_weight);
    frag_.set(static_cast<std::size_t>(k), frag_weight);
}

void SimulationEngine::ensure_capacity(std::int64_t k) {
    const auto cap = static_cast<std::int64_t>(state_.counts.size()) - 1;
    if (k <= cap) return;
    const auto new_cap = std::max(cap * 2, k + 1);
    state_.counts.resize(static_cast<std::size_t>(new_cap) + 1, 0);
    frag_rate_.resize(state_.counts.size(), 0.0);
    for (std::int64_t s = std::max<std::int64_t>(2, cap + 1); s <= new_cap; ++s) {
        if (s < n_c_)
            frag_rate_[static_cast<std::size_t>(s)] = phi_N_ * params_.mu_at(s);
        else
            frag_rate_[static_cast<std::size_t>(s)] =
                mode_ == SimulationMode::Truncated ? 0.0 : params_.mu_stable();
    }
    growth_.reset(static_cast<std::size_t>(new_cap));
    frag_.reset(static_cast<std::size_t>(new_cap));
    for (std::int64_t s = 1; s <= state_.max_size; ++s) refresh_size(s);
}

bool SimulationEngine::begin_step(Rng& rng, double& dt) {
    const auto u1 = state_.counts[1];
    double growth_eff = 0.0;
    if (u1 >= 2)
        growth_eff = growth_.total();
    else if (u1 == 1)
        growth_eff = std::max(0.0, growth_.total() - growth_.get(1));
    const double monomer_factor = static_cast<double>(u1) / static_cast<double>(N_);
    const double growth_part = growth_eff * monomer_factor;
    const double total = growth_part + frag_.total();
    if (!(total > 0.0)) return false;
    if (!std::isfinite(total)) throw config_error("total event rate is not finite");
    pending_growth_part_ = growth_part;
    pending_total_ = total;
    dt = rng.exponential(total);
    return true;
}

Transition SimulationEngine::finish_step(Rng& rng) {
    const double pick = rng.uniform() * pending_total_;
    Transition applied;
    if (pick < pending_growth_part_) {
        const auto u1 = state_.counts[1];
        const double monomer_factor = static_cast<double>(u1) / static_cast<double>(N_);
        double target = pick / monomer_factor;
        if (u1 < 2) target += growth_.get(1);
        auto k = static_cast<std::int64_t>(growth_.find(target));
        const auto valid = [&](std::int64_t s) {
            return s >= 1 && s <= state_.max_size && growth_.get(static_cast<std::size_t>(s)) > 0.0 &&
                   !(s == 1 && u1 < 2);
        };
        if (!valid(k)) {
            // Float slack from the prefix search; walk to a live index.
            std::int64_t found = -1;
            for (std::int64_t s = k; s <= state_.max_size; ++s)
                if (valid(s)) { found = s; break; }
            if (found < 0)
                for (std::int64_t s = std::min(k, state_.max_size); s >= 1; --s)
                    if (valid(s)) { found = s; break; }
            if (found < 0) throw std::logic_error("growth selection found no enabled size");
            k = found;
        }
        applied = {Transition::Kind::Growth, k,
                   params_.lambda_at(k) * static_cast<double>(state_.counts[static_cast<std::size_t>(k)]) *
                       monomer_factor};
        apply_growth_event(k);
    } else {
        const double target = pick - pending_growth_part_;
        auto k = static_cast<std::int64_t>(frag_.find(target));
        const auto valid = [&](std::int64_t s) {
            return s >= 2 && s <= state_.max_size && frag_.get(static_cast<std::size_t>(s)) > 0.0;
        };
        if (!valid(k)) {
            std::int64_t found = -1;
            for (std::int64_t s = k; s <= state_.max_size; ++s)
                if (valid(s)) { found = s; break; }
            if (found < 0)
                for (std::int64_t s = std::min(k, state_.max_size); s >= 2; --s)
                    if (valid(s)) { found = s; break; }
            if (found < 0) throw std::logic_error("fragmentation selection found no occupied size");
            k = found;
        }
        applied = {Transition::Kind::Fragmentation, k,
                   frag_.get(static_cast<std::size_t>(k))};
        apply_fragmentation_event(k, rng);
    }
    if (++steps_since_audit_ >= kAuditInterval) {
        steps_since_audit_ = 0;
        verify_mass();
        growth_.rebuild();
        frag_.rebuild();
    }
    return applied;
}

void SimulationEngine::apply_growth_event(std::int64_t k) {
    ensure_capacity(k + 1);
    auto& counts = state_.counts;
    if (k == 1) {
        if (counts[1] < 2) throw std::logic_error("dimerization from fewer than two monomers");
        counts[1] -= 2;
    } else {
        if (counts[1] < 1 || counts[static_cast<std::size_t>(k)] < 1)
            throw std::logic_error("growth applied without reactants");
        counts[1] -= 1;
        counts[static_cast<std::size_t>(k)] -= 1;
    }
    counts[static_cast<std::size_t>(k + 1)] += 1;
    state_.max_size = std::max(state_.max_size, k + 1);
    if (k + 1 == n_c_)
        stable_mass_ += n_c_;
    else if (k >= n_c_)
        stable_mass_ += 1;
    refresh_size(1);
    refresh_size(k);
    refresh_size(k + 1);
}

void SimulationEngine::apply_fragmentation_event(std::int64_t k, Rng& rng) {
    sample_pieces(params_.fragmentation, k, rng, piece_buffer_);
    auto& counts = state_.counts;
    if (counts[static_cast<std::size_t>(k)] < 1)
        throw std::logic_error("fragmentation applied to an empty size");
    counts[static_cast<std::size_t>(k)] -= 1;
    std::int64_t piece_mass = 0;
    std::int64_t stable_piece_mass = 0;
    for (const auto& [size, count] : piece_buffer_) {
        ensure_capacity(size);
        counts[static_cast<std::size_t>(size)] += count;
        piece_mass += size * count;
        if (size >= n_c_) stable_piece_mass += size * count;
        state_.max_size = std::max(state_.max_size, size);
    }
    if (piece_mass != k) throw std::logic_error("fragmentation outcome broke mass conservation");
    if (k >= n_c_) stable_mass_ += stable_piece_mass - k;
    refresh_size(k);
    for (const auto& [size, count] : piece_buffer_) refresh_size(size);
}

void SimulationEngine::verify_mass() const {
    std::int64_t mass = 0;
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(state_.counts.size()); ++k)
        mass += k * state_.counts[static_cast<std::size_t>(k)];
    if (mass != N_)
        throw std::logic_error("mass conservation breached: " + std::to_string(mass) +
                               " != " + std::to_string(N_));
}

StepResult step(const SystemState& state, const ModelParams& params, Rng& rng) {
    const auto table = enumerate_transitions(state, params);
    const double total = total_rate(table);
    StepResult result;
    if (!(total > 0.0)) {
        result.absorbed = true;
        return result;
    }
    result.waiting_time = rng.exponential(total);
    const double pick = rng.uniform() * total;
    double acc = 0.0;
    result.transition = table.back();
    for (const auto& transition : table) {
        acc += transition.rate;
        if (pick < acc) {
            result.transition = transition;
            break;
        }
    }
    return result;
}

void validate_initial_condition(const ModelParams& params, std::int64_t N,
                                const InitialCondition& init) {
    if (init.kind == InitialCondition::Kind::PureMonomers) return;
    if (!(init.epsilon > 0.0) || init.epsilon >= 1.0)
        throw config_error("init.epsilon must lie in (0,1)");
    const double phi_N = params.phi(N);
    const int kc = k_c(params);
    std::int64_t seeded_mass = 0;
    std::int64_t middle_sum = 0;
    for (const auto& [size, count] : init.counts) {
        if (count < 0) throw config_error("init counts must be non-negative");
        if (size < 2 || size >= params.n_c)
            throw config_error("init counts are restricted to sizes 2..n_c-1");
        seeded_mass += size * count;
        if (size <= kc) {
            const double bound =
                static_cast<double>(N) / std::pow(phi_N, static_cast<double>(size) - 1.0 - init.epsilon);
            if (static_cast<double>(count) > bound)
                throw config_error("init count at size " + std::to_string(size) +
                                   " exceeds the initial-state gate N/Phi(N)^{k-1-eps}");
        } else {
            middle_sum += count;
        }
    }
    if (static_cast<double>(middle_sum) > std::pow(phi_N, init.epsilon))
        throw config_error("init counts between k_c and n_c exceed the Phi(N)^eps gate");
    if (seeded_mass > N) throw config_error("seeded mass exceeds N");
}

SystemState build_initial_state(const ModelParams& params, std::int64_t N,
                                const InitialCondition& init) {
    validate_initial_condition(params, N, init);
    SystemState state = SystemState::pure_monomers(N);
    if (init.kind == InitialCondition::Kind::Seeded) {
        for (const auto& [size, count] : init.counts) {
            if (count == 0) continue;
            state.set_count(size, state.count(size) + count);
            state.set_count(1, state.count(1) - size * count);
        }
        if (state.count(1) < 0) throw config_error("seeded mass exceeds N");
    }
    return state;
}

void accumulate_balance(TrajectoryRecord& record, const SystemState& state,
                        const ModelParams& params, double dt) {
    if (dt == 0.0) return;
    const int n_c = params.n_c;
    if (static_cast<int>(record.balance_acc_a.size()) < n_c - 2) {
        record.balance_acc_a.assign(static_cast<std::size_t>(n_c - 2), 0.0);
        record.balance_acc_b.assign(static_cast<std::size_t>(n_c - 2), 0.0);
    }
    const double u1 = static_cast<double>(state.count(1));
    double u1_pow = u1;  // u1^k
    for (int k = 1; k <= n_c - 2; ++k) {
        record.balance_acc_a[static_cast<std::size_t>(k - 1)] +=
            u1_pow * u1 * static_cast<double>(state.count(n_c - k - 1)) * dt;
        record.balance_acc_b[static_cast<std::size_t>(k - 1)] +=
            u1_pow * static_cast<double>(state.count(n_c - k)) * dt;
        u1_pow *= u1;
    }
}

double delta_k(const TrajectoryRecord& record, const ModelParams& params, std::int64_t N, int k) {
    const int n_c = params.n_c;
    if (k < 1 || k > n_c - 2) throw config_error("delta_k index must lie in 1..n_c-2");
    if (static_cast<int>(record.balance_acc_a.size()) < n_c - 2)
        throw insufficient_data("balance accumulators were not recorded");
    const double a = record.balance_acc_a[static_cast<std::size_t>(k - 1)];
    const double b = record.balance_acc_b[static_cast<std::size_t>(k - 1)];
    const double phi_N = params.phi(N);
    const double raw = params.lambda_at(n_c - k - 1) / static_cast<double>(N) * a -
                       params.mu_at(n_c - k) * phi_N * b;
    return raw / std::pow(static_cast<double>(N) * phi_N, k);
}

TrajectoryRecord run(const RunSpec& spec, std::uint64_t seed) {
    spec.params.validate();
    if (spec.N < spec.params.n_c) throw config_error("N must be at least n_c");
    if (!(spec.delta > 0.0) || spec.delta >= 1.0) throw config_error("delta must lie in (0,1)");
    const int n_c = spec.params.n_c;
    const double psi_N = psi(spec.params, spec.N);

    SimulationEngine engine(spec.params, spec.N, spec.mode,
                            build_initial_state(spec.params, spec.N, spec.init));
    Rng rng(seed);
    TrajectoryRecord record;
    record.seed = seed;

    if (spec.observers.balance) {
        record.balance_acc_a.assign(static_cast<std::size_t>(n_c - 2), 0.0);
        record.balance_acc_b.assign(static_cast<std::size_t>(n_c - 2), 0.0);
    }

    double hard_horizon = std::numeric_limits<double>::infinity();
    if (spec.stop.kind == StopRule::Kind::FixedHorizon) hard_horizon = spec.stop.horizon;
    if (spec.stop.kind == StopRule::Kind::FixedRescaledHorizon)
        hard_horizon = spec.stop.horizon * psi_N;
    double poisson_window_end = std::numeric_limits<double>::infinity();
    if (spec.stop.kind == StopRule::Kind::PoissonWindow) {
        if (spec.mode != SimulationMode::Truncated)
            throw config_error("poisson_window stop rule requires truncated mode");
        poisson_window_end = spec.stop.horizon * psi_N;
    }

    double curve_span = 0.0;
    double curve_step = 0.0;
    int curve_next = 0;
    if (spec.observers.curve) {
        if (spec.observers.curve_points < 2) throw config_error("observers.curve_points must be >= 2");
        curve_span = spec.observers.curve_horizon_scaled > 0.0
                         ? spec.observers.curve_horizon_scaled * psi_N
                         : (spec.stop.kind == StopRule::Kind::PoissonWindow ? poisson_window_end
                                                                            : hard_horizon);
        if (!std::isfinite(curve_span) || curve_span <= 0.0)
            throw config_error("mass curve needs a horizon: set observers.curve_horizon_scaled");
        curve_step = curve_span / static_cast<double>(spec.observers.curve_points - 1);
        record.mass_curve.reserve(static_cast<std::size_t>(spec.observers.curve_points));
    }
    const auto fill_curve = [&](double up_to, bool inclusive) {
        if (!spec.observers.curve) return;
        while (curve_next < spec.observers.curve_points) {
            const double grid_t = curve_step * static_cast<double>(curve_next);
            const bool covered = inclusive ? grid_t <= up_to + curve_step * 1e-9 : grid_t < up_to;
            if (!covered) break;
            record.mass_curve.push_back({grid_t, engine.stable_mass(), engine.poly_mass()});
            ++curve_next;
        }
    };

    const std::int64_t lag_threshold = ceil_threshold(spec.delta * static_cast<double>(spec.N));
    const std::int64_t half_threshold = (spec.N + 1) / 2;

    double t = 0.0;
    if (engine.nucleus_count() >= 1) record.first_nucleation_time = 0.0;
    const bool stopped_at_start = spec.stop.kind == StopRule::Kind::FirstNucleation &&
                                  record.first_nucleation_time.has_value();

    while (!stopped_at_start) {
        if (spec.stop.kind == StopRule::Kind::EventBudget && record.event_count >= spec.stop.events)
            break;
        if (record.event_count >= spec.event_budget) {
            record.truncated = true;
            break;
        }
        double dt = 0.0;
        if (!engine.begin_step(rng, dt)) {
            record.absorbed = true;
            if (std::isfinite(hard_horizon)) {
                // A frozen state still occupies time up to the horizon.
                if (spec.observers.balance)
                    accumulate_balance(record, engine.state(), spec.params, hard_horizon - t);
                t = hard_horizon;
            }
            break;
        }
        const double t_next = t + dt;
        if (t_next >= hard_horizon) {
            if (spec.observers.balance)
                accumulate_balance(record, engine.state(), spec.params, hard_horizon - t);
            fill_curve(hard_horizon, true);
            t = hard_horizon;
            break;
        }
        if (spec.observers.balance) accumulate_balance(record, engine.state(), spec.params, dt);
        fill_curve(t_next, false);

        const Transition applied = engine.finish_step(rng);
        t = t_next;
        ++record.event_count;

        const bool nucleation_event = spec.mode == SimulationMode::Truncated &&
                                      applied.kind == Transition::Kind::Growth &&
                                      applied.k == n_c - 1;
        if (nucleation_event) record.nucleation_event_times.push_back(t);
        if (spec.stop.kind == StopRule::Kind::PoissonWindow && nucleation_event &&
            t > poisson_window_end)
            break;
        if (!record.first_nucleation_time && engine.nucleus_count() >= 1) {
            record.first_nucleation_time = t;
            if (spec.stop.kind == StopRule::Kind::FirstNucleation) break;
        }
        if (!record.half_time && engine.poly_mass() >= half_threshold) record.half_time = t;
        if (!record.lag_time && engine.stable_mass() >= lag_threshold) {
            record.lag_time = t;
            if (spec.stop.kind == StopRule::Kind::Lag) break;
        }
    }

    record.end_time = t;
    fill_curve(t, true);
    engine.verify_mass();
    record.final_state = engine.state();
    return record;
}

}  // namespace polysim
