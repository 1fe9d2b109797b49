#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polysim/model.hpp"
#include "polysim/simulator.hpp"

namespace polysim {

/// One experiment: a replication sweep over N with shared model
/// parameters, stop rule, observers and seed policy.
struct ExperimentConfig {
    ModelParams model;
    std::vector<std::int64_t> N_list;
    std::int64_t replications = 1;
    SimulationMode mode = SimulationMode::Full;
    StopRule stop;
    double delta = 0.1;
    ObserverSet observers;
    InitialCondition init;
    std::uint64_t master_seed = 1;
    int worker_count = 1;
    std::uint64_t event_budget = 1'000'000'000;
    bool write_curves = false;

    void validate() const;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

}  // namespace polysim
