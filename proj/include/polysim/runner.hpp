#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polysim/analysis.hpp"
#include "polysim/config.hpp"

namespace polysim {

/// Everything a sweep produces, one slot per replication, sorted by
/// (N, replication_id) regardless of scheduling.
struct SweepResult {
    std::vector<ReplicationSummary> summaries;
    std::vector<std::vector<double>> nucleation_events_scaled;  // parallel to summaries
    std::vector<std::vector<double>> balance_deltas;            // parallel; delta_k, k = 1..n_c-2
    std::vector<std::vector<CurvePoint>> curves;                // parallel; empty unless observed
    std::uint64_t total_events = 0;
    std::int64_t truncated_runs = 0;
};

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t n_index, std::int64_t replication);

/// Runs the sweep on config.worker_count threads. Replications are
/// independent work items with their own seeds, so the result is
/// identical for every worker count.
SweepResult run_sweep(const ExperimentConfig& config);

std::string summary_csv(const std::vector<ReplicationSummary>& summaries);
std::string events_csv(const SweepResult& result);
std::string balance_csv(const SweepResult& result);
std::string curve_csv(const std::vector<CurvePoint>& curve);

std::vector<ReplicationSummary> read_summary_csv(const std::string& path);

struct EventsFile {
    std::map<std::int64_t, std::vector<std::vector<double>>> by_N;
};
EventsFile read_events_csv(const std::string& path);

struct BalanceFile {
    // per N: one row per replication, delta_k values indexed k-1
    std::map<std::int64_t, std::vector<std::vector<double>>> by_N;
};
BalanceFile read_balance_csv(const std::string& path);

struct TestRecord {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string details;
};

/// Limit-theorem report over collected summaries: nucleation-time law,
/// Poisson stream, lag scaling and balance decay, each test emitted only
/// when its inputs are present.
std::vector<TestRecord> validate_summaries(const ExperimentConfig& config,
                                           const std::vector<ReplicationSummary>& summaries,
                                           const EventsFile* events, const BalanceFile* balance);

std::string report_jsonl(const std::vector<TestRecord>& records);
std::string report_table(const std::vector<TestRecord>& records);

}  // namespace polysim
