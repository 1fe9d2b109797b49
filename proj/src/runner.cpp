#include "polysim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "polysim/errors.hpp"

namespace polysim {

namespace {

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string format_optional(const std::optional<double>& value) {
    return value ? format_double(*value) : std::string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::optional<double> parse_optional(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return std::stod(text);
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t n_index,
                               std::int64_t replication) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(n_index),
                    static_cast<std::uint64_t>(replication));
}

SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();
    const std::size_t n_count = config.N_list.size();
    const auto reps = static_cast<std::size_t>(config.replications);
    const std::size_t total = n_count * reps;

    SweepResult result;
    result.summaries.resize(total);
    result.nucleation_events_scaled.resize(total);
    result.balance_deltas.resize(total);
    result.curves.resize(total);

    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    const int n_c = config.model.n_c;
    const auto worker = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t index = cursor.fetch_add(1, std::memory_order_relaxed);
            if (index >= total) return;
            const std::size_t n_index = index / reps;
            const auto replication = static_cast<std::int64_t>(index % reps);
            try {
                RunSpec spec;
                spec.params = config.model;
                spec.N = config.N_list[n_index];
                spec.mode = config.mode;
                spec.init = config.init;
                spec.stop = config.stop;
                spec.observers = config.observers;
                spec.delta = config.delta;
                spec.event_budget = config.event_budget;
                const auto seed = replication_seed(config.master_seed, n_index, replication);
                const auto record = run(spec, seed);

                result.summaries[index] =
                    ReplicationSummary::from(record, config.model, spec.N, replication);
                if (!record.nucleation_event_times.empty()) {
                    const double psi_N = psi(config.model, spec.N);
                    auto& scaled = result.nucleation_events_scaled[index];
                    scaled.reserve(record.nucleation_event_times.size());
                    for (double t : record.nucleation_event_times) scaled.push_back(t / psi_N);
                }
                if (config.observers.balance) {
                    auto& deltas = result.balance_deltas[index];
                    for (int k = 1; k <= n_c - 2; ++k)
                        deltas.push_back(delta_k(record, config.model, spec.N, k));
                }
                if (config.observers.curve) result.curves[index] = record.mass_curve;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const auto thread_count = static_cast<std::size_t>(config.worker_count);
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(thread_count);
        for (std::size_t i = 0; i < thread_count; ++i) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& summary : result.summaries) {
        result.total_events += summary.event_count;
        if (summary.truncated) ++result.truncated_runs;
    }
    return result;
}

std::string summary_csv(const std::vector<ReplicationSummary>& summaries) {
    std::string out =
        "replication_id,seed,N,T_N,T_scaled,L_delta,L_scaled,half_time,explosion_span,"
        "event_count,truncated\n";
    for (const auto& row : summaries) {
        out += std::to_string(row.replication_id);
        out += ',';
        out += std::to_string(row.seed);
        out += ',';
        out += std::to_string(row.N);
        out += ',';
        out += format_optional(row.T_N);
        out += ',';
        out += format_optional(row.T_scaled);
        out += ',';
        out += format_optional(row.L_delta);
        out += ',';
        out += format_optional(row.L_scaled);
        out += ',';
        out += format_optional(row.half_time);
        out += ',';
        out += format_optional(row.explosion_span);
        out += ',';
        out += std::to_string(row.event_count);
        out += ',';
        out += row.truncated ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string events_csv(const SweepResult& result) {
    std::string out = "replication_id,N,t_scaled\n";
    for (std::size_t i = 0; i < result.summaries.size(); ++i) {
        const auto& summary = result.summaries[i];
        for (double t : result.nucleation_events_scaled[i]) {
            out += std::to_string(summary.replication_id);
            out += ',';
            out += std::to_string(summary.N);
            out += ',';
            out += format_double(t);
            out += '\n';
        }
    }
    return out;
}

std::string balance_csv(const SweepResult& result) {
    std::string out = "replication_id,N,k,delta_scaled\n";
    for (std::size_t i = 0; i < result.summaries.size(); ++i) {
        const auto& summary = result.summaries[i];
        const auto& deltas = result.balance_deltas[i];
        for (std::size_t k = 0; k < deltas.size(); ++k) {
            out += std::to_string(summary.replication_id);
            out += ',';
            out += std::to_string(summary.N);
            out += ',';
            out += std::to_string(k + 1);
            out += ',';
            out += format_double(deltas[k]);
            out += '\n';
        }
    }
    return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "t,stable_mass,poly_mass\n";
    for (const auto& point : curve) {
        out += format_double(point.t);
        out += ',';
        out += std::to_string(point.stable_mass);
        out += ',';
        out += std::to_string(point.poly_mass);
        out += '\n';
    }
    return out;
}

std::vector<ReplicationSummary> read_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw insufficient_data("cannot open summary file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw insufficient_data("summary file is empty: " + path);
    std::vector<ReplicationSummary> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 11) throw insufficient_data("malformed summary row: " + line);
        ReplicationSummary row;
        row.replication_id = std::stoll(fields[0]);
        row.seed = std::stoull(fields[1]);
        row.N = std::stoll(fields[2]);
        row.T_N = parse_optional(fields[3]);
        row.T_scaled = parse_optional(fields[4]);
        row.L_delta = parse_optional(fields[5]);
        row.L_scaled = parse_optional(fields[6]);
        row.half_time = parse_optional(fields[7]);
        row.explosion_span = parse_optional(fields[8]);
        row.event_count = std::stoull(fields[9]);
        row.truncated = fields[10] == "1";
        rows.push_back(row);
    }
    if (rows.empty()) throw insufficient_data("summary file has no rows: " + path);
    return rows;
}

EventsFile read_events_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw insufficient_data("cannot open events file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw insufficient_data("events file is empty: " + path);
    EventsFile file;
    std::map<std::int64_t, std::map<std::int64_t, std::vector<double>>> grouped;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) throw insufficient_data("malformed events row: " + line);
        grouped[std::stoll(fields[1])][std::stoll(fields[0])].push_back(std::stod(fields[2]));
    }
    for (auto& [N, reps] : grouped) {
        auto& out = file.by_N[N];
        for (auto& [rep, times] : reps) out.push_back(std::move(times));
    }
    return file;
}

BalanceFile read_balance_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw insufficient_data("cannot open balance file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw insufficient_data("balance file is empty: " + path);
    BalanceFile file;
    std::map<std::int64_t, std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>>> grouped;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) throw insufficient_data("malformed balance row: " + line);
        grouped[std::stoll(fields[1])][std::stoll(fields[0])].push_back(
            {std::stoll(fields[2]), std::stod(fields[3])});
    }
    for (auto& [N, reps] : grouped) {
        auto& out = file.by_N[N];
        for (auto& [rep, pairs] : reps) {
            std::sort(pairs.begin(), pairs.end());
            std::vector<double> deltas;
            deltas.reserve(pairs.size());
            for (const auto& [k, value] : pairs) deltas.push_back(value);
            out.push_back(std::move(deltas));
        }
    }
    return file;
}

std::vector<TestRecord> validate_summaries(const ExperimentConfig& config,
                                           const std::vector<ReplicationSummary>& summaries,
                                           const EventsFile* events, const BalanceFile* balance) {
    std::vector<TestRecord> records;
    std::map<std::int64_t, std::vector<const ReplicationSummary*>> groups;
    for (const auto& summary : summaries) groups[summary.N].push_back(&summary);
    if (groups.empty()) throw insufficient_data("no summaries to validate");

    const double rho = rho_bar(config.model);
    const auto scaled_T = [&](std::int64_t N) {
        std::vector<double> values;
        for (const auto* row : groups[N])
            if (row->T_scaled) values.push_back(*row->T_scaled);
        return values;
    };

    const std::int64_t smallest_N = groups.begin()->first;
    const std::int64_t largest_N = groups.rbegin()->first;
    const auto t_large = scaled_T(largest_N);

    if (t_large.size() >= 20) {
        const auto ks = ks_exponential(t_large, rho);
        records.push_back({"nucleation_time_ks stat=D vs Exp(rho_bar), N=" + std::to_string(largest_N),
                           ks.statistic, ks.critical_value, ks.pass, ""});
        const double normalized_mean = mean(t_large) * rho;
        records.push_back({"nucleation_time_mean |mean*rho_bar - 1|", std::abs(normalized_mean - 1.0),
                           0.15, std::abs(normalized_mean - 1.0) <= 0.15, ""});
        const double t_cv = cv(t_large);
        records.push_back({"nucleation_time_cv |cv - 1|", std::abs(t_cv - 1.0), 0.15,
                           std::abs(t_cv - 1.0) <= 0.15, ""});
        if (largest_N != smallest_N) {
            const auto t_small = scaled_T(smallest_N);
            if (t_small.size() >= 20) {
                const auto ks_small = ks_exponential(t_small, rho);
                const double gap = ks.statistic - ks_small.statistic;
                records.push_back({"nucleation_ks_trend D(largest) - D(smallest)", gap, 0.02,
                                   gap <= 0.02, ""});
            }
        }
    }

    if (events) {
        const auto it = events->by_N.find(largest_N);
        if (it != events->by_N.end() && it->second.size() >= 2) {
            double horizon = (config.stop.kind == StopRule::Kind::FixedRescaledHorizon ||
                              config.stop.kind == StopRule::Kind::PoissonWindow)
                                 ? config.stop.horizon
                                 : 0.0;
            const auto stream = poisson_stream_test(it->second, rho, horizon);
            records.push_back({"poisson_dispersion |var/mean - 1|",
                               std::abs(stream.dispersion_ratio - 1.0), 0.2,
                               std::abs(stream.dispersion_ratio - 1.0) <= 0.2, ""});
            if (stream.interarrival_ks.n > 0)
                records.push_back({"poisson_interarrival_ks", stream.interarrival_ks.statistic,
                                   stream.interarrival_ks.critical_value, stream.interarrival_ks.pass,
                                   ""});
        }
    }

    bool any_lag = false;
    for (const auto& summary : summaries)
        if (summary.L_scaled) any_lag = true;
    if (any_lag && groups.size() >= 2) {
        try {
            const auto report = lag_scaling_report(summaries);
            for (std::size_t i = 1; i < report.groups.size(); ++i) {
                const auto& group = report.groups[i];
                records.push_back({"lag_bracket_retention N=" + std::to_string(group.N),
                                   group.retained_fraction, 0.9, group.retained_fraction >= 0.9,
                                   "bracket=[" + format_double(report.k1) + "," +
                                       format_double(report.k2) + "]"});
            }
            const auto& first = report.groups.front();
            const auto& last = report.groups.back();
            if (first.median_span && last.median_span && *first.median_span > 0.0) {
                const double growth = *last.median_span / *first.median_span - 1.0;
                records.push_back({"explosion_span_growth median(last)/median(first) - 1", growth,
                                   0.5, growth <= 0.5, ""});
            }
        } catch (const insufficient_data&) {
            // lag columns too sparse; the report is simply omitted
        }
        std::vector<double> l_large;
        for (const auto* row : groups[largest_N])
            if (row->L_scaled) l_large.push_back(*row->L_scaled);
        if (l_large.size() >= 2) {
            const double l_cv = cv(l_large);
            records.push_back({"lag_cv sd/mean at largest N", l_cv, 0.5, l_cv >= 0.5, ""});
        }
    }

    if (balance && balance->by_N.size() >= 2) {
        std::vector<std::pair<std::int64_t, double>> medians;
        for (const auto& [N, reps] : balance->by_N) {
            std::vector<double> abs_delta1;
            for (const auto& deltas : reps)
                if (!deltas.empty()) abs_delta1.push_back(std::abs(deltas[0]));
            if (abs_delta1.size() >= 2) medians.push_back({N, median(abs_delta1)});
        }
        if (medians.size() >= 2) {
            double worst_ratio = 0.0;
            for (std::size_t i = 1; i < medians.size(); ++i)
                worst_ratio = std::max(worst_ratio, medians[i].second / medians[i - 1].second);
            records.push_back({"balance_decay max adjacent median ratio of |delta_1|", worst_ratio,
                               1.0, worst_ratio < 1.0, ""});
        }
    }

    return records;
}

std::string report_jsonl(const std::vector<TestRecord>& records) {
    std::string out;
    for (const auto& record : records) {
        nlohmann::json row;
        row["name"] = record.name;
        row["statistic"] = record.statistic;
        row["threshold"] = record.threshold;
        row["pass"] = record.pass;
        if (!record.details.empty()) row["details"] = record.details;
        out += row.dump();
        out += '\n';
    }
    return out;
}

std::string report_table(const std::vector<TestRecord>& records) {
    std::ostringstream out;
    for (const auto& record : records) {
        out << (record.pass ? "[PASS] " : "[FAIL] ") << record.name
            << "  statistic=" << format_double(record.statistic)
            << " threshold=" << format_double(record.threshold);
        if (!record.details.empty()) out << "  " << record.details;
        out << '\n';
    }
    return out.str();
}

}  // namespace polysim
