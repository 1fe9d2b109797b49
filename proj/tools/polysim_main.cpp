#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polysim/branching.hpp"
#include "polysim/errors.hpp"
#include "polysim/runner.hpp"

namespace fs = std::filesystem;
using namespace polysim;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

FragmentationSpec parse_spec_string(const std::string& text) {
    if (text == "UF") return FragmentationSpec::uf();
    if (text.rfind("BF:", 0) == 0) return FragmentationSpec::bf(std::stod(text.substr(3)));
    if (text.rfind("MF:", 0) == 0) {
        const auto rest = text.substr(3);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw config_error("MF spec must look like MF:m:w1,w2,...");
        const int m = std::stoi(rest.substr(0, colon));
        std::vector<double> weights;
        std::string item;
        std::istringstream weights_in(rest.substr(colon + 1));
        while (std::getline(weights_in, item, ',')) weights.push_back(std::stod(item));
        return FragmentationSpec::mf(m, std::move(weights));
    }
    throw config_error("fragmentation spec must be UF, BF:<p> or MF:<m>:<w1,...>");
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
    const auto config = ExperimentConfig::from_json_file(config_path);
    const auto result = run_sweep(config);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "summary.csv", summary_csv(result.summaries));
    bool any_events = false;
    for (const auto& events : result.nucleation_events_scaled)
        if (!events.empty()) any_events = true;
    if (any_events) write_file(fs::path(out_dir) / "events.csv", events_csv(result));
    if (config.observers.balance)
        write_file(fs::path(out_dir) / "balance.csv", balance_csv(result));
    if (config.write_curves && config.observers.curve) {
        for (std::size_t i = 0; i < result.curves.size(); ++i) {
            if (result.curves[i].empty()) continue;
            const auto& summary = result.summaries[i];
            const auto name = "curve_N" + std::to_string(summary.N) + "_rep" +
                              std::to_string(summary.replication_id) + ".csv";
            write_file(fs::path(out_dir) / name, curve_csv(result.curves[i]));
        }
    }
    std::cout << "wrote " << result.summaries.size() << " summary rows to " << out_dir
              << " (events " << result.total_events << ", truncated runs " << result.truncated_runs
              << ")\n";
    return 0;
}

int run_validate(const std::string& config_path, const std::string& summaries_path,
                 const std::string& events_path, const std::string& balance_path,
                 const std::string& report_path) {
    const auto config = ExperimentConfig::from_json_file(config_path);
    const auto summaries = read_summary_csv(summaries_path);
    EventsFile events;
    BalanceFile balance;
    const EventsFile* events_ptr = nullptr;
    const BalanceFile* balance_ptr = nullptr;
    if (!events_path.empty()) {
        events = read_events_csv(events_path);
        events_ptr = &events;
    }
    if (!balance_path.empty()) {
        balance = read_balance_csv(balance_path);
        balance_ptr = &balance;
    }
    const auto records = validate_summaries(config, summaries, events_ptr, balance_ptr);
    std::cout << report_table(records);
    if (!report_path.empty()) write_file(report_path, report_jsonl(records));
    return 0;
}

int run_fragcheck(const std::string& spec_text, const std::string& check, std::int64_t k_min,
                  std::int64_t k_max, int n_c, std::int64_t samples, std::uint64_t seed) {
    const auto spec = parse_spec_string(spec_text);
    if (check == "moments") {
        std::cout << "k,mass_identity,abs_error\n";
        for (std::int64_t k = k_min; k <= k_max; ++k) {
            double identity = 0.0;
            for (std::int64_t p = 1; p < k; ++p)
                identity += static_cast<double>(p) * moment(spec, k, p);
            std::printf("%lld,%.17g,%.3g\n", static_cast<long long>(k), identity,
                        std::abs(identity - static_cast<double>(k)));
        }
        return 0;
    }
    if (check == "a3") {
        Rng rng(seed);
        const auto report = check_A3(spec, n_c, k_min, k_max, samples, rng);
        std::cout << "k,max_small_fragments,two_stable_fraction\n";
        for (const auto& row : report.rows)
            std::printf("%lld,%lld,%.17g\n", static_cast<long long>(row.k),
                        static_cast<long long>(row.max_small_fragments), row.two_stable_fraction);
        std::cout << "# C0_hat=" << report.c0_hat << " growth_flag=" << (report.growth_flag ? 1 : 0)
                  << "\n";
        return 0;
    }
    if (check == "a4") {
        std::cout << "k,k_prime,violations\n";
        bool all_clean = true;
        for (std::int64_t k = k_min; k <= k_max; ++k) {
            for (std::int64_t kp = k + 1; kp <= k_max; ++kp) {
                const auto report = check_A4(spec, k, kp);
                if (!report.passed()) all_clean = false;
                std::printf("%lld,%lld,%zu\n", static_cast<long long>(k),
                            static_cast<long long>(kp), report.violations.size());
            }
        }
        std::cout << "# all_clean=" << (all_clean ? 1 : 0) << "\n";
        return 0;
    }
    throw config_error("--check must be moments, a3 or a4");
}

int run_branching_cmd(double alpha, double mu, int n_c, const std::string& spec_text,
                      std::int64_t initial_size, std::int64_t reps, double horizon,
                      std::int64_t cap, std::uint64_t seed, bool find_kappa) {
    BranchingParams params;
    params.alpha = alpha;
    params.mu = mu;
    params.n_c = n_c;
    params.fragmentation = parse_spec_string(spec_text);
    params.initial_size = initial_size > 0 ? initial_size : n_c;
    if (find_kappa) {
        const auto estimate = find_critical_ratio(params, reps, horizon, cap, seed);
        std::cout << "kappa_hat,bracket_low,bracket_high,survival_at_high\n";
        std::printf("%.17g,%.17g,%.17g,%.17g\n", estimate.kappa_hat, estimate.bracket_low,
                    estimate.bracket_high, estimate.survival_at_high);
        return 0;
    }
    const auto estimate = estimate_survival(params, reps, horizon, cap, seed);
    std::cout << "alpha,mu,survival,ci_low,ci_high,growth_rate,growth_ci_low,growth_ci_high,"
                 "survivors,capped,replications\n";
    std::printf("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%lld,%lld\n", alpha, mu,
                estimate.survival_prob, estimate.survival_ci_low, estimate.survival_ci_high,
                estimate.growth_rate.value_or(0.0), estimate.growth_ci_low, estimate.growth_ci_high,
                static_cast<long long>(estimate.survivors),
                static_cast<long long>(estimate.capped_runs),
                static_cast<long long>(estimate.replications));
    return 0;
}

int run_mminf(double arrival, double service, std::int64_t level, double xi, std::int64_t paths,
              std::int64_t batch, std::int64_t initial, std::uint64_t seed) {
    MMInfParams params;
    params.arrival = arrival;
    params.service = service;
    params.level = level;
    params.batch = batch;
    params.initial = initial;

    double closed = std::nan("");
    if (batch == 1 && initial == 0) closed = mm_infinity_laplace(params, xi);

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::int64_t path = 0; path < paths; ++path) {
        const double t = mm_infinity_simulate(params, mix_seed(seed, static_cast<std::uint64_t>(path)));
        const double value = std::exp(-service * xi * t);
        sum += value;
        sum_sq += value * value;
    }
    const double n = static_cast<double>(paths);
    const double mc = sum / n;
    const double variance = std::max(0.0, sum_sq / n - mc * mc);
    const double se = std::sqrt(variance / n);
    std::cout << "xi,closed_form,mc_estimate,mc_se,paths\n";
    std::printf("%.17g,%.17g,%.17g,%.17g,%lld\n", xi, closed, mc, se, static_cast<long long>(paths));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polysim: exact kinetic Monte Carlo for nucleation-fragmentation polymerization"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    auto* simulate_cmd = app.add_subcommand("simulate", "run a replication sweep from a JSON config");
    simulate_cmd->add_option("--config", config_path, "JSON config path")->required();
    simulate_cmd->add_option("--out", out_dir, "output directory");

    std::string summaries_path, events_path, balance_path, report_path;
    auto* validate_cmd = app.add_subcommand("validate", "run the limit-theorem report over summaries");
    validate_cmd->add_option("--config", config_path, "JSON config path")->required();
    validate_cmd->add_option("--summaries", summaries_path, "summary CSV path")->required();
    validate_cmd->add_option("--events", events_path, "nucleation events CSV path");
    validate_cmd->add_option("--balance", balance_path, "balance deltas CSV path");
    validate_cmd->add_option("--report", report_path, "JSON-lines report output path");

    std::string spec_text = "UF", check = "moments";
    std::int64_t k_min = 2, k_max = 12, samples = 10000;
    int n_c = 4;
    std::uint64_t seed = 1;
    auto* frag_cmd = app.add_subcommand("fragcheck", "fragmentation moment/A-3/A-4 reports");
    frag_cmd->add_option("--spec", spec_text, "UF | BF:<p> | MF:<m>:<w1,...>");
    frag_cmd->add_option("--check", check, "moments | a3 | a4");
    frag_cmd->add_option("--kmin", k_min);
    frag_cmd->add_option("--kmax", k_max);
    frag_cmd->add_option("--nc", n_c);
    frag_cmd->add_option("--samples", samples);
    frag_cmd->add_option("--seed", seed);

    double alpha = 1.0, mu = 1.0, horizon = 20.0;
    std::int64_t reps = 200, cap = 100000, initial_size = 0;
    bool find_kappa = false;
    auto* branch_cmd = app.add_subcommand("branching", "survival/growth of the stable-polymer process");
    branch_cmd->add_option("--alpha", alpha);
    branch_cmd->add_option("--mu", mu);
    branch_cmd->add_option("--nc", n_c);
    branch_cmd->add_option("--frag", spec_text);
    branch_cmd->add_option("--initial-size", initial_size);
    branch_cmd->add_option("--reps", reps);
    branch_cmd->add_option("--horizon", horizon);
    branch_cmd->add_option("--cap", cap);
    branch_cmd->add_option("--seed", seed);
    branch_cmd->add_flag("--find-kappa0", find_kappa, "bisect for the smallest surviving alpha/mu");

    double arrival = 1.0, service = 1.0, xi = 0.5;
    std::int64_t level = 4, paths = 100000, batch = 1, initial_state = 0;
    auto* mminf_cmd = app.add_subcommand("mminf", "M/M/inf hitting-time transform vs simulation");
    mminf_cmd->add_option("--arrival", arrival);
    mminf_cmd->add_option("--service", service);
    mminf_cmd->add_option("--level", level);
    mminf_cmd->add_option("--xi", xi);
    mminf_cmd->add_option("--paths", paths);
    mminf_cmd->add_option("--batch", batch);
    mminf_cmd->add_option("--initial", initial_state);
    mminf_cmd->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate_cmd->parsed()) return run_simulate(config_path, out_dir);
        if (validate_cmd->parsed())
            return run_validate(config_path, summaries_path, events_path, balance_path, report_path);
        if (frag_cmd->parsed())
            return run_fragcheck(spec_text, check, k_min, k_max, n_c, samples, seed);
        if (branch_cmd->parsed())
            return run_branching_cmd(alpha, mu, n_c, spec_text, initial_size, reps, horizon, cap,
                                     seed, find_kappa);
        if (mminf_cmd->parsed())
            return run_mminf(arrival, service, level, xi, paths, batch, initial_state, seed);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const unsupported_config& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const insufficient_data& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 4;
}
