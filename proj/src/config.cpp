#include "polysim/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "polysim/errors.hpp"

namespace polysim {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw config_error("config field '" + field + "': " + what);
}

const json& require(const json& parent, const std::string& field, const std::string& path) {
    const auto it = parent.find(field);
    if (it == parent.end()) field_error(path, "missing");
    return *it;
}

double number_at(const json& parent, const std::string& field, const std::string& path) {
    const auto& value = require(parent, field, path);
    if (!value.is_number()) field_error(path, "expected a number");
    return value.get<double>();
}

std::int64_t integer_at(const json& parent, const std::string& field, const std::string& path) {
    const auto& value = require(parent, field, path);
    if (!value.is_number_integer()) field_error(path, "expected an integer");
    return value.get<std::int64_t>();
}

FragmentationSpec parse_fragmentation(const json& node) {
    const auto kind = require(node, "kind", "model.fragmentation.kind").get<std::string>();
    if (kind == "UF") return FragmentationSpec::uf();
    if (kind == "BF") return FragmentationSpec::bf(number_at(node, "p", "model.fragmentation.p"));
    if (kind == "MF") {
        const auto m = static_cast<int>(integer_at(node, "m", "model.fragmentation.m"));
        const auto& weights_node = require(node, "weights", "model.fragmentation.weights");
        if (!weights_node.is_array()) field_error("model.fragmentation.weights", "expected an array");
        std::vector<double> weights;
        for (const auto& w : weights_node) weights.push_back(w.get<double>());
        return FragmentationSpec::mf(m, std::move(weights));
    }
    field_error("model.fragmentation.kind", "expected UF, BF or MF");
}

ScalingFunction parse_phi(const json& node) {
    const auto kind = require(node, "kind", "model.phi.kind").get<std::string>();
    if (kind == "power") return ScalingFunction::power(number_at(node, "gamma", "model.phi.gamma"));
    if (kind == "table") {
        const auto& points_node = require(node, "points", "model.phi.points");
        if (!points_node.is_array()) field_error("model.phi.points", "expected an array of [N, phi] pairs");
        std::vector<std::pair<std::int64_t, double>> points;
        for (const auto& pair : points_node) {
            if (!pair.is_array() || pair.size() != 2)
                field_error("model.phi.points", "each entry must be [N, phi]");
            points.push_back({pair[0].get<std::int64_t>(), pair[1].get<double>()});
        }
        std::optional<int> kc;
        if (node.contains("k_c")) kc = node["k_c"].get<int>();
        return ScalingFunction::from_table(std::move(points), kc);
    }
    field_error("model.phi.kind", "expected power or table");
}

ModelParams parse_model(const json& node) {
    ModelParams model;
    model.n_c = static_cast<int>(integer_at(node, "n_c", "model.n_c"));
    const auto& lambda_node = require(node, "lambda", "model.lambda");
    if (!lambda_node.is_array() || lambda_node.empty()) field_error("model.lambda", "expected a non-empty array");
    for (const auto& v : lambda_node) model.lambda.push_back(v.get<double>());
    const auto& mu_node = require(node, "mu", "model.mu");
    if (!mu_node.is_array()) field_error("model.mu", "expected an array");
    for (const auto& v : mu_node) model.mu.push_back(v.get<double>());
    model.phi = parse_phi(require(node, "phi", "model.phi"));
    model.fragmentation = parse_fragmentation(require(node, "fragmentation", "model.fragmentation"));
    if (node.contains("k_max_tracked")) model.k_max_tracked = node["k_max_tracked"].get<int>();
    return model;
}

StopRule parse_stop(const json& node) {
    const auto rule = require(node, "rule", "stop.rule").get<std::string>();
    if (rule == "first_nucleation") return StopRule::first_nucleation();
    if (rule == "lag") return StopRule::lag();
    if (rule == "fixed_horizon") return StopRule::fixed_horizon(number_at(node, "t", "stop.t"));
    if (rule == "fixed_rescaled_horizon")
        return StopRule::fixed_rescaled_horizon(number_at(node, "t", "stop.t"));
    if (rule == "event_budget")
        return StopRule::event_budget(static_cast<std::uint64_t>(integer_at(node, "events", "stop.events")));
    if (rule == "poisson_window") return StopRule::poisson_window(number_at(node, "t", "stop.t"));
    field_error("stop.rule", "expected one of first_nucleation, lag, fixed_horizon, "
                             "fixed_rescaled_horizon, event_budget, poisson_window");
}

InitialCondition parse_init(const json& node) {
    const auto kind = require(node, "kind", "init.kind").get<std::string>();
    if (kind == "pure_monomers") return InitialCondition::pure_monomers();
    if (kind == "seeded") {
        std::vector<std::pair<std::int64_t, std::int64_t>> counts;
        const auto& counts_node = require(node, "counts", "init.counts");
        if (!counts_node.is_object()) field_error("init.counts", "expected an object {size: count}");
        for (const auto& [key, value] : counts_node.items())
            counts.push_back({std::stoll(key), value.get<std::int64_t>()});
        double epsilon = 0.1;
        if (node.contains("epsilon")) epsilon = node["epsilon"].get<double>();
        return InitialCondition::seeded(std::move(counts), epsilon);
    }
    field_error("init.kind", "expected pure_monomers or seeded");
}

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    if (N_list.empty()) throw config_error("config field 'N_list': must not be empty");
    std::int64_t previous = 0;
    for (std::int64_t N : N_list) {
        if (N <= previous) throw config_error("config field 'N_list': must be strictly increasing");
        if (N < model.n_c) throw config_error("config field 'N_list': N must be at least n_c");
        previous = N;
    }
    if (replications < 1) throw config_error("config field 'replications': must be >= 1");
    if (!(delta > 0.0) || delta >= 1.0) throw config_error("config field 'delta': must lie in (0,1)");
    if (worker_count < 1) throw config_error("config field 'worker_count': must be >= 1");
    if (event_budget < 1) throw config_error("config field 'event_budget': must be >= 1");
    if (observers.curve && observers.curve_points < 2)
        throw config_error("config field 'observers.curve_points': must be >= 2");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw config_error(std::string("config is not valid JSON: ") + err.what());
    }
    ExperimentConfig config;
    config.model = parse_model(require(root, "model", "model"));
    const auto& n_node = require(root, "N_list", "N_list");
    if (!n_node.is_array()) field_error("N_list", "expected an array");
    for (const auto& n : n_node) config.N_list.push_back(n.get<std::int64_t>());
    config.replications = integer_at(root, "replications", "replications");
    const auto mode = require(root, "mode", "mode").get<std::string>();
    if (mode == "full")
        config.mode = SimulationMode::Full;
    else if (mode == "truncated")
        config.mode = SimulationMode::Truncated;
    else
        field_error("mode", "expected full or truncated");
    config.stop = parse_stop(require(root, "stop", "stop"));
    if (root.contains("delta")) config.delta = root["delta"].get<double>();
    if (root.contains("observers")) {
        const auto& node = root["observers"];
        if (node.contains("balance")) config.observers.balance = node["balance"].get<bool>();
        if (node.contains("curve")) config.observers.curve = node["curve"].get<bool>();
        if (node.contains("curve_points")) config.observers.curve_points = node["curve_points"].get<int>();
        if (node.contains("curve_horizon_scaled"))
            config.observers.curve_horizon_scaled = node["curve_horizon_scaled"].get<double>();
    }
    config.init = root.contains("init") ? parse_init(root["init"]) : InitialCondition::pure_monomers();
    config.master_seed = static_cast<std::uint64_t>(integer_at(root, "master_seed", "master_seed"));
    if (root.contains("worker_count")) config.worker_count = root["worker_count"].get<int>();
    if (root.contains("event_budget"))
        config.event_budget = static_cast<std::uint64_t>(root["event_budget"].get<std::int64_t>());
    if (root.contains("write_curves")) config.write_curves = root["write_curves"].get<bool>();
    config.validate();
    return config;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

}  // namespace polysim
