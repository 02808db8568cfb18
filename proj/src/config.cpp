#include "switchrl/config.hpp"

#include "switchrl/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace switchrl {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing text");
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad number for " + key + ": " + value);
    }
}

}  // namespace

bool ConfigFile::has(const std::string& key) const { return values.count(key) > 0; }

std::string ConfigFile::require(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw std::runtime_error("config: missing key " + key);
    return it->second;
}

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, values.at(key)) : fallback;
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    return has(key) ? static_cast<int>(to_double(key, values.at(key))) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoull(values.at(key));
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad integer for " + key);
    }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = values.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config: bad boolean for " + key);
}

ConfigFile ConfigFile::parse(std::istream& in) {
    ConfigFile cfg;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config: bad section header at line " +
                                         std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key=value at line " +
                                     std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: empty key at line " + std::to_string(line_no));
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.values[full] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
    std::istringstream ss(text);
    return parse(ss);
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return parse(in);
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& item : split(text, ','))
        out.push_back(to_double("list entry", item));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double x : parse_double_list(text)) out.push_back(static_cast<int>(x));
    return out;
}

namespace {

Activation parse_activation(const std::string& text) {
    if (text == "identity") return Activation::identity();
    if (text == "positive") return Activation::positive_indicator();
    if (text.rfind("scaled:", 0) == 0)
        return Activation::scaled(to_double("sigma", text.substr(7)));
    if (text.rfind("table:", 0) == 0) {
        std::vector<std::pair<double, double>> table;
        for (const std::string& entry : split(text.substr(6), ',')) {
            const auto parts = split(entry, ':');
            if (parts.size() != 2) throw std::runtime_error("config: bad sigma table entry");
            table.emplace_back(to_double("sigma threshold", parts[0]),
                               to_double("sigma value", parts[1]));
        }
        return Activation::step_table(std::move(table));
    }
    throw std::runtime_error("config: unknown sigma: " + text);
}

std::string format_activation(const Activation& sigma) {
    switch (sigma.kind) {
        case Activation::Kind::Identity:
            return "identity";
        case Activation::Kind::PositiveIndicator:
            return "positive";
        case Activation::Kind::ScaledIdentity:
            return "scaled:" + fmt_exact(sigma.factor);
        case Activation::Kind::StepTable: {
            std::string out = "table:";
            for (std::size_t i = 0; i < sigma.table.size(); ++i) {
                if (i) out += ',';
                out += fmt_exact(sigma.table[i].first) + ":" +
                       fmt_exact(sigma.table[i].second);
            }
            return out;
        }
    }
    return "identity";
}

GroundCost parse_ground(const std::string& text) {
    if (text == "cross") return GroundCost::cross_component_indicator();
    if (text == "one") return GroundCost::constant_one();
    throw std::runtime_error("config: unknown ground cost: " + text);
}

std::string format_ground(const GroundCost& g) {
    switch (g.kind) {
        case GroundCost::Kind::CrossComponentIndicator:
            return "cross";
        case GroundCost::Kind::ConstantOne:
            return "one";
        case GroundCost::Kind::ExplicitMatrix:
            throw std::runtime_error("config: explicit ground matrices are API-only");
    }
    return "one";
}

CustomCostTable parse_table(const std::string& text) {
    CustomCostTable table;
    for (const std::string& entry : split(text, ';')) {
        const auto parts = split(entry, ':');
        if (parts.size() != 3) throw std::runtime_error("config: bad cost table entry");
        table.entries[{parts[0], parts[1]}] = to_double("table cost", parts[2]);
    }
    if (table.entries.empty()) throw std::runtime_error("config: empty cost table");
    return table;
}

std::string format_table(const CustomCostTable& table) {
    std::string out;
    for (const auto& [key, cost] : table.entries) {
        if (!out.empty()) out += ';';
        out += key.first + ":" + key.second + ":" + fmt_exact(cost);
    }
    return out;
}

Vector parse_weights(const std::string& text, int n, const char* what) {
    const std::vector<double> xs = parse_double_list(text);
    if (static_cast<int>(xs.size()) != n)
        throw std::runtime_error(std::string("config: ") + what + " length mismatch");
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = xs[static_cast<std::size_t>(i)];
    return v;
}

}  // namespace

CostSpec cost_spec_from_config(const ConfigFile& cfg, int n_states, int n_actions) {
    const std::string kind = cfg.get("cost.kind", "local");
    CostSpec spec;
    if (kind == "local") {
        spec = CostSpec::local(n_states);
    } else if (kind == "global") {
        spec = CostSpec::global();
    } else if (kind == "indicator") {
        spec.kind = StatewiseKind::Indicator;
    } else if (kind == "transport_two" || kind == "transport_general") {
        spec.kind = kind == "transport_two" ? StatewiseKind::TransportTwo
                                            : StatewiseKind::TransportGeneral;
        spec.partition = parse_int_list(cfg.require("cost.partition"));
        spec.learn_ground = parse_ground(cfg.get("cost.c1", "cross"));
        spec.trans_ground = parse_ground(cfg.get("cost.c2", "one"));
        const std::string mode = cfg.get("cost.plan", "optimal");
        if (mode == "first_feasible")
            spec.plan_mode = PlanMode::FirstFeasible;
        else if (mode != "optimal")
            throw std::runtime_error("config: unknown plan mode: " + mode);
    } else if (kind == "custom_table") {
        spec.kind = StatewiseKind::CustomTable;
        spec.table = parse_table(cfg.require("cost.table"));
    } else {
        throw std::runtime_error("config: unknown cost kind: " + kind);
    }

    if (cfg.has("cost.sigma")) spec.sigma = parse_activation(cfg.require("cost.sigma"));
    spec.learn_weight = cfg.get_double("cost.c_l", spec.learn_weight);
    spec.trans_weight = cfg.get_double("cost.c_t", spec.trans_weight);
    const std::string mu = cfg.get("cost.mu", "uniform");
    if (mu != "uniform") spec.state_measure = parse_weights(mu, n_states, "mu");
    const std::string f = cfg.get("cost.f", "ones");
    if (f != "ones") spec.state_weight = parse_weights(f, n_states, "f");
    spec.validate(n_states, n_actions);
    return spec;
}

std::string format_cost_spec(const CostSpec& spec) {
    std::ostringstream out;
    out << "[cost]\n";
    switch (spec.kind) {
        case StatewiseKind::Indicator:
            out << "kind=indicator\n";
            break;
        case StatewiseKind::TransportTwo:
            out << "kind=transport_two\n";
            break;
        case StatewiseKind::TransportGeneral:
            out << "kind=transport_general\n";
            break;
        case StatewiseKind::CustomTable:
            out << "kind=custom_table\n";
            out << "table=" << format_table(spec.table) << '\n';
            break;
    }
    out << "sigma=" << format_activation(spec.sigma) << '\n';
    out << "c_l=" << fmt_exact(spec.learn_weight) << '\n';
    out << "c_t=" << fmt_exact(spec.trans_weight) << '\n';
    if (!spec.partition.empty()) {
        out << "partition=";
        for (std::size_t i = 0; i < spec.partition.size(); ++i)
            out << (i ? "," : "") << spec.partition[i];
        out << '\n';
    }
    if (spec.kind == StatewiseKind::TransportTwo ||
        spec.kind == StatewiseKind::TransportGeneral) {
        out << "c1=" << format_ground(spec.learn_ground) << '\n';
        out << "c2=" << format_ground(spec.trans_ground) << '\n';
        out << "plan="
            << (spec.plan_mode == PlanMode::Optimal ? "optimal" : "first_feasible")
            << '\n';
    }
    if (spec.state_measure.size() > 0) {
        out << "mu=";
        for (Eigen::Index i = 0; i < spec.state_measure.size(); ++i)
            out << (i ? "," : "") << fmt_exact(spec.state_measure(i));
        out << '\n';
    }
    if (spec.state_weight.size() > 0) {
        out << "f=";
        for (Eigen::Index i = 0; i < spec.state_weight.size(); ++i)
            out << (i ? "," : "") << fmt_exact(spec.state_weight(i));
        out << '\n';
    }
    return out.str();
}

OpeConfig ope_config_from_config(const ConfigFile& cfg, std::uint64_t seed) {
    OpeConfig ope;
    ope.lr_q = cfg.get_double("ope.lr_q", ope.lr_q);
    ope.soft = cfg.get_double("ope.soft", ope.soft);
    ope.batch_size = cfg.get_int("ope.batch_size", ope.batch_size);
    ope.epochs = cfg.get_int("ope.epochs", ope.epochs);
    ope.steps_per_epoch = cfg.get_int("ope.steps_per_epoch", ope.steps_per_epoch);
    ope.mc_action_samples = cfg.get_int("ope.mc_action_samples", ope.mc_action_samples);
    ope.grad_clip_q = cfg.get_double("ope.grad_clip_q", ope.grad_clip_q);
    ope.n_estimators = cfg.get_int("ope.n_estimators", ope.n_estimators);
    ope.loss_change_tol = cfg.get_double("ope.loss_change_tol", ope.loss_change_tol);
    ope.seed = seed;
    return ope;
}

NacConfig nac_config_from_config(const ConfigFile& cfg, std::uint64_t seed) {
    NacConfig nac;
    nac.evaluation = ope_config_from_config(cfg, seed);
    nac.lr_q = cfg.get_double("nac.lr_q", nac.evaluation.lr_q);
    nac.lr_actor = cfg.get_double("nac.lr_actor", nac.lr_actor);
    nac.soft = cfg.get_double("nac.soft", nac.evaluation.soft);
    nac.grad_clip_q = cfg.get_double("nac.grad_clip_q", nac.evaluation.grad_clip_q);
    nac.grad_clip_actor = cfg.get_double("nac.grad_clip_actor", nac.grad_clip_actor);
    nac.batch_size = cfg.get_int("nac.batch_size", nac.evaluation.batch_size);
    nac.steps_per_epoch = cfg.get_int("nac.steps_per_epoch", nac.evaluation.steps_per_epoch);
    nac.max_epochs = cfg.get_int("nac.max_epochs", nac.max_epochs);
    nac.n_estimators = cfg.get_int("nac.n_estimators", nac.evaluation.n_estimators);
    nac.mc_cost_states_train =
        cfg.get_int("nac.mc_cost_states_train", nac.mc_cost_states_train);
    nac.mc_cost_states_eval =
        cfg.get_int("nac.mc_cost_states_eval", nac.mc_cost_states_eval);
    nac.final_evaluation = cfg.get_bool("nac.final_evaluation", nac.final_evaluation);
    nac.stopping.epochs_stop = cfg.get_int("nac.epochs_stop", nac.stopping.epochs_stop);
    nac.stopping.alpha = cfg.get_double("nac.alpha", nac.stopping.alpha);
    nac.stopping.b_u = cfg.get_double("nac.b_u", nac.stopping.b_u);
    nac.stopping.b_d = cfg.get_double("nac.b_d", nac.stopping.b_d);
    nac.seed = seed;
    return nac;
}

CandidateSet candidate_set_from_config(const ConfigFile& cfg) {
    const std::string text = cfg.get("search.candidates", "deterministic");
    CandidateSet set;
    if (text == "deterministic") return set;
    if (text.rfind("grid:", 0) == 0) {
        set.kind = CandidateSet::Kind::Grid;
        set.grid_points = static_cast<int>(to_double("grid", text.substr(5)));
        return set;
    }
    throw std::runtime_error("config: unknown candidate set: " + text);
}

std::vector<std::uint64_t> seed_list_from_config(const ConfigFile& cfg,
                                                 std::uint64_t fallback) {
    if (!cfg.has("nac.seeds")) return {fallback};
    const std::string text = cfg.require("nac.seeds");
    const std::size_t dots = text.find("..");
    std::vector<std::uint64_t> seeds;
    if (dots != std::string::npos) {
        const std::uint64_t lo = std::stoull(text.substr(0, dots));
        const std::uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw std::runtime_error("config: bad seed range");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
        for (const std::string& item : split(text, ','))
            seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw std::runtime_error("config: empty seed list");
    return seeds;
}

}  // namespace switchrl
