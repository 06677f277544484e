#include "stakemkt/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stakemkt {

MarketConfig baseline_market() {
    MarketConfig config;
    config.schedule = IssuanceSchedule::current();
    config.mev_total = 300000.0;
    config.max_supply = 120e6;

    AgentClass expert;
    expert.label = "expert";
    expert.population = 25000.0;
    expert.fee = 0.0;
    expert.cost = {0.4, 0.00053, 2.0};
    expert.has_mev = true;

    AgentClass techie;
    techie.label = "techie";
    techie.population = 200000.0;
    techie.fee = 0.10;
    techie.cost = {0.0, 0.0038, 1.5};
    techie.defi_yield = 0.02;

    AgentClass retailer;
    retailer.label = "retailer";
    retailer.population = 925000.0;
    retailer.fee = 0.25;
    retailer.cost = {0.0, 0.0048, 1.5};

    config.classes = {expert, techie, retailer};
    return config;
}

MarketConfig mev_variance_market() {
    MarketConfig config = baseline_market();
    config.classes[0].risk_model = RiskModel::VariancePenalty;
    return config;
}

MarketConfig inattentive_market() {
    MarketConfig config = mev_variance_market();

    AgentClass institution;
    institution.label = "institution";
    institution.population = 300000.0;
    institution.fee = 0.25;
    institution.cost = {0.0, 0.00375, 1.5};

    AgentClass inattentive;
    inattentive.label = "inattentive";
    inattentive.population = 625000.0;
    inattentive.fee = 0.25;
    inattentive.cost = {0.0, 0.0048, 1.5};
    inattentive.fixed_deposit = 10.4;  // 6.5M ETH in aggregate

    // institutions take the retail slot; the fixed block closes the market
    config.classes.pop_back();
    config.classes.push_back(institution);
    config.classes.push_back(inattentive);
    return config;
}

IntermediaryConfig default_intermediary() { return IntermediaryConfig{}; }

std::vector<std::pair<std::string, double>> reference_shares() {
    return {{"expert", 0.027}, {"techie", 0.541}, {"retailer", 0.446}};
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
    mutable bool used = false;
};

// Parsed file: section -> key -> entry. Section and key order preserved
// separately where it matters (class definitions).
struct ParsedConfig {
    std::string origin;
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;
    std::vector<std::string> section_order;

    [[noreturn]] void fail(const std::string& what, std::size_t line = 0) const {
        std::string msg = origin;
        if (line > 0) msg += ":" + std::to_string(line);
        throw std::runtime_error(msg + ": " + what);
    }

    bool has(const std::string& section) const { return sections.count(section) > 0; }

    const ConfigEntry* lookup(const std::string& section, const std::string& key) const {
        const auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    double number(const std::string& section, const std::string& key, double fallback) const {
        const ConfigEntry* e = lookup(section, key);
        if (!e) return fallback;
        char* end = nullptr;
        const double v = std::strtod(e->value.c_str(), &end);
        if (end == e->value.c_str() || *end != '\0') {
            fail(section + "." + key + ": expected a number, got '" + e->value + "'", e->line);
        }
        return v;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        const ConfigEntry* e = lookup(section, key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "1") return true;
        if (e->value == "false" || e->value == "0") return false;
        fail(section + "." + key + ": expected true/false, got '" + e->value + "'", e->line);
    }

    std::string text(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
        const ConfigEntry* e = lookup(section, key);
        return e ? e->value : fallback;
    }
};

ParsedConfig parse_config(std::istream& in, const std::string& origin) {
    ParsedConfig cfg;
    cfg.origin = origin;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') cfg.fail("unterminated section header", line_no);
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) cfg.fail("empty section name", line_no);
            if (!cfg.sections.count(section)) cfg.section_order.push_back(section);
            cfg.sections[section];
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) cfg.fail("expected key = value", line_no);
        if (section.empty()) cfg.fail("key outside any [section]", line_no);
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) cfg.fail("empty key", line_no);
        if (cfg.sections[section].count(key)) {
            cfg.fail("duplicate key " + section + "." + key, line_no);
        }
        cfg.sections[section][key] = {value, line_no, false};
    }
    return cfg;
}

RiskModel parse_risk_model(const ParsedConfig& cfg, const std::string& section,
                           const std::string& value, std::size_t line) {
    if (value == "neutral") return RiskModel::Neutral;
    if (value == "variance_penalty") return RiskModel::VariancePenalty;
    if (value == "exclude_mev") return RiskModel::ExcludeMev;
    cfg.fail(section + ".risk_model: expected neutral/variance_penalty/exclude_mev, got '" +
                 value + "'",
             line);
}

AgentClass parse_class(const ParsedConfig& cfg, const std::string& section) {
    AgentClass cls;
    cls.label = section.substr(std::string("class.").size());
    cls.population = cfg.number(section, "population", 0.0);
    cls.fee = cfg.number(section, "fee", 0.0);
    cls.cost.fixed = cfg.number(section, "fixed_cost", 0.0);
    cls.cost.variable_coeff = cfg.number(section, "var_coeff", 0.0);
    cls.cost.exponent = cfg.number(section, "exponent", 1.5);
    cls.has_mev = cfg.boolean(section, "has_mev", true);
    cls.defi_yield = cfg.number(section, "defi_yield", 0.0);
    if (const ConfigEntry* e = cfg.lookup(section, "risk_model")) {
        cls.risk_model = parse_risk_model(cfg, section, e->value, e->line);
    }
    if (cfg.lookup(section, "fixed_deposit")) {
        cls.fixed_deposit = cfg.number(section, "fixed_deposit", 0.0);
    }
    return cls;
}

std::vector<Term> parse_terms(const ParsedConfig& cfg, const std::string& section,
                              const std::string& key, const ConfigEntry& entry) {
    // comma-separated term list; commas inside log(...)/lag(...) don't split
    std::vector<std::string> pieces;
    std::string current;
    int depth = 0;
    for (char ch : entry.value) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            pieces.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    if (!trim(current).empty()) pieces.push_back(current);

    std::vector<Term> terms;
    for (const std::string& piece : pieces) {
        try {
            terms.push_back(Term::parse(piece));
        } catch (const std::exception& e) {
            cfg.fail(section + "." + key + ": " + e.what(), entry.line);
        }
    }
    return terms;
}

}  // namespace

RunConfig load_run_config(std::istream& in, const std::string& origin) {
    const ParsedConfig cfg = parse_config(in, origin);
    RunConfig run;

    const std::string schedule_name = cfg.text("schedule", "name", "current");
    if (schedule_name == "custom") {
        run.market.schedule.cf = cfg.number("schedule", "cf", IssuanceSchedule::kDefaultCf);
        run.market.schedule.k = cfg.number("schedule", "k", 0.0);
    } else {
        try {
            run.market.schedule = IssuanceSchedule::by_name(schedule_name);
        } catch (const std::exception& e) {
            cfg.fail(std::string("schedule.name: ") + e.what());
        }
        run.market.schedule.cf =
            cfg.number("schedule", "cf", run.market.schedule.cf);
        run.market.schedule.k = cfg.number("schedule", "k", run.market.schedule.k);
    }

    run.market.mev_total = cfg.number("market", "mev_total", run.market.mev_total);
    run.market.max_supply = cfg.number("market", "max_supply", run.market.max_supply);
    run.market.exact_foc = cfg.boolean("market", "exact_foc", false);

    // Any class.* section replaces the built-in class list wholesale.
    std::vector<AgentClass> classes;
    for (const std::string& section : cfg.section_order) {
        if (section.rfind("class.", 0) == 0) classes.push_back(parse_class(cfg, section));
    }
    if (!classes.empty()) run.market.classes = std::move(classes);
    try {
        run.market.validate();
    } catch (const std::exception& e) {
        cfg.fail(e.what());
    }

    run.intermediary.user_fee = cfg.number("intermediary", "user_fee", run.intermediary.user_fee);
    run.intermediary.passthrough_fee =
        cfg.number("intermediary", "passthrough_fee", run.intermediary.passthrough_fee);
    run.intermediary.cssp_count = static_cast<int>(
        cfg.number("intermediary", "cssp_count", run.intermediary.cssp_count));
    const std::string scale = cfg.text("intermediary", "cost_scale", "auto");
    if (scale != "auto") {
        run.intermediary.intermediary_cost_scale =
            cfg.number("intermediary", "cost_scale", 0.0);
    }
    run.intermediary.cssp_cost_scale =
        cfg.number("intermediary", "cssp_cost_scale", run.intermediary.cssp_cost_scale);
    run.intermediary.fee_cap = cfg.number("intermediary", "fee_cap", run.intermediary.fee_cap);
    run.intermediary.fee_step = cfg.number("intermediary", "fee_step", run.intermediary.fee_step);

    run.sweep.draws = static_cast<std::uint64_t>(cfg.number("sweep", "draws", 10000));
    run.sweep.seed = static_cast<std::uint64_t>(cfg.number("sweep", "seed", 1));
    run.sweep.bins = static_cast<int>(cfg.number("sweep", "bins", 20));
    run.sweep.threads = static_cast<int>(cfg.number("sweep", "threads", 0));

    run.dynamics.initial_supply =
        cfg.number("dynamics", "initial_supply", run.dynamics.initial_supply);
    run.dynamics.horizon = static_cast<int>(cfg.number("dynamics", "horizon", run.dynamics.horizon));

    run.calibrate.cells = static_cast<int>(cfg.number("calibrate", "cells", run.calibrate.cells));
    run.calibrate.draws_per_cell = static_cast<int>(
        cfg.number("calibrate", "draws_per_cell", run.calibrate.draws_per_cell));
    run.calibrate.seed = static_cast<std::uint64_t>(
        cfg.number("calibrate", "seed", static_cast<double>(run.calibrate.seed)));
    run.calibrate.lo_scale = cfg.number("calibrate", "lo_scale", run.calibrate.lo_scale);
    run.calibrate.hi_scale = cfg.number("calibrate", "hi_scale", run.calibrate.hi_scale);
    run.calibrate.class_a = cfg.text("calibrate", "class_a", run.calibrate.class_a);
    run.calibrate.class_b = cfg.text("calibrate", "class_b", run.calibrate.class_b);
    if (cfg.has("calibrate")) {
        std::vector<std::pair<std::string, double>> ref;
        for (const auto& [label, share] : run.calibrate.reference) {
            ref.emplace_back(label, cfg.number("calibrate", "reference_" + label, share));
        }
        run.calibrate.reference = std::move(ref);
    }

    if (cfg.has("regress")) {
        ModelSpec spec;
        const ConfigEntry* response = cfg.lookup("regress", "response");
        if (!response) cfg.fail("regress.response is required");
        try {
            spec.response = Term::parse(response->value);
        } catch (const std::exception& e) {
            cfg.fail(std::string("regress.response: ") + e.what(), response->line);
        }
        if (const ConfigEntry* e = cfg.lookup("regress", "regressors")) {
            spec.regressors = parse_terms(cfg, "regress", "regressors", *e);
        }
        if (const ConfigEntry* e = cfg.lookup("regress", "instruments")) {
            spec.instruments = parse_terms(cfg, "regress", "instruments", *e);
        }
        if (const ConfigEntry* e = cfg.lookup("regress", "endogenous")) {
            for (const Term& t : parse_terms(cfg, "regress", "endogenous", *e)) {
                spec.endogenous.push_back(t.name());
            }
        }
        spec.intercept = cfg.boolean("regress", "intercept", true);
        spec.weekly = cfg.boolean("regress", "weekly", false);
        spec.robust = cfg.boolean("regress", "robust", true);
        run.model = std::move(spec);
    }

    // Surface typos early: every provided key must belong to the schema.
    for (const auto& [section, keys] : cfg.sections) {
        for (const auto& [key, entry] : keys) {
            if (!entry.used) {
                cfg.fail("unknown key " + section + "." + key, entry.line);
            }
        }
    }
    return run;
}

RunConfig load_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return load_run_config(in, path);
}

}  // namespace stakemkt
