#include "msim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace msim {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(s.substr(start)));
            return out;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                          v + "'");
    }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(parse_u64(key, v));
}

ParamRange parse_range(const std::string& key, const std::string& v) {
    const auto parts = split(v, ':');
    if (parts.size() == 1) {
        const double x = parse_double(key, parts[0]);
        return {x, x};
    }
    if (parts.size() == 2) {
        ParamRange r{parse_double(key, parts[0]), parse_double(key, parts[1])};
        if (r.hi < r.lo) throw ConfigError("config key '" + key + "': range hi < lo");
        return r;
    }
    throw ConfigError("config key '" + key + "': expected 'x' or 'lo:hi'");
}

std::vector<StepTerm> parse_terms(const std::string& key, const std::string& v) {
    std::vector<StepTerm> terms;
    for (const auto& entry : split(v, ';')) {
        if (entry.empty()) continue;
        const auto tok = split(entry, ':');
        if (tok.size() < 3)
            throw ConfigError("config key '" + key +
                              "': term needs '<step>:<const>:<linear>'");
        StepTerm t;
        t.step = parse_size(key, tok[0]);
        t.constant = parse_double(key, tok[1]);
        t.linear = parse_double(key, tok[2]);
        std::size_t i = 3;
        while (i < tok.size()) {
            if (i + 2 >= tok.size())
                throw ConfigError("config key '" + key +
                                  "': option leg needs 'call|put:<weight>:<strike>'");
            OptionLeg leg;
            if (tok[i] == "call")
                leg.is_call = true;
            else if (tok[i] == "put")
                leg.is_call = false;
            else
                throw ConfigError("config key '" + key + "': unknown leg kind '" +
                                  tok[i] + "'");
            leg.weight = parse_double(key, tok[i + 1]);
            leg.strike = parse_double(key, tok[i + 2]);
            t.legs.push_back(leg);
            i += 3;
        }
        terms.push_back(std::move(t));
    }
    return terms;
}

struct Entity {
    std::string name;
    std::map<std::string, std::string> fields;
};

/// Ordered key/value list -> config struct. Every key must be consumed.
RunConfig build(std::vector<std::pair<std::string, std::string>> items) {
    RunConfig cfg;
    for (auto& [k, v] : items) {
        if (cfg.kv.count(k)) throw ConfigError("duplicate config key '" + k + "'");
        cfg.kv.emplace(k, v);
    }

    std::vector<Entity> securities, groups;
    const auto entity_field = [&](std::vector<Entity>& list, const std::string& name,
                                  const std::string& field, const std::string& value) {
        auto it = std::find_if(list.begin(), list.end(),
                               [&](const Entity& e) { return e.name == name; });
        if (it == list.end()) {
            list.push_back({name, {}});
            it = list.end() - 1;
        }
        it->fields[field] = value;
    };

    bool have_expiry_default = true;
    for (const auto& [key, value] : items) {
        if (key == "grid.horizon") cfg.horizon = parse_double(key, value);
        else if (key == "grid.steps") cfg.steps = parse_size(key, value);
        else if (key == "underlying.z0") cfg.z0 = parse_double(key, value);
        else if (key == "underlying.drift") cfg.drift = parse_double(key, value);
        else if (key == "underlying.sigma") cfg.sigma = parse_double(key, value);
        else if (key == "scenarios.count") cfg.scenario_count = parse_size(key, value);
        else if (key == "clearing.kappa") cfg.kappa = parse_double(key, value);
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "output.returns") {
            if (value == "diff") cfg.log_returns = false;
            else if (value == "log") cfg.log_returns = true;
            else throw ConfigError("output.returns must be 'diff' or 'log'");
        } else if (key == "output.dir") {
            if (value.empty()) throw ConfigError("output.dir must be nonempty");
            cfg.out_dir = value;
        } else if (key == "audit.pairs") {
            for (const auto& pair : split(value, ',')) {
                if (pair.empty()) continue;
                const auto ids = split(pair, ':');
                if (ids.size() != 2 || ids[0].empty() || ids[1].empty())
                    throw ConfigError("audit.pairs entries must be '<id>:<id>'");
                cfg.audit_pairs.emplace_back(ids[0], ids[1]);
            }
        } else {
            const auto parts = split(key, '.');
            if (parts.size() == 3 && parts[0] == "security")
                entity_field(securities, parts[1], parts[2], value);
            else if (parts.size() == 3 && parts[0] == "population")
                entity_field(groups, parts[1], parts[2], value);
            else
                throw ConfigError("unknown config key '" + key + "'");
        }
    }
    (void)have_expiry_default;

    if (!(cfg.horizon > 0.0)) throw ConfigError("grid.horizon must be > 0");
    if (cfg.steps < 1) throw ConfigError("grid.steps must be >= 1");
    if (cfg.sigma < 0.0) throw ConfigError("underlying.sigma must be >= 0");
    if (cfg.scenario_count < 1) throw ConfigError("scenarios.count must be >= 1");
    if (cfg.kappa < 0.0) throw ConfigError("clearing.kappa must be >= 0");

    for (auto& e : securities) {
        SecuritySpec spec;
        spec.id = e.name;
        spec.expiry = cfg.steps;
        auto take = [&](const char* f) -> std::optional<std::string> {
            const auto it = e.fields.find(f);
            if (it == e.fields.end()) return std::nullopt;
            std::string v = it->second;
            e.fields.erase(it);
            return v;
        };
        const auto kind = take("kind");
        if (!kind) throw ConfigError("security '" + e.name + "' needs a kind");
        const std::string prefix = "security." + e.name + ".";
        if (*kind == "underlying") spec.kind = PayoffKind::underlying;
        else if (*kind == "forward") spec.kind = PayoffKind::forward;
        else if (*kind == "euro_call") spec.kind = PayoffKind::euro_call;
        else if (*kind == "euro_put") spec.kind = PayoffKind::euro_put;
        else if (*kind == "step_payout") spec.kind = PayoffKind::step_payout;
        else throw ConfigError("security '" + e.name + "': unknown kind '" + *kind + "'");

        if (const auto v = take("strike")) {
            if (spec.kind == PayoffKind::underlying || spec.kind == PayoffKind::step_payout)
                throw ConfigError(prefix + "strike does not apply to this kind");
            spec.strike = parse_double(prefix + "strike", *v);
        }
        if (const auto v = take("expiry")) {
            if (spec.kind == PayoffKind::underlying || spec.kind == PayoffKind::step_payout)
                throw ConfigError(prefix + "expiry does not apply to this kind");
            spec.expiry = parse_size(prefix + "expiry", *v);
        }
        if (const auto v = take("terms")) {
            if (spec.kind != PayoffKind::step_payout)
                throw ConfigError(prefix + "terms applies only to step_payout");
            spec.terms = parse_terms(prefix + "terms", *v);
        }
        if (!e.fields.empty())
            throw ConfigError("unknown config key '" + prefix + e.fields.begin()->first +
                              "'");
        try {
            spec.validate(cfg.steps);
        } catch (const std::exception& ex) {
            throw ConfigError("security '" + e.name + "': " + ex.what());
        }
        cfg.securities.push_back(std::move(spec));
    }

    for (auto& e : groups) {
        GroupConfig g;
        g.name = e.name;
        const std::string prefix = "population." + e.name + ".";
        auto take = [&](const char* f) -> std::optional<std::string> {
            const auto it = e.fields.find(f);
            if (it == e.fields.end()) return std::nullopt;
            std::string v = it->second;
            e.fields.erase(it);
            return v;
        };
        const auto side = take("side");
        if (!side) throw ConfigError("population '" + e.name + "' needs a side");
        if (*side == "fb") g.kind = GroupKind::fb;
        else if (*side == "fs") g.kind = GroupKind::fs;
        else if (*side == "technical") g.kind = GroupKind::technical;
        else throw ConfigError("population '" + e.name + "': unknown side '" + *side + "'");

        if (const auto v = take("count")) g.count = parse_size(prefix + "count", *v);
        if (const auto v = take("cash")) g.cash = parse_double(prefix + "cash", *v);

        const bool fundamental = g.kind != GroupKind::technical;
        if (fundamental) {
            if (const auto v = take("endowment"))
                g.endowment = parse_double(prefix + "endowment", *v);
            if (const auto v = take("utility")) {
                if (*v == "linear") g.utility = UtilityFn::Family::linear;
                else if (*v == "cara") g.utility = UtilityFn::Family::cara;
                else if (*v == "crra") g.utility = UtilityFn::Family::crra;
                else throw ConfigError(prefix + "utility must be linear, cara or crra");
            }
            if (const auto v = take("gamma")) g.gamma = parse_range(prefix + "gamma", *v);
            if (const auto v = take("eta")) g.eta = parse_range(prefix + "eta", *v);
            if (const auto v = take("floor")) g.floor = parse_double(prefix + "floor", *v);
            if (g.utility == UtilityFn::Family::cara && !(g.gamma.lo > 0.0))
                throw ConfigError(prefix + "gamma must be > 0 for cara");
            if (g.utility == UtilityFn::Family::crra &&
                (!(g.eta.lo > 0.0) || !(g.floor > 0.0)))
                throw ConfigError(prefix + "eta and floor must be > 0 for crra");
            if (!std::isfinite(g.endowment))
                throw ConfigError(prefix + "endowment must be finite");
        } else {
            if (const auto v = take("epsilon"))
                g.epsilon = parse_range(prefix + "epsilon", *v);
            if (const auto v = take("p_buy")) g.p_buy = parse_double(prefix + "p_buy", *v);
            if (const auto v = take("p_sell"))
                g.p_sell = parse_double(prefix + "p_sell", *v);
            if (const auto v = take("p_idle"))
                g.p_idle = parse_double(prefix + "p_idle", *v);
            if (!(g.epsilon.lo > 0.0))
                throw ConfigError(prefix + "epsilon must be > 0");
            for (double p : {g.p_buy, g.p_sell, g.p_idle})
                if (!(p >= 0.0 && p <= 1.0))
                    throw ConfigError(prefix + "switch probabilities must lie in [0,1]");
            if (std::abs(g.p_buy + g.p_sell + g.p_idle - 1.0) > 1e-12)
                throw ConfigError(prefix + "switch probabilities must sum to 1");
        }
        if (!e.fields.empty())
            throw ConfigError("unknown config key '" + prefix + e.fields.begin()->first +
                              "'");
        cfg.groups.push_back(std::move(g));
    }

    if (cfg.securities.empty()) throw ConfigError("config needs at least one security");
    if (cfg.n_fb() < 1 || cfg.n_fs() < 1)
        throw ConfigError("the market cannot open without at least one FB and one FS");
    for (const auto& [a, b] : cfg.audit_pairs) {
        if (!cfg.security_index(a) || !cfg.security_index(b))
            throw ConfigError("audit.pairs references unknown security '" +
                              (cfg.security_index(a) ? b : a) + "'");
    }
    return cfg;
}

}  // namespace

RunConfig RunConfig::from_string(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> items;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line =
            text.substr(start, end == std::string_view::npos ? text.size() - start
                                                             : end - start);
        ++line_no;
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;

        const auto hash_pos = line.find('#');
        if (hash_pos != std::string_view::npos) line = line.substr(0, hash_pos);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        std::string key = trim(std::string_view(trimmed).substr(0, eq));
        std::string value = trim(std::string_view(trimmed).substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        items.emplace_back(std::move(key), std::move(value));
    }
    return build(std::move(items));
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

RunConfig RunConfig::with(const std::string& key, const std::string& value) const {
    std::vector<std::pair<std::string, std::string>> items;
    bool replaced = false;
    for (const auto& [k, v] : kv) {
        if (k == key) {
            items.emplace_back(k, value);
            replaced = true;
        } else {
            items.emplace_back(k, v);
        }
    }
    if (!replaced) items.emplace_back(key, value);
    return build(std::move(items));  // re-validates, rejects unknown keys
}

std::string RunConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv) {  // std::map iterates in sorted key order
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::size_t RunConfig::n_fb() const {
    std::size_t n = 0;
    for (const auto& g : groups)
        if (g.kind == GroupKind::fb) n += g.count;
    return n;
}

std::size_t RunConfig::n_fs() const {
    std::size_t n = 0;
    for (const auto& g : groups)
        if (g.kind == GroupKind::fs) n += g.count;
    return n;
}

std::size_t RunConfig::n_technical() const {
    std::size_t n = 0;
    for (const auto& g : groups)
        if (g.kind == GroupKind::technical) n += g.count;
    return n;
}

std::optional<std::size_t> RunConfig::security_index(std::string_view id) const {
    for (std::size_t i = 0; i < securities.size(); ++i)
        if (securities[i].id == id) return i;
    return std::nullopt;
}

}  // namespace msim
