#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msim/security.hpp"
#include "msim/time_grid.hpp"
#include "msim/utility.hpp"

namespace msim {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;

    bool fixed() const { return lo == hi; }
    double sample(double u01) const { return lo + (hi - lo) * u01; }
};

enum class GroupKind { fb, fs, technical };

struct GroupConfig {
    std::string name;
    GroupKind kind = GroupKind::fb;
    std::size_t count = 1;
    double cash = 1e6;
    // fundamental groups
    double endowment = 0.0;  // initial position in every security
    UtilityFn::Family utility = UtilityFn::Family::cara;
    ParamRange gamma{0.5, 0.5};
    ParamRange eta{2.0, 2.0};
    double floor = 10.0;
    // technical groups
    ParamRange epsilon{0.01, 0.01};
    double p_buy = 0.3;
    double p_sell = 0.3;
    double p_idle = 0.4;
};

/// Flat key=value run configuration ("#" comments, dotted section keys,
/// unknown keys are errors). The raw normalized key/value map stays the
/// source of truth: the canonical serialization and the 64-bit FNV-1a config
/// hash are computed from it, and sweep overrides rebuild from it.
struct RunConfig {
    double horizon = 1.0;
    std::size_t steps = 250;
    double z0 = 5.0;
    double drift = 0.0;
    double sigma = 1.0;
    std::size_t scenario_count = 2000;
    double kappa = 0.05;
    std::uint64_t seed = 1;
    bool log_returns = false;
    std::string out_dir = "out";
    std::vector<SecuritySpec> securities;
    std::vector<GroupConfig> groups;
    std::vector<std::pair<std::string, std::string>> audit_pairs;

    std::map<std::string, std::string> kv;

    static RunConfig from_string(std::string_view text);
    static RunConfig from_file(const std::string& path);

    /// Rebuilds with one key overridden (sweep / CLI overrides).
    RunConfig with(const std::string& key, const std::string& value) const;

    std::string canonical() const;
    std::uint64_t hash() const;

    TimeGrid grid() const { return TimeGrid(horizon, steps); }
    std::size_t n_fb() const;
    std::size_t n_fs() const;
    std::size_t n_technical() const;
    std::optional<std::size_t> security_index(std::string_view id) const;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace msim
