#pragma once

#include "switchrl/cost.hpp"
#include "switchrl/nac.hpp"
#include "switchrl/net_value.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace switchrl {

/// Flat key=value configuration with `#` comments and bracketed section
/// headers. Keys are stored as "section.key" (or bare "key" before any
/// section header).
struct ConfigFile {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const;
    std::string require(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    static ConfigFile parse(std::istream& in);
    static ConfigFile parse_string(const std::string& text);
    static ConfigFile load(const std::string& path);
};

/// Reads the [cost] block. Recognized kinds: local, global, indicator,
/// transport_two, transport_general, custom_table.
CostSpec cost_spec_from_config(const ConfigFile& cfg, int n_states, int n_actions);

/// Canonical [cost] block for a spec; parsing it back recovers the spec.
std::string format_cost_spec(const CostSpec& spec);

OpeConfig ope_config_from_config(const ConfigFile& cfg, std::uint64_t seed);
NacConfig nac_config_from_config(const ConfigFile& cfg, std::uint64_t seed);
CandidateSet candidate_set_from_config(const ConfigFile& cfg);

/// [nac] seeds= list ("4,5,6" or "4..13"); falls back to the single seed.
std::vector<std::uint64_t> seed_list_from_config(const ConfigFile& cfg,
                                                 std::uint64_t fallback);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace switchrl
