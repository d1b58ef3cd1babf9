#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pinc/datagen.hpp"
#include "pinc/trainer.hpp"

namespace pinc {

/// Flat `key = value` view with typed getters; every parse error names the
/// offending key and the file it came from. Keys read through the getters are
/// marked used so unknown keys can be rejected afterwards.
class KeyValues {
public:
    KeyValues() = default;
    explicit KeyValues(std::string source) : source_(std::move(source)) {}

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    bool empty() const { return kv_.empty(); }
    const std::string& source() const { return source_; }

    std::optional<std::string> raw(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Throws ConfigError naming any key never read by a getter.
    void require_all_used() const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
    std::string source_;
    mutable std::set<std::string> used_;
};

struct ConfigFile {
    KeyValues top;
    std::vector<std::pair<std::string, KeyValues>> sections;
};

/// Parses `key = value` lines with optional [section] headers, # comments and
/// optional double quotes around values.
ConfigFile parse_config_file(const std::filesystem::path& path);

/// Convenience for files that must have no sections.
KeyValues parse_kv_file(const std::filesystem::path& path);

/// Parameter file with exactly the PhysicalParams field names; every field
/// optional, missing ones keep the built-in defaults.
PhysicalParams physical_params_from_kv(const KeyValues& kv);
PhysicalParams load_physical_params(const std::filesystem::path& path);

/// Applies generation keys onto an existing config (all keys optional).
void apply_gen_kv(GenConfig& cfg, const KeyValues& kv,
                  const std::filesystem::path& base_dir);
GenConfig load_gen_config(const std::filesystem::path& path);

/// Applies training keys onto an existing config (all keys optional).
void apply_train_kv(TrainConfig& cfg, const KeyValues& kv);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Fully-resolved config echoes for the output directories.
std::string train_config_to_json(const TrainConfig& cfg);

/// Parses "key=value" command line override tokens.
KeyValues overrides_from_tokens(const std::vector<std::string>& tokens);

} // namespace pinc
