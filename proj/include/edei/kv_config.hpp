#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edei {

/// Flat `key=value` text configuration. Insertion order is preserved so that
/// writing is deterministic; `#` starts a comment line.
class KvConfig {
public:
    static KvConfig parse(std::string_view text);
    static KvConfig load(const std::filesystem::path& path);

    std::string to_string() const;
    void save(const std::filesystem::path& path) const;

    bool contains(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;

    void set(std::string_view key, std::string value);
    void set(std::string_view key, double value);
    void set(std::string_view key, std::int64_t value);
    void set(std::string_view key, int value) { set(key, static_cast<std::int64_t>(value)); }
    void set(std::string_view key, bool value);

    // Typed lookups throw ConfigError on malformed values.
    std::string get_string(std::string_view key, std::string fallback) const;
    double get_double(std::string_view key, double fallback) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;
    std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;

    double require_double(std::string_view key) const;
    std::int64_t require_int(std::string_view key) const;

    /// Applies `key=value` override strings on top of this config.
    void apply_overrides(const std::vector<std::string>& overrides);
    void merge(const KvConfig& other);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    friend bool operator==(const KvConfig&, const KvConfig&) = default;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest round-trip decimal representation.
std::string format_double(double value);

/// 64-bit FNV-1a, stable across platforms.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

} // namespace edei
