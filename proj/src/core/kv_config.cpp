#include "edei/kv_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "edei/error.hpp"

namespace edei {

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

KvConfig KvConfig::parse(std::string_view text) {
    KvConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        cfg.set(key, std::string(trim(line.substr(eq + 1))));
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KvConfig::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

void KvConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_string();
}

bool KvConfig::contains(std::string_view key) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

std::optional<std::string> KvConfig::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

void KvConfig::set(std::string_view key, std::string value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    entries_.emplace_back(std::string(key), std::move(value));
}

void KvConfig::set(std::string_view key, double value) { set(key, format_double(value)); }
void KvConfig::set(std::string_view key, std::int64_t value) { set(key, std::to_string(value)); }
void KvConfig::set(std::string_view key, bool value) { set(key, std::string(value ? "true" : "false")); }

std::string KvConfig::get_string(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

double KvConfig::get_double(std::string_view key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "inf") return std::numeric_limits<double>::infinity();
    return parse_number<double>(key, *v);
}

std::int64_t KvConfig::get_int(std::string_view key, std::int64_t fallback) const {
    auto v = get(key);
    return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("config key '" + std::string(key) + "': expected boolean, got '" + *v + "'");
}

std::vector<double> KvConfig::get_doubles(std::string_view key, std::vector<double> fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::string_view rest = *v;
    while (!rest.empty()) {
        auto comma = rest.find(',');
        auto item = trim(rest.substr(0, comma));
        if (!item.empty()) out.push_back(parse_number<double>(key, item));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    return out;
}

double KvConfig::require_double(std::string_view key) const {
    if (!contains(key)) throw ConfigError("missing config key '" + std::string(key) + "'");
    return get_double(key, 0.0);
}

std::int64_t KvConfig::require_int(std::string_view key) const {
    if (!contains(key)) throw ConfigError("missing config key '" + std::string(key) + "'");
    return get_int(key, 0);
}

void KvConfig::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
        set(trim(std::string_view(o).substr(0, eq)), std::string(trim(std::string_view(o).substr(eq + 1))));
    }
}

void KvConfig::merge(const KvConfig& other) {
    for (const auto& [k, v] : other.entries_) set(k, v);
}

} // namespace edei
