#include "prodemb/kvconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace prodemb {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
} // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

KvConfig KvConfig::parse_string(const std::string& text,
                                const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw_config(origin + ":" + std::to_string(lineno) +
                         ": expected key=value, got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw_config(origin + ":" + std::to_string(lineno) +
                         ": empty key");
        }
        if (cfg.values_.count(key)) {
            throw_config(origin + ":" + std::to_string(lineno) +
                         ": duplicate key '" + key + "'");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

bool KvConfig::has(const std::string& key) const {
    return values_.count(key) > 0;
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t KvConfig::get_int(const std::string& key,
                               std::int64_t fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw_config(origin_ + ": key '" + key + "' is not an integer: '" +
                     it->second + "'");
    }
}

std::uint64_t KvConfig::get_uint(const std::string& key,
                                 std::uint64_t fallback) const {
    const std::int64_t v =
        get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) {
        throw_config(origin_ + ": key '" + key + "' must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw_config(origin_ + ": key '" + key + "' is not a number: '" +
                     it->second + "'");
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw_config(origin_ + ": key '" + key + "' is not a boolean: '" +
                 it->second + "'");
}

void KvConfig::reject_unknown() const {
    std::string unknown;
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty()) {
        throw_config(origin_ + ": unknown keys: " + unknown);
    }
}

} // namespace prodemb
