#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "prodemb/error.hpp"

namespace prodemb {

/// Plain-text key=value configuration. Lines starting with '#' and blank
/// lines are skipped. Readers mark keys as consumed; reject_unknown()
/// then refuses any leftovers, so config typos fail loudly.
class KvConfig {
public:
    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_string(const std::string& text,
                                 const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key,
                           const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key,
                           std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void reject_unknown() const;
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
    std::string origin_;
};

} // namespace prodemb
