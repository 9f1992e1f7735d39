#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "covering.hpp"

namespace coarsedim {

// ======================================================
// CLI parameter parsing
// ======================================================

/// Radii schedules: "dyadic:A..B" for 2^A .. 2^B, or a comma list "4,8,32".
inline std::vector<double> parse_radii(const std::string& spec) {
    if (spec.rfind("dyadic:", 0) == 0) {
        const std::string range = spec.substr(7);
        const auto dots = range.find("..");
        if (dots == std::string::npos)
            throw InputError("radii: dyadic spec must look like dyadic:6..16");
        const int lo = std::stoi(range.substr(0, dots));
        const int hi = std::stoi(range.substr(dots + 2));
        return dyadic_radii(lo, hi);
    }
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        const std::string tok = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok.empty()) throw InputError("radii: empty entry in list");
        out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw InputError("radii: empty schedule");
    return out;
}

inline std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        const std::string tok = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!tok.empty()) out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw InputError("expected a comma-separated list of numbers");
    return out;
}

inline std::array<double, 2> parse_interval(const std::string& spec) {
    const auto vals = parse_double_list(spec);
    if (vals.size() != 2) throw InputError("interval must be two numbers a,b");
    return {vals[0], vals[1]};
}

/// COARSEDIM_BUDGET overrides the point budget (pairs scale with it 10x).
inline Config config_from_env(Config base = {}) {
    if (const char* v = std::getenv("COARSEDIM_BUDGET")) {
        const long long b = std::atoll(v);
        if (b > 0) {
            base.max_points = b;
            base.max_pairs = b * 10;
        }
    }
    return base;
}

// ======================================================
// Atomic output
// ======================================================

/// Writes via a temp file and rename so partial output is never observed.
inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw InputError("cannot open output file " + tmp);
        os << content;
        if (!os) throw InputError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw InputError("cannot rename " + tmp + " to " + path);
}

}  // namespace coarsedim
