#pragma once

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cloud.hpp"
#include "sexpr.hpp"

namespace coarsedim {

// Point-cloud text format: a header line `# dim=<d> window=<r>`, then one
// point per line, coordinates as decimal floats separated by single spaces.

inline void write_cloud(std::ostream& os, const PointCloud& pc) {
    os << "# dim=" << pc.dim() << " window=" << format_double(pc.window()) << "\n";
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const auto p = pc[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (k) os << ' ';
            os << format_double(p[k]);
        }
        os << "\n";
    }
}

inline std::string cloud_to_string(const PointCloud& pc) {
    std::ostringstream os;
    write_cloud(os, pc);
    return os.str();
}

inline PointCloud read_cloud(std::istream& is, const Config& cfg = {}) {
    std::string line;
    if (!std::getline(is, line)) throw InputError("cloud file: empty input");
    int dim = 0;
    double window = 0.0;
    {
        std::istringstream hs(line);
        std::string hash, dtok, wtok;
        hs >> hash >> dtok >> wtok;
        if (hash != "#" || dtok.rfind("dim=", 0) != 0 || wtok.rfind("window=", 0) != 0)
            throw InputError("cloud file: bad header line '" + line + "'");
        dim = std::stoi(dtok.substr(4));
        window = std::stod(wtok.substr(7));
    }
    std::vector<double> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v;
        int got = 0;
        while (ls >> v) {
            rows.push_back(v);
            ++got;
        }
        if (got != dim) throw InputError("cloud file: row with " + std::to_string(got) +
                                         " coordinates, expected " + std::to_string(dim));
    }
    return PointCloud::from_rows(dim, window, std::move(rows), cfg);
}

}  // namespace coarsedim
