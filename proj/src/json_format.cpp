#include "smartscan/json_format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace smartscan::jsonfmt {

double round_sig(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

nlohmann::json number(double v) {
    if (std::isfinite(v) && std::abs(v) < 1e15 && v == std::floor(v)) {
        return static_cast<std::int64_t>(v);
    }
    const double r = round_sig(v, 9);
    if (std::isfinite(r) && std::abs(r) < 1e15 && r == std::floor(r)) return static_cast<std::int64_t>(r);
    return r;
}

double canonical(double v) { return number(v).get<double>(); }

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace smartscan::jsonfmt
