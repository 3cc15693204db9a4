#include "sparselab/report.hpp"

#include <cmath>

namespace sparselab {

namespace {

// JSON has no inf/nan; keep them readable and round-trippable as strings.
nlohmann::json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

nlohmann::json to_json(const ProbeReport& r) {
    nlohmann::json j;
    j["name"] = r.name;
    j["inputs"] = r.inputs;
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [k, v] : r.constants) c[k] = num(v);
    j["constants"] = c;
    nlohmann::json s = nlohmann::json::array();
    for (const auto& f : r.slopes)
        s.push_back({{"name", f.name},
                     {"fitted", num(f.fitted)},
                     {"predicted", num(f.predicted)},
                     {"residual", num(f.residual)},
                     {"tolerance", num(f.tolerance)},
                     {"pass", f.pass}});
    j["slopes"] = s;
    nlohmann::json ser = nlohmann::json::object();
    for (const auto& [k, rows] : r.series) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json rr = nlohmann::json::array();
            for (double v : row) rr.push_back(num(v));
            a.push_back(rr);
        }
        ser[k] = a;
    }
    j["series"] = ser;
    j["violations"] = r.violations;
    j["pass"] = r.pass;
    return j;
}

}  // namespace sparselab
