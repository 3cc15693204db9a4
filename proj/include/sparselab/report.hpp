#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace sparselab {

struct SlopeFit {
    std::string name;
    double fitted = 0;
    double predicted = 0;
    double residual = 0;
    /// fitted ≤ predicted + tolerance
    double tolerance = 0;
    bool pass = true;
};

struct ProbeReport {
    std::string name;
    std::map<std::string, std::string> inputs;
    std::map<std::string, double> constants;
    std::vector<SlopeFit> slopes;
    std::vector<std::string> violations;
    /// Free-form tables (rows of numbers) for CSV export.
    std::map<std::string, std::vector<std::vector<double>>> series;
    bool pass = true;

    void fail(std::string why) {
        pass = false;
        violations.push_back(std::move(why));
    }
};

nlohmann::json to_json(const ProbeReport& r);

}  // namespace sparselab
