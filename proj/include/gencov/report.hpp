#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencov {

using ordered_json = nlohmann::ordered_json;

/// Least-squares slope of log(residual) against log(step): the observed
/// convergence order of a refinement study in the given small parameter.
inline double fit_order_steps(const std::vector<double>& steps,
                              const std::vector<double>& residuals) {
    if (steps.size() != residuals.size() || steps.size() < 2)
        throw std::invalid_argument("need at least two (step, residual) pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        double x = std::log(steps[i]);
        double y = std::log(std::max(residuals[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double fit_order(const std::vector<int>& grids, const std::vector<double>& residuals) {
    std::vector<double> h;
    for (int N : grids) h.push_back(1.0 / N);
    return fit_order_steps(h, residuals);
}

struct TolerancePolicy {
    double min_order = 1.8;
    double finest_rel_residual = 1e-4;  // relative to the data scale
};

/// Result of one numerical check: residuals per grid, the fitted order, and
/// the verdict under the active tolerance policy.
struct CheckReport {
    std::string name;
    std::string anchor;  // stable cross-reference tag carried into reports
    std::vector<int> grids;
    std::vector<double> residuals;
    double scale = 1.0;  // magnitude of the data the residuals compare against
    double order = 0.0;
    bool passed = false;
    ordered_json details = ordered_json::object();

    void evaluate(const TolerancePolicy& tol = {}) {
        if (grids.size() >= 2) {
            order = fit_order(grids, residuals);
            passed = order >= tol.min_order &&
                     residuals.back() <= tol.finest_rel_residual * scale;
        } else {
            order = 0.0;
            passed = !residuals.empty() && residuals.back() <= tol.finest_rel_residual * scale;
        }
    }

    ordered_json to_json() const {
        ordered_json j;
        j["name"] = name;
        j["anchor"] = anchor;
        j["grids"] = grids;
        j["residuals"] = residuals;
        j["scale"] = scale;
        j["order"] = order;
        j["passed"] = passed;
        j["details"] = details;
        return j;
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot open " + path);
        os << "N,residual\n";
        char buf[64];
        for (std::size_t i = 0; i < grids.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%d,%.17g\n", grids[i], residuals[i]);
            os << buf;
        }
    }
};

}  // namespace gencov
