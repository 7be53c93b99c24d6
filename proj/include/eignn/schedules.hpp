#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eignn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class ScheduleKind {
    zero,
    constant,
    annealing,          // lambda0 * (1 - alpha)^round(t / T)
    cold_start_sigmoid, // lambda0 * sigmoid(alpha * (t - T_a))
    quick_drop,         // lambda0 * (1 + alpha)^min(0, -t + T_a)
    quick_start,        // lambda0 * (1 - (1 + alpha)^min(0, -t + T_a))
    inverse_sigmoid,    // lambda0 * (1 - sigmoid(alpha * (t - T_a)))
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::zero;
    double lambda0 = 0.0;
    double alpha = 0.0;
    std::size_t T = 1;   // annealing block length, in epochs
    double T_a = 0.0;    // ramp midpoint / switch epoch
};

inline void validate(const ScheduleSpec& s) {
    if (s.lambda0 < 0.0) throw std::invalid_argument("schedule: lambda0 must be >= 0");
    switch (s.kind) {
        case ScheduleKind::zero:
        case ScheduleKind::constant:
        case ScheduleKind::cold_start_sigmoid:
        case ScheduleKind::inverse_sigmoid:
            return;
        case ScheduleKind::annealing:
            if (s.T < 1) throw std::invalid_argument("schedule: annealing needs T >= 1");
            [[fallthrough]];
        case ScheduleKind::quick_drop:
        case ScheduleKind::quick_start:
            if (s.alpha < 0.0 || s.alpha >= 1.0)
                throw std::invalid_argument("schedule: alpha must lie in [0, 1)");
            return;
    }
    throw std::invalid_argument("schedule: unknown kind");
}

// Weight at integer epoch t (t passed as real; the annealing block index uses
// round-half-away-from-zero so traces are reproducible at half-integers).
inline double weight_at(const ScheduleSpec& s, double t) {
    validate(s);
    switch (s.kind) {
        case ScheduleKind::zero:
            return 0.0;
        case ScheduleKind::constant:
            return s.lambda0;
        case ScheduleKind::annealing:
            return s.lambda0 *
                   std::pow(1.0 - s.alpha, std::round(t / static_cast<double>(s.T)));
        case ScheduleKind::cold_start_sigmoid:
            return s.lambda0 * sigmoid(s.alpha * (t - s.T_a));
        case ScheduleKind::quick_drop:
            return s.lambda0 * std::pow(1.0 + s.alpha, std::min(0.0, -t + s.T_a));
        case ScheduleKind::quick_start:
            return s.lambda0 * (1.0 - std::pow(1.0 + s.alpha, std::min(0.0, -t + s.T_a)));
        case ScheduleKind::inverse_sigmoid:
            return s.lambda0 * (1.0 - sigmoid(s.alpha * (t - s.T_a)));
    }
    throw std::invalid_argument("schedule: unknown kind");
}

inline std::vector<std::pair<double, double>> schedule_table(const ScheduleSpec& s,
                                                             std::size_t epochs) {
    if (epochs < 1) throw std::invalid_argument("schedule_table: epochs must be >= 1");
    std::vector<std::pair<double, double>> table;
    table.reserve(epochs);
    for (std::size_t t = 0; t < epochs; ++t) {
        const double td = static_cast<double>(t);
        table.emplace_back(td, weight_at(s, td));
    }
    return table;
}

// Named presets usable from configs. The two adaptive defaults reproduce the
// reference hyperparameters; the remaining three come from the alternative
// ramp-shape search.
inline ScheduleSpec schedule_preset(const std::string& name) {
    if (name == "zero") return {ScheduleKind::zero, 0.0, 0.0, 1, 0.0};
    if (name == "constant-c") return {ScheduleKind::constant, 0.85, 0.0, 1, 0.0};
    if (name == "constant-s") return {ScheduleKind::constant, 2.3, 0.0, 1, 0.0};
    if (name == "cold-start-c") return {ScheduleKind::cold_start_sigmoid, 0.85, 0.17, 1, 51.0};
    if (name == "annealing-s") return {ScheduleKind::annealing, 2.3, 0.14, 50, 0.0};
    if (name == "quick-drop") return {ScheduleKind::quick_drop, 0.836881, 0.062851, 1, 14.0};
    if (name == "quick-start") return {ScheduleKind::quick_start, 0.936669, 0.073074, 1, 61.2};
    if (name == "inverse-sigmoid")
        return {ScheduleKind::inverse_sigmoid, 0.939779, 0.171778, 1, 59.2};
    throw std::invalid_argument("unknown schedule preset '" + name + "'");
}

inline const char* schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::zero: return "zero";
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::annealing: return "annealing";
        case ScheduleKind::cold_start_sigmoid: return "cold_start_sigmoid";
        case ScheduleKind::quick_drop: return "quick_drop";
        case ScheduleKind::quick_start: return "quick_start";
        case ScheduleKind::inverse_sigmoid: return "inverse_sigmoid";
    }
    return "unknown";
}

inline ScheduleKind schedule_kind_from(const std::string& name) {
    if (name == "zero") return ScheduleKind::zero;
    if (name == "constant") return ScheduleKind::constant;
    if (name == "annealing") return ScheduleKind::annealing;
    if (name == "cold_start_sigmoid") return ScheduleKind::cold_start_sigmoid;
    if (name == "quick_drop") return ScheduleKind::quick_drop;
    if (name == "quick_start") return ScheduleKind::quick_start;
    if (name == "inverse_sigmoid") return ScheduleKind::inverse_sigmoid;
    throw std::invalid_argument("unknown schedule kind '" + name + "'");
}

}  // namespace eignn
