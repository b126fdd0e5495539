#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "rflnn/common.hpp"

namespace rflnn {

/// Half-width of the uniform sampling interval used at each incremental step.
struct IntervalSchedule {
    enum class Kind { constant, geometric, linear };

    Kind kind = Kind::constant;
    double base = 1.0;
    double rate = 1.0;
    double cap = 1.0;

    static IntervalSchedule constant(double bound) { return checked({Kind::constant, bound, 1.0, bound}); }
    static IntervalSchedule geometric(double base, double rate, double cap) {
        return checked({Kind::geometric, base, rate, cap});
    }
    static IntervalSchedule linear(double base, double increment, double cap) {
        return checked({Kind::linear, base, increment, cap});
    }

    void validate() const {
        if (!(base > 0) || !std::isfinite(base)) throw ConfigError("interval schedule: base must be positive");
        if (!std::isfinite(rate)) throw ConfigError("interval schedule: rate must be finite");
        if (kind == Kind::geometric && !(rate > 0))
            throw ConfigError("interval schedule: geometric rate must be positive");
        if (kind != Kind::constant && (!(cap > 0) || !std::isfinite(cap)))
            throw ConfigError("interval schedule: cap must be positive");
        if (kind == Kind::linear && rate < 0)
            throw ConfigError("interval schedule: linear increment must be nonnegative");
    }

    double at(Index step) const {
        if (step < 0) throw UsageError("interval schedule: step must be nonnegative");
        const double s = static_cast<double>(step);
        switch (kind) {
        case Kind::constant: return base;
        case Kind::geometric: return std::min(base * std::pow(rate, s), cap);
        case Kind::linear: return std::min(base + rate * s, cap);
        }
        throw ConfigError("interval schedule: unknown kind");
    }

    bool operator==(const IntervalSchedule&) const = default;

private:
    static IntervalSchedule checked(IntervalSchedule s) {
        s.validate();
        return s;
    }
};

inline double interval_at(const IntervalSchedule& schedule, Index step) { return schedule.at(step); }

inline std::string_view to_string(IntervalSchedule::Kind kind) {
    switch (kind) {
    case IntervalSchedule::Kind::constant: return "constant";
    case IntervalSchedule::Kind::geometric: return "geometric";
    case IntervalSchedule::Kind::linear: return "linear";
    }
    return "constant";
}

inline IntervalSchedule::Kind parse_schedule_kind(std::string_view name) {
    if (name == "constant") return IntervalSchedule::Kind::constant;
    if (name == "geometric") return IntervalSchedule::Kind::geometric;
    if (name == "linear") return IntervalSchedule::Kind::linear;
    throw ConfigError("unknown interval schedule kind '" + std::string(name) + "'");
}

} // namespace rflnn
