#pragma once

#include <charconv>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace rflnn {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using ComplexVector = Eigen::VectorXcd;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Error taxonomy. Each maps onto one failure class the callers care about:
// bad configuration, numeric breakdown, invalid model state, caller misuse,
// malformed input files, degenerate data.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::int64_t location)
        : std::runtime_error(what), location_(location) {}

    /// Byte offset (binary formats) or 1-based line number (text formats).
    std::int64_t location() const noexcept { return location_; }

private:
    std::int64_t location_;
};

enum class Activation { identity, tanh, sigmoid };

inline std::string_view to_string(Activation kind) {
    switch (kind) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    }
    throw ConfigError("unknown activation kind");
}

inline Activation parse_activation(std::string_view name) {
    if (name == "identity" || name == "linear") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation kind '" + std::string(name) + "'");
}

inline constexpr double kPi = 3.14159265358979323846;

/// Shortest decimal form that parses back to the same double.
inline std::string format_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace rflnn
