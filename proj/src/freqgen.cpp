#include "rflnn/freqgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rflnn/parallel.hpp"

namespace rflnn {

namespace {

void check_args(double w, double zeta) {
    if (w == 0 || !std::isfinite(w)) throw std::domain_error("tanh_spectrum: w must be nonzero and finite");
    if (zeta == 0) throw std::domain_error("tanh_spectrum: zeta = 0 is a singular point");
}

std::complex<double> prefactor(double w, double b, double zeta) {
    const std::complex<double> i(0, 1);
    return (2 * kPi * i / std::abs(w)) * std::exp(i * (b * zeta / w));
}

} // namespace

std::complex<double> tanh_spectrum_exact(double w, double b, double zeta) {
    check_args(w, zeta);
    const double u = kPi * zeta / (2 * w);
    return prefactor(w, b, zeta) / (std::exp(-u) - std::exp(u));
}

std::complex<double> tanh_spectrum_asymptotic(double w, double b, double zeta) {
    check_args(w, zeta);
    const double u = kPi * zeta / (2 * w);
    return u > 0 ? -prefactor(w, b, zeta) * std::exp(-u) : prefactor(w, b, zeta) * std::exp(u);
}

std::complex<double> tanh_spectrum(double w, double b, double zeta, double asymptotic_switch) {
    check_args(w, zeta);
    const double u = kPi * zeta / (2 * w);
    return std::abs(u) > asymptotic_switch ? tanh_spectrum_asymptotic(w, b, zeta) : tanh_spectrum_exact(w, b, zeta);
}

BlsModel train_bls_freq_guided(const Dataset& data, const BlsConfig& config, const IntervalSchedule& schedule,
                               Index growth_steps, std::uint64_t seed) {
    if (growth_steps < 0) throw ConfigError("freq-guided bls: growth steps must be >= 0");
    BlsConfig cfg = config;
    cfg.schedule = schedule;
    BlsModel m = train_bls(data, cfg, seed);
    for (Index k = 1; k <= growth_steps; ++k) m = grow_bls(m, data, cfg, k);
    return m;
}

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) throw UsageError("quartiles: empty input");
    std::sort(v.begin(), v.end());
    auto at = [&](double p) {
        const double h = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

double median(std::vector<double> values) { return quartiles(std::move(values)).median; }

Index ComparisonReport::guided_wins() const {
    Index wins = 0;
    for (std::size_t i = 0; i < accuracies_guided.size(); ++i) wins += accuracies_guided[i] > accuracies_fixed[i];
    return wins;
}

std::string ComparisonReport::to_csv() const {
    std::ostringstream os;
    os << "run,arm,accuracy\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        os << seeds[i] << ",fixed," << format_real(accuracies_fixed[i]) << '\n';
        os << seeds[i] << ",guided," << format_real(accuracies_guided[i]) << '\n';
    }
    return os.str();
}

std::string ComparisonReport::summary_json(int indent) const {
    auto q = [](const Quartiles& s) {
        return nlohmann::json{{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
    };
    nlohmann::json j{{"metric", metric == Metric::accuracy ? "accuracy" : "negative_rmse"},
                     {"runs", runs()},
                     {"guided_wins", guided_wins()},
                     {"fixed", q(fixed_summary)},
                     {"guided", q(guided_summary)}};
    return j.dump(indent);
}

ComparisonReport compare_methods(const Dataset& train, const Dataset& test, const BlsConfig& config,
                                 const CompareOptions& options) {
    const Index runs = options.seeds.empty() ? options.runs : static_cast<Index>(options.seeds.size());
    if (runs < 2) throw ConfigError("compare: runs must be >= 2");
    train.validate();
    test.validate();
    if (train.input_dim() != test.input_dim() || train.output_dim() != test.output_dim())
        throw UsageError("compare: train and test sets have different shapes");

    ComparisonReport r;
    r.metric = options.metric;
    const auto n = static_cast<std::size_t>(runs);
    r.seeds.resize(n);
    r.accuracies_fixed.resize(n);
    r.accuracies_guided.resize(n);

    auto score = [&](const BlsModel& m) {
        const Matrix out = predict(m, test.X);
        return options.metric == Metric::accuracy ? classification_accuracy(out, test.Y) : -rmse(out, test.Y);
    };
    parallel_for(runs, options.jobs, [&](Index i) {
        const auto k = static_cast<std::size_t>(i);
        const std::uint64_t seed = options.seeds.empty() ? static_cast<std::uint64_t>(i + 1) : options.seeds[k];
        r.seeds[k] = seed;
        r.accuracies_fixed[k] =
            score(train_bls_freq_guided(train, config, options.fixed_schedule, options.growth_steps, seed));
        r.accuracies_guided[k] =
            score(train_bls_freq_guided(train, config, options.guided_schedule, options.growth_steps, seed));
    });
    r.fixed_summary = quartiles(r.accuracies_fixed);
    r.guided_summary = quartiles(r.accuracies_guided);
    return r;
}

} // namespace rflnn
