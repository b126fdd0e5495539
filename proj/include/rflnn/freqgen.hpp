#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rflnn/common.hpp"
#include "rflnn/interval_schedule.hpp"
#include "rflnn/networks.hpp"

namespace rflnn {

/// Fourier transform of tanh(w x + b) at frequency zeta:
///   (2 pi i / |w|) exp(i b zeta / w) / (exp(-u) - exp(u)),  u = pi zeta / (2 w).
std::complex<double> tanh_spectrum_exact(double w, double b, double zeta);

/// Large-|u| form: -(2 pi i / |w|) exp(i b zeta / w) exp(-u) for u > 0 and
/// (2 pi i / |w|) exp(i b zeta / w) exp(u) for u < 0.
std::complex<double> tanh_spectrum_asymptotic(double w, double b, double zeta);

/// Exact form, switching to the asymptotic one once |u| > asymptotic_switch
/// where the exponentials would otherwise overflow.
std::complex<double> tanh_spectrum(double w, double b, double zeta, double asymptotic_switch = 30.0);

/// Initial BLS from config with every group drawn from interval_at(schedule, 0),
/// then M incremental enhancement groups, the k-th drawn from interval_at(schedule, k).
BlsModel train_bls_freq_guided(const Dataset& data, const BlsConfig& config, const IntervalSchedule& schedule,
                               Index growth_steps, std::uint64_t seed);

struct Quartiles {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Linear-interpolation quartiles (the usual "type 7" definition).
Quartiles quartiles(std::vector<double> values);
double median(std::vector<double> values);

enum class Metric { accuracy, negative_rmse };

struct ComparisonReport {
    Metric metric = Metric::accuracy;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies_fixed;
    std::vector<double> accuracies_guided;
    Quartiles fixed_summary;
    Quartiles guided_summary;

    Index runs() const { return static_cast<Index>(seeds.size()); }
    /// Runs where the guided arm scored strictly higher.
    Index guided_wins() const;

    std::string to_csv() const;
    std::string summary_json(int indent = 2) const;
};

struct CompareOptions {
    IntervalSchedule fixed_schedule = IntervalSchedule::constant(1.0);
    IntervalSchedule guided_schedule = IntervalSchedule::geometric(1.0, 1.4, 16.0);
    Index growth_steps = 8;
    Index runs = 30;
    std::vector<std::uint64_t> seeds;  // defaults to 1..runs when empty
    Metric metric = Metric::accuracy;
    int jobs = 1;
};

/// Trains both arms with the same seed per run on `train` and scores them on `test`.
ComparisonReport compare_methods(const Dataset& train, const Dataset& test, const BlsConfig& config,
                                 const CompareOptions& options);

} // namespace rflnn
