#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rflnn/common.hpp"
#include "rflnn/networks.hpp"

namespace rflnn {

struct ProjectedInput {
    Vector x_prime;    // projections rescaled to [0, 1]
    Vector principal;  // unit leading eigenvector of the centered Gram matrix
    Vector mean;
};

/// Centers X, projects onto its leading principal direction and min-max
/// rescales. The sign of the principal vector is fixed so that its largest
/// magnitude component is positive.
ProjectedInput pca_project(const Matrix& X);

struct FrequencyGrid {
    double rho = 2 * kPi;
    Eigen::VectorXi alphas;

    void validate() const;
    Index size() const { return alphas.size(); }

    /// Integer indices first..last inclusive.
    static FrequencyGrid range(int first, int last, double rho = 2 * kPi);
};

/// rho = 2 pi, alphas = 0..40.
FrequencyGrid default_grid();

/// F[y](alpha) = (1/N) sum_k y_k exp(-i rho x'_k alpha), evaluated directly.
template <typename DY, typename DX>
Eigen::Matrix<std::complex<typename DY::Scalar>, Eigen::Dynamic, 1>
nudft(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DX>& x_prime, const FrequencyGrid& grid) {
    using Scalar = typename DY::Scalar;
    using Complex = std::complex<Scalar>;
    if (y.size() == 0) throw UsageError("nudft: empty input");
    if (y.size() != x_prime.size()) throw UsageError("nudft: y and x_prime lengths differ");
    grid.validate();
    const Index n = y.size();
    Eigen::Matrix<Complex, Eigen::Dynamic, 1> out(grid.size());
    for (Index a = 0; a < grid.size(); ++a) {
        const Scalar w = Scalar(grid.rho) * Scalar(grid.alphas(a));
        Complex acc(0);
        for (Index k = 0; k < n; ++k) {
            const Scalar phase = w * Scalar(x_prime(k));
            acc += Scalar(y(k)) * Complex(std::cos(phase), -std::sin(phase));
        }
        out(a) = acc / Scalar(n);
    }
    return out;
}

/// Indices of strict local maxima (index 0 counts if it beats index 1),
/// ranked by magnitude and truncated to max_peaks, returned ascending.
/// Maxima below min_relative * max(magnitudes) are treated as noise, and
/// neighbours within 1e-10 * max count as ties.
std::vector<Index> detect_peaks(const Vector& magnitudes, Index max_peaks = 3, double min_relative = 1e-6);

struct PeakErrors {
    std::vector<Index> peaks;  // peaks that were evaluated
    Vector values;             // relative error at each evaluated peak
    std::vector<Index> excluded;
    std::vector<std::string> diagnostics;
};

/// | |F_model| - |F_target| | / |F_target| at each peak. Peaks where the
/// target magnitude is zero are skipped and reported in `excluded`.
PeakErrors relative_error(const ComplexVector& f_model, const ComplexVector& f_target,
                          const std::vector<Index>& peaks);

struct SpectrumTrace {
    std::vector<Index> peaks;        // indices into grid.alphas
    std::vector<int> peak_alphas;    // the frequency index at each peak
    std::vector<Index> steps;        // training-step labels, one per row of errors
    Matrix errors;                   // steps x peaks

    /// Row position of the first step whose error is below `threshold`, per
    /// peak; -1 when it never gets there.
    std::vector<Index> first_below(double threshold) const;

    std::string to_csv() const;
    std::string to_json(int indent = 2) const;
};

enum class ModelFamily { elm, bls, stacked_bls };

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);

/// Training-step sequence for a frequency-principle run.
///   elm:          step s trains a fresh ELM with elm_nodes_per_step * s nodes
///   bls:          step 1 is train_bls(bls); step s > 1 is grow_bls(.., s - 1)
///   stacked_bls:  step s adds block s, each block configured by `bls`
struct GrowthPlan {
    ModelFamily family = ModelFamily::bls;
    Index steps = 20;
    Index elm_nodes_per_step = 2;
    double elm_interval = 1.0;
    double elm_lambda = 1e-8;
    Activation elm_activation = Activation::tanh;
    BlsConfig bls;
    StackInput stack_input = StackInput::raw_input;

    void validate() const;
};

struct FpOptions {
    FrequencyGrid grid = default_grid();
    Index max_peaks = 3;
};

using AnyModel = std::variant<ElmModel, BlsModel, StackedBlsModel>;

/// Trains along the growth plan and records, after every step, the relative
/// spectral error of the first output column at the peaks of the first
/// target column. x' comes from pca_project(data.X). The model after the last
/// step goes to `final_model` when given.
SpectrumTrace run_fp_experiment(const Dataset& data, const GrowthPlan& plan, const FpOptions& options,
                                std::uint64_t seed, AnyModel* final_model = nullptr);

} // namespace rflnn
