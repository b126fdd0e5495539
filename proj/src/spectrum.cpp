#include "rflnn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace rflnn {

ProjectedInput pca_project(const Matrix& X) {
    if (X.rows() < 2) throw DegenerateInputError("pca_project: need at least two observations");
    if (!X.allFinite()) throw NumericError("pca_project: non-finite input");
    ProjectedInput out;
    out.mean = X.colwise().mean().transpose();
    const Matrix centered = X.rowwise() - out.mean.transpose();
    if (centered.cwiseAbs().maxCoeff() == 0) throw DegenerateInputError("pca_project: all observations identical");

    const Matrix gram = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("pca_project: eigendecomposition failed");
    out.principal = eig.eigenvectors().col(X.cols() - 1).normalized();
    Index lead = 0;
    out.principal.cwiseAbs().maxCoeff(&lead);
    if (out.principal(lead) < 0) out.principal = -out.principal;

    const Vector proj = centered * out.principal;
    const double lo = proj.minCoeff();
    const double span = proj.maxCoeff() - lo;
    if (!(span > 0)) throw DegenerateInputError("pca_project: projections have zero spread");
    out.x_prime = (proj.array() - lo) / span;
    return out;
}

void FrequencyGrid::validate() const {
    if (!(rho > 0) || !std::isfinite(rho)) throw ConfigError("frequency grid: rho must be positive");
    if (alphas.size() < 1) throw ConfigError("frequency grid: needs at least one frequency");
    for (Index i = 1; i < alphas.size(); ++i)
        if (alphas(i) <= alphas(i - 1)) throw ConfigError("frequency grid: alphas must be strictly increasing");
}

FrequencyGrid FrequencyGrid::range(int first, int last, double rho) {
    if (last < first) throw ConfigError("frequency grid: empty range");
    FrequencyGrid g;
    g.rho = rho;
    g.alphas = Eigen::VectorXi::LinSpaced(last - first + 1, first, last);
    g.validate();
    return g;
}

FrequencyGrid default_grid() { return FrequencyGrid::range(0, 40); }

std::vector<Index> detect_peaks(const Vector& m, Index max_peaks, double min_relative) {
    if (m.size() < 3) throw UsageError("detect_peaks: need at least three magnitudes");
    if (max_peaks < 1) return {};
    const double floor = min_relative * m.maxCoeff();
    // Neighbours closer than this are ties; flat spectra otherwise sprout
    // peaks out of rounding noise.
    const double tie = 1e-10 * m.maxCoeff();
    std::vector<Index> idx;
    if (m(0) > m(1) + tie && m(0) > floor) idx.push_back(0);
    for (Index i = 1; i + 1 < m.size(); ++i)
        if (m(i) > m(i - 1) + tie && m(i) > m(i + 1) + tie && m(i) > floor) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return m(a) > m(b); });
    if (static_cast<Index>(idx.size()) > max_peaks) idx.resize(static_cast<std::size_t>(max_peaks));
    std::sort(idx.begin(), idx.end());
    return idx;
}

PeakErrors relative_error(const ComplexVector& f_model, const ComplexVector& f_target,
                          const std::vector<Index>& peaks) {
    if (f_model.size() != f_target.size()) throw UsageError("relative_error: spectra have different lengths");
    PeakErrors out;
    std::vector<double> vals;
    for (Index p : peaks) {
        if (p < 0 || p >= f_target.size()) throw UsageError("relative_error: peak index out of range");
        const double target = std::abs(f_target(p));
        if (target == 0) {
            out.excluded.push_back(p);
            out.diagnostics.push_back("peak " + std::to_string(p) + " excluded: target magnitude is zero");
            continue;
        }
        out.peaks.push_back(p);
        vals.push_back(std::abs(std::abs(f_model(p)) - target) / target);
    }
    out.values = Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
    return out;
}

std::vector<Index> SpectrumTrace::first_below(double threshold) const {
    std::vector<Index> out(static_cast<std::size_t>(errors.cols()), -1);
    for (Index j = 0; j < errors.cols(); ++j)
        for (Index i = 0; i < errors.rows(); ++i)
            if (errors(i, j) < threshold) {
                out[static_cast<std::size_t>(j)] = i;
                break;
            }
    return out;
}

std::string SpectrumTrace::to_csv() const {
    std::ostringstream os;
    os << "step,peak_alpha,delta_d\n";
    for (Index i = 0; i < errors.rows(); ++i)
        for (Index j = 0; j < errors.cols(); ++j)
            os << steps[static_cast<std::size_t>(i)] << ',' << peak_alphas[static_cast<std::size_t>(j)] << ','
               << format_real(errors(i, j)) << '\n';
    return os.str();
}

std::string SpectrumTrace::to_json(int indent) const {
    nlohmann::json j;
    j["peaks"] = peaks;
    j["peak_alphas"] = peak_alphas;
    j["steps"] = steps;
    j["delta_d"] = nlohmann::json::array();
    for (Index i = 0; i < errors.rows(); ++i) {
        std::vector<double> row;
        for (Index c = 0; c < errors.cols(); ++c) row.push_back(errors(i, c));
        j["delta_d"].push_back(row);
    }
    return j.dump(indent);
}

std::string_view to_string(ModelFamily family) {
    switch (family) {
    case ModelFamily::elm: return "elm";
    case ModelFamily::bls: return "bls";
    case ModelFamily::stacked_bls: return "stacked_bls";
    }
    return "bls";
}

ModelFamily parse_model_family(std::string_view name) {
    if (name == "elm") return ModelFamily::elm;
    if (name == "bls") return ModelFamily::bls;
    if (name == "stacked_bls" || name == "stacked-bls") return ModelFamily::stacked_bls;
    throw ConfigError("unknown model family '" + std::string(name) + "'");
}

void GrowthPlan::validate() const {
    if (steps < 1) throw ConfigError("growth plan: steps must be >= 1");
    if (family == ModelFamily::elm) {
        if (elm_nodes_per_step < 1) throw ConfigError("growth plan: elm_nodes_per_step must be >= 1");
        if (!(elm_interval > 0)) throw ConfigError("growth plan: elm_interval must be positive");
        if (!(elm_lambda >= 0)) throw ConfigError("growth plan: elm_lambda must be nonnegative");
    } else {
        bls.validate();
    }
}

SpectrumTrace run_fp_experiment(const Dataset& data, const GrowthPlan& plan, const FpOptions& options,
                                std::uint64_t seed, AnyModel* final_model) {
    data.validate();
    plan.validate();
    options.grid.validate();

    const ProjectedInput proj = pca_project(data.X);
    const Vector y = data.Y.col(0);
    const ComplexVector f_target = nudft(y, proj.x_prime, options.grid);
    const Vector mags = f_target.cwiseAbs();

    SpectrumTrace trace;
    trace.peaks = detect_peaks(mags, options.max_peaks);
    for (Index p : trace.peaks) trace.peak_alphas.push_back(options.grid.alphas(p));
    trace.errors.resize(plan.steps, static_cast<Index>(trace.peaks.size()));

    auto record = [&](Index step, const Matrix& output) {
        const Vector t = output.col(0);
        const auto err = relative_error(nudft(t, proj.x_prime, options.grid), f_target, trace.peaks);
        trace.errors.row(step - 1) = err.values.transpose();
        trace.steps.push_back(step);
    };

    switch (plan.family) {
    case ModelFamily::elm: {
        ElmConfig cfg;
        cfg.interval = plan.elm_interval;
        cfg.lambda = plan.elm_lambda;
        cfg.activation = plan.elm_activation;
        for (Index s = 1; s <= plan.steps; ++s) {
            cfg.nodes = plan.elm_nodes_per_step * s;
            cfg.max_nodes = std::max(cfg.max_nodes, cfg.nodes);
            ElmModel m = train_elm(data, cfg, seed);
            record(s, predict(m, data.X));
            if (final_model && s == plan.steps) *final_model = std::move(m);
        }
        break;
    }
    case ModelFamily::bls: {
        BlsModel m = train_bls(data, plan.bls, seed);
        record(1, predict(m, data.X));
        for (Index s = 2; s <= plan.steps; ++s) {
            m = grow_bls(m, data, plan.bls, s - 1);
            record(s, predict(m, data.X));
        }
        if (final_model) *final_model = std::move(m);
        break;
    }
    case ModelFamily::stacked_bls: {
        StackedBlsModel m;
        m.input = plan.stack_input;
        for (Index s = 1; s <= plan.steps; ++s) {
            add_stacked_block(m, data, plan.bls, s == 1 ? seed : stacked_block_seed(seed, s - 1));
            record(s, predict(m, data.X));
        }
        if (final_model) *final_model = std::move(m);
        break;
    }
    }
    return trace;
}

} // namespace rflnn
