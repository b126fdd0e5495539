#include "rflnn/networks.hpp"

#include <cmath>
#include <string>

#include "rflnn/linalg.hpp"
#include "rflnn/random.hpp"

namespace rflnn {

namespace {

constexpr std::uint64_t kFeatureStream = 0x100000;
constexpr std::uint64_t kEnhancementStream = 0x200000;
constexpr std::uint64_t kBlockStream = 0x300000;

void require_input_dim(Index got, Index want, const char* who) {
    if (got != want)
        throw UsageError(std::string(who) + ": input has " + std::to_string(got) + " columns, model expects " +
                         std::to_string(want));
}

Matrix hconcat(const std::vector<Matrix>& blocks, Index rows) {
    Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    Matrix out(rows, cols);
    Index at = 0;
    for (const auto& b : blocks) {
        out.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    return out;
}

} // namespace

void Dataset::validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw UsageError("dataset: X must be at least 1x1");
    if (Y.cols() < 1) throw UsageError("dataset: Y must have at least one column");
    if (X.rows() != Y.rows())
        throw UsageError("dataset: X has " + std::to_string(X.rows()) + " rows but Y has " +
                         std::to_string(Y.rows()));
    if (!X.allFinite() || !Y.allFinite()) throw UsageError("dataset: non-finite entries");
}

Matrix RandomGroup::map(const Matrix& in) const {
    if (in.cols() != weights.rows())
        throw UsageError("random group: input has " + std::to_string(in.cols()) + " columns, expected " +
                         std::to_string(weights.rows()));
    Matrix z = in * weights;
    z.rowwise() += bias;
    return activate(z, activation);
}

RandomGroup RandomGroup::sample(Index in_dim, Index nodes, double bound, Activation activation,
                                std::uint64_t seed) {
    if (nodes < 1) throw ConfigError("random group: nodes must be >= 1");
    if (in_dim < 1) throw ConfigError("random group: input dimension must be >= 1");
    if (!(bound > 0) || !std::isfinite(bound)) throw ConfigError("random group: interval bound must be positive");
    RandomGroup g;
    g.weights.resize(in_dim, nodes);
    g.bias.resize(nodes);
    g.activation = activation;
    g.interval_bound = bound;
    Rng rng(seed);
    for (Index j = 0; j < nodes; ++j) {
        for (Index i = 0; i < in_dim; ++i) g.weights(i, j) = rng.uniform(-bound, bound);
        g.bias(j) = rng.uniform(-bound, bound);
    }
    return g;
}

ElmModel train_elm(const Dataset& data, const ElmConfig& config, std::uint64_t seed) {
    data.validate();
    if (config.nodes < 1) throw ConfigError("elm: nodes must be >= 1");
    if (config.nodes > config.max_nodes)
        throw ConfigError("elm: nodes " + std::to_string(config.nodes) + " exceeds maximum " +
                          std::to_string(config.max_nodes));
    if (!(config.lambda >= 0)) throw ConfigError("elm: lambda must be nonnegative");
    ElmModel m;
    m.hidden = RandomGroup::sample(data.input_dim(), config.nodes, config.interval, config.activation, seed);
    m.ridge_lambda = config.lambda;
    m.seed = seed;
    m.output_weights = ridge_solve(m.hidden.map(data.X), data.Y, config.lambda);
    return m;
}

void BlsConfig::validate() const {
    if (feature_groups < 1) throw ConfigError("bls: feature_groups must be >= 1");
    if (feature_nodes < 1) throw ConfigError("bls: feature_nodes must be >= 1");
    if (enhancement_groups < 0) throw ConfigError("bls: enhancement_groups must be >= 0");
    if (enhancement_groups > 0 && enhancement_nodes < 1) throw ConfigError("bls: enhancement_nodes must be >= 1");
    if (!(lambda >= 0)) throw ConfigError("bls: lambda must be nonnegative");
    if (!(pinv_rtol > 0)) throw ConfigError("bls: pinv_rtol must be positive");
    if (!(dependence_tol > 0)) throw ConfigError("bls: dependence_tol must be positive");
    schedule.validate();
    if (feature_interval && (!(*feature_interval > 0) || !std::isfinite(*feature_interval)))
        throw ConfigError("bls: feature_interval must be positive");
}

Index BlsModel::input_dim() const {
    if (feature_groups.empty()) throw StateError("bls: model has no feature groups");
    return feature_groups.front().input_dim();
}

Index BlsModel::feature_node_count() const {
    Index n = 0;
    for (const auto& g : feature_groups) n += g.nodes();
    return n;
}

Index BlsModel::enhancement_node_count() const {
    Index n = 0;
    for (const auto& g : enhancement_groups) n += g.nodes();
    return n;
}

Matrix BlsModel::features(const Matrix& X) const {
    require_input_dim(X.cols(), input_dim(), "bls");
    std::vector<Matrix> parts;
    parts.reserve(feature_groups.size());
    for (const auto& g : feature_groups) parts.push_back(g.map(X));
    return hconcat(parts, X.rows());
}

Matrix BlsModel::state_matrix(const Matrix& X) const {
    const Matrix z = features(X);
    std::vector<Matrix> parts{z};
    for (const auto& g : enhancement_groups) parts.push_back(g.map(z));
    return hconcat(parts, X.rows());
}

std::uint64_t feature_group_seed(std::uint64_t seed, Index group_index) {
    return derive_seed(seed, kFeatureStream + static_cast<std::uint64_t>(group_index));
}

std::uint64_t enhancement_group_seed(std::uint64_t seed, Index group_index) {
    return derive_seed(seed, kEnhancementStream + static_cast<std::uint64_t>(group_index));
}

std::uint64_t stacked_block_seed(std::uint64_t seed, Index block_index) {
    return derive_seed(seed, kBlockStream + static_cast<std::uint64_t>(block_index));
}

BlsModel train_bls(const Dataset& data, const BlsConfig& config, std::uint64_t seed) {
    data.validate();
    config.validate();
    BlsModel m;
    m.seed = seed;
    m.ridge_lambda = config.lambda;
    m.pinv_rtol = config.pinv_rtol;
    m.dependence_tol = config.dependence_tol;

    const double base_bound = config.schedule.at(0);
    for (Index i = 0; i < config.feature_groups; ++i)
        m.feature_groups.push_back(RandomGroup::sample(data.input_dim(), config.feature_nodes, config.feature_bound(),
                                                       config.feature_activation, feature_group_seed(seed, i)));
    const Index zdim = m.feature_node_count();
    for (Index j = 0; j < config.enhancement_groups; ++j)
        m.enhancement_groups.push_back(RandomGroup::sample(zdim, config.enhancement_nodes, base_bound,
                                                           config.enhancement_activation,
                                                           enhancement_group_seed(seed, j)));

    const Matrix a = m.state_matrix(data.X);
    if (!a.allFinite()) throw NumericError("bls: non-finite state matrix");
    m.output_weights = ridge_solve(a, data.Y, config.lambda, config.pinv_rtol);
    m.cached_pinv = pinv(a, config.pinv_rtol);
    return m;
}

EnhancementStep add_enhancement_group_traced(const BlsModel& model, const Dataset& data, Index nodes,
                                             double interval_bound, std::uint64_t seed, Activation activation) {
    data.validate();
    if (!model.cached_pinv)
        throw StateError("bls: model has no cached pseudoinverse; retrain with train_bls before growing it");
    if (model.output_weights.cols() != data.output_dim())
        throw UsageError("bls: data has a different output dimension than the model");

    const Matrix z = model.features(data.X);
    const Matrix a = model.state_matrix(data.X);
    RandomGroup group = RandomGroup::sample(z.cols(), nodes, interval_bound, activation, seed);
    const Matrix h = group.map(z);

    auto grown = grow_columns<double>(a, *model.cached_pinv, model.output_weights, h, data.Y, model.dependence_tol);

    EnhancementStep out{model, grown.dependent, false};
    Matrix wider(a.rows(), a.cols() + h.cols());
    wider << a, h;
    if (!(pinv_defect(wider, grown.pinv) < kPinvDefectLimit)) {
        // The block update drifted, which happens on nearly collinear designs.
        // Rebuild the pseudoinverse and keep whatever offset the weights had
        // from A+ Y (the ridge start), as the exact update would.
        Matrix fresh = pinv(wider, model.pinv_rtol);
        Matrix w = fresh * data.Y;
        w.topRows(a.cols()) += model.output_weights - *model.cached_pinv * data.Y;
        grown.pinv = std::move(fresh);
        grown.weights = std::move(w);
        out.refreshed = true;
    }
    out.model.enhancement_groups.push_back(std::move(group));
    out.model.output_weights = std::move(grown.weights);
    out.model.cached_pinv = std::move(grown.pinv);
    return out;
}

BlsModel add_enhancement_group(const BlsModel& model, const Dataset& data, Index nodes, double interval_bound,
                               std::uint64_t seed, Activation activation) {
    return add_enhancement_group_traced(model, data, nodes, interval_bound, seed, activation).model;
}

BlsModel grow_bls(const BlsModel& model, const Dataset& data, const BlsConfig& config, Index step) {
    if (step < 1) throw UsageError("bls: growth steps are numbered from 1");
    const auto j = static_cast<Index>(model.enhancement_groups.size());
    return add_enhancement_group(model, data, config.enhancement_nodes, config.schedule.at(step),
                                 enhancement_group_seed(model.seed, j), config.enhancement_activation);
}

void add_stacked_block(StackedBlsModel& model, const Dataset& data, const BlsConfig& block_config,
                       std::uint64_t block_seed) {
    data.validate();
    Matrix residual = data.Y;
    Matrix input = data.X;
    if (!model.blocks.empty()) {
        const auto outs = block_outputs(model, data.X);
        for (const auto& o : outs) residual -= o;
        if (model.input == StackInput::previous_output) input = outs.back();
    }
    BlsModel block = train_bls(Dataset{input, residual}, block_config, block_seed);
    residual -= predict(block, input);
    model.blocks.push_back(std::move(block));
    model.training_residual_norms.push_back(residual.norm());
}

StackedBlsModel train_stacked_bls(const Dataset& data, const StackedBlsConfig& config, std::uint64_t seed) {
    if (config.block_count < 1) throw ConfigError("stacked bls: block_count must be >= 1");
    config.block.validate();
    StackedBlsModel m;
    m.input = config.input;
    for (Index k = 0; k < config.block_count; ++k)
        add_stacked_block(m, data, config.block, k == 0 ? seed : stacked_block_seed(seed, k));
    return m;
}

Matrix predict(const ElmModel& model, const Matrix& X) {
    require_input_dim(X.cols(), model.hidden.input_dim(), "elm");
    return model.hidden.map(X) * model.output_weights;
}

Matrix predict(const BlsModel& model, const Matrix& X) {
    const Matrix a = model.state_matrix(X);
    if (a.cols() != model.output_weights.rows())
        throw StateError("bls: output weight rows do not match the node count");
    return a * model.output_weights;
}

std::vector<Matrix> block_outputs(const StackedBlsModel& model, const Matrix& X) {
    if (model.blocks.empty()) throw StateError("stacked bls: model has no blocks");
    std::vector<Matrix> outs;
    outs.reserve(model.blocks.size());
    for (const auto& block : model.blocks) {
        const Matrix& in = (outs.empty() || model.input == StackInput::raw_input) ? X : outs.back();
        outs.push_back(predict(block, in));
    }
    return outs;
}

Matrix predict(const StackedBlsModel& model, const Matrix& X) {
    const auto outs = block_outputs(model, X);
    Matrix sum = outs.front();
    for (std::size_t k = 1; k < outs.size(); ++k) sum += outs[k];
    return sum;
}

Eigen::VectorXi argmax_rows(const Matrix& scores) {
    Eigen::VectorXi out(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i) {
        Index j = 0;
        scores.row(i).maxCoeff(&j);
        out(i) = static_cast<int>(j);
    }
    return out;
}

double classification_accuracy(const Matrix& scores, const Matrix& one_hot) {
    if (scores.rows() != one_hot.rows() || scores.cols() != one_hot.cols())
        throw UsageError("accuracy: score and label shapes differ");
    if (scores.rows() == 0) throw UsageError("accuracy: empty input");
    const auto pred = argmax_rows(scores);
    const auto truth = argmax_rows(one_hot);
    return static_cast<double>((pred.array() == truth.array()).count()) / static_cast<double>(scores.rows());
}

double rmse(const Matrix& prediction, const Matrix& target) {
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
        throw UsageError("rmse: shapes differ");
    if (prediction.size() == 0) throw UsageError("rmse: empty input");
    return std::sqrt((prediction - target).squaredNorm() / static_cast<double>(prediction.size()));
}

} // namespace rflnn
