#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rflnn/common.hpp"
#include "rflnn/interval_schedule.hpp"

namespace rflnn {

/// Observations by rows: X is N x D, Y is N x K.
struct Dataset {
    Matrix X;
    Matrix Y;

    Index size() const { return X.rows(); }
    Index input_dim() const { return X.cols(); }
    Index output_dim() const { return Y.cols(); }

    /// Throws UsageError when the shape or finiteness invariants do not hold.
    void validate() const;
};

/// A block of randomly parameterized nodes: activation(in * weights + bias).
struct RandomGroup {
    Matrix weights;  // in_dim x nodes
    RowVector bias;  // nodes
    Activation activation = Activation::tanh;
    double interval_bound = 1.0;

    Index input_dim() const { return weights.rows(); }
    Index nodes() const { return weights.cols(); }

    Matrix map(const Matrix& in) const;

    /// Draws weights and biases uniformly on [-bound, bound]. Draws are
    /// node-major, so a group with fewer nodes is a prefix of a larger one
    /// sampled from the same seed.
    static RandomGroup sample(Index in_dim, Index nodes, double bound, Activation activation,
                              std::uint64_t seed);
};

struct ElmConfig {
    Index nodes = 100;
    double interval = 1.0;
    double lambda = 1e-8;
    Activation activation = Activation::tanh;
    Index max_nodes = 100000;
};

struct ElmModel {
    RandomGroup hidden;
    Matrix output_weights;  // L x K
    double ridge_lambda = 0.0;
    std::uint64_t seed = 0;
};

ElmModel train_elm(const Dataset& data, const ElmConfig& config, std::uint64_t seed);

struct BlsConfig {
    Index feature_groups = 1;
    Index feature_nodes = 10;      // per feature group
    Index enhancement_groups = 1;
    Index enhancement_nodes = 10;  // per enhancement group
    Activation feature_activation = Activation::identity;
    Activation enhancement_activation = Activation::tanh;
    double lambda = 1e-8;
    /// Every group of the initial model draws from interval_at(0); growth
    /// step k (see grow_bls) draws its enhancement group from interval_at(k).
    IntervalSchedule schedule = IntervalSchedule::constant(1.0);
    /// Overrides interval_at(0) for the feature groups only.
    std::optional<double> feature_interval;
    double pinv_rtol = 1e-12;
    /// Relative Frobenius threshold for treating the residual block C as zero.
    double dependence_tol = 1e-8;

    void validate() const;
    double feature_bound() const { return feature_interval ? *feature_interval : schedule.at(0); }
};

struct BlsModel {
    std::vector<RandomGroup> feature_groups;
    std::vector<RandomGroup> enhancement_groups;
    Matrix output_weights;  // (feature nodes + enhancement nodes) x K
    double ridge_lambda = 0.0;
    std::optional<Matrix> cached_pinv;  // pseudoinverse of the training state matrix
    std::uint64_t seed = 0;
    double pinv_rtol = 1e-12;
    double dependence_tol = 1e-8;

    Index input_dim() const;
    Index output_dim() const { return output_weights.cols(); }
    Index feature_node_count() const;
    Index enhancement_node_count() const;
    Index total_nodes() const { return feature_node_count() + enhancement_node_count(); }

    /// Z^n = [Z_1, ..., Z_n].
    Matrix features(const Matrix& X) const;
    /// A = [Z^n, H^m].
    Matrix state_matrix(const Matrix& X) const;
};

/// Seed used for the j-th enhancement group of a model trained from `seed`.
std::uint64_t enhancement_group_seed(std::uint64_t seed, Index group_index);
std::uint64_t feature_group_seed(std::uint64_t seed, Index group_index);

BlsModel train_bls(const Dataset& data, const BlsConfig& config, std::uint64_t seed);

/// Widens a trained BLS by one enhancement group using the block
/// pseudoinverse update; no retraining on the full design.
BlsModel add_enhancement_group(const BlsModel& model, const Dataset& data, Index nodes, double interval_bound,
                               std::uint64_t seed, Activation activation = Activation::tanh);

/// Growth step k >= 1 of an incremental BLS: appends config.enhancement_nodes
/// nodes drawn from config.schedule.at(k), seeded by the group's position.
BlsModel grow_bls(const BlsModel& model, const Dataset& data, const BlsConfig& config, Index step);

/// Penrose defect allowed on the cached pseudoinverse after a growth step.
/// Beyond it the pseudoinverse is recomputed from the widened state matrix.
inline constexpr double kPinvDefectLimit = 1e-8;

/// Diagnostic variant that also reports which update branch was taken.
struct EnhancementStep {
    BlsModel model;
    bool dependent = false;
    bool refreshed = false;  // block update failed the defect check and was redone by SVD
};
EnhancementStep add_enhancement_group_traced(const BlsModel& model, const Dataset& data, Index nodes,
                                             double interval_bound, std::uint64_t seed,
                                             Activation activation = Activation::tanh);

/// What a stacked block k >= 2 sees as its input.
enum class StackInput {
    previous_output,  // output of block k-1 (blocks stacked on top of each other)
    raw_input,        // the original X for every block
};

struct StackedBlsConfig {
    BlsConfig block;
    Index block_count = 1;
    StackInput input = StackInput::raw_input;
};

struct StackedBlsModel {
    std::vector<BlsModel> blocks;
    StackInput input = StackInput::raw_input;
    /// ||Y - sum of block outputs||_F after each block, on the training data.
    std::vector<double> training_residual_norms;

    Index block_count() const { return static_cast<Index>(blocks.size()); }
};

StackedBlsModel train_stacked_bls(const Dataset& data, const StackedBlsConfig& config, std::uint64_t seed);

/// Trains one more block on the current residual and stacks it on top.
void add_stacked_block(StackedBlsModel& model, const Dataset& data, const BlsConfig& block_config,
                       std::uint64_t block_seed);

std::uint64_t stacked_block_seed(std::uint64_t seed, Index block_index);

Matrix predict(const ElmModel& model, const Matrix& X);
Matrix predict(const BlsModel& model, const Matrix& X);
Matrix predict(const StackedBlsModel& model, const Matrix& X);

/// Per-block contributions; their sum is predict(model, X).
std::vector<Matrix> block_outputs(const StackedBlsModel& model, const Matrix& X);

/// Row-wise argmax.
Eigen::VectorXi argmax_rows(const Matrix& scores);
double classification_accuracy(const Matrix& scores, const Matrix& one_hot);
double rmse(const Matrix& prediction, const Matrix& target);

} // namespace rflnn
