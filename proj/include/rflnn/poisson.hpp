#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "rflnn/common.hpp"
#include "rflnn/networks.hpp"

namespace rflnn {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct PoissonGrid {
    int dim = 1;
    Index n = 2;         // intervals per axis
    double spacing = 1;  // dx
    double lower = 0;    // domain is [lower, upper]^dim
    double upper = 1;
};

/// A u = g for the interior unknowns of a central-difference discretization
/// of -u'' = g (1-D) or -(u_xx + u_yy) = f (2-D), boundary values folded into g.
struct PoissonSystem {
    SparseMatrix A;
    Vector g;
    PoissonGrid grid;
    Matrix interior_coords;  // P x dim; in 2-D, x varies fastest

    Index size() const { return g.size(); }
};

/// Interior nodes x_i = -1 + i dx, dx = 2/n, zero boundary values.
PoissonSystem discretize_1d(Index n, const std::function<double(double)>& g_fn);

/// Interior nodes of the unit square with spacing 1/n and the 5-point stencil.
PoissonSystem discretize_2d(Index n, const std::function<double(double, double)>& f_fn,
                            const std::function<double(double, double)>& boundary_fn);

/// g(x) = sin x + 4 sin 4x - 8 sin 8x + 16 sin 24x.
double paper_source_1d(double x);
/// Solution of -u'' = paper_source_1d with u(-1) = u(1) = 0.
double paper_solution_1d(double x);

/// f = -2 (x^2 + y^2); boundary y^2 at x = 1, x^2 at y = 1, zero on the axes.
double paper_source_2d(double x, double y);
double paper_boundary_2d(double x, double y);
/// u = x^2 y^2.
double paper_solution_2d(double x, double y);

PoissonSystem paper_problem_1d(Index n);
PoissonSystem paper_problem_2d(Index n);
/// Analytic solution of the paper problem sampled at the interior nodes.
Vector paper_solution(const PoissonSystem& sys);

Vector direct_solve(const PoissonSystem& sys);

enum class StopRule {
    residual,  // ||A u - g|| / ||g|| <= tol
    error,     // ||u - reference|| / ||reference|| <= tol
};

enum class WarmStart { zero, bls };

struct SolveTrace {
    Index iterations = 0;
    std::vector<double> residual_history;  // relative residual of every iterate, starting with u0
    double wall_time = 0;                  // seconds
    WarmStart warm_start_source = WarmStart::zero;
    bool converged = false;
    double final_residual = 0;
    double final_error = 0;  // only for StopRule::error
};

struct JacobiOptions {
    double tol = 1e-6;
    Index max_iters = 1000000;
    StopRule rule = StopRule::residual;
    std::optional<Vector> reference;  // required by StopRule::error
    bool record_history = true;
};

struct SolveResult {
    Vector u;
    SolveTrace trace;
};

/// Plain (undamped) Jacobi iteration u <- u + D^{-1} (g - A u). When max_iters
/// is reached the last iterate is returned with converged = false.
SolveResult jacobi_solve(const PoissonSystem& sys, const Vector& u0, const JacobiOptions& options);

enum class CoordinateRange {
    unit,       // interior coordinates mapped to [0, 1]
    symmetric,  // mapped to [-1, 1]
};

struct PoissonBlsConfig {
    BlsConfig bls;
    CoordinateRange coordinates = CoordinateRange::symmetric;
};

/// Preset networks for the two paper problems.
PoissonBlsConfig default_poisson_bls_1d();
PoissonBlsConfig default_poisson_bls_2d();
Index default_growth_steps(int dim);

struct PoissonFit {
    Vector u;
    Index columns = 0;
    std::vector<double> step_residuals;  // relative residual after the initial fit and each growth step
};

/// Least-squares fit u = Phi W of A u = g with Phi a BLS state matrix over the
/// interior coordinates: W minimizes ||A Phi W - g||^2 + lambda ||W||^2.
/// Growth step k appends an enhancement group drawn from interval_at(k).
PoissonFit bls_fit_poisson(const PoissonSystem& sys, const PoissonBlsConfig& config, Index growth_steps,
                           std::uint64_t seed);

/// Jacobi warm-started from the BLS fit; wall time includes the fit.
SolveResult bls_jacobi_solve(const PoissonSystem& sys, const PoissonBlsConfig& config, Index growth_steps,
                             const JacobiOptions& options, std::uint64_t seed);

/// Error-energy of `e` along the grid sine mode sin(k pi i / n), i = 1..n-1
/// (1-D systems only).
double sine_mode_coefficient(const Vector& e, Index k, Index n);

struct BenchmarkOptions {
    std::vector<std::string> methods{"jacobi", "bls_jacobi"};
    std::vector<double> tols{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    Index repetitions = 5;
    StopRule rule = StopRule::residual;
    Index max_iters = 2000000;
    PoissonBlsConfig bls;
    Index growth_steps = 6;
    bool record_timing = true;
};

struct BenchmarkRow {
    std::string problem;
    std::string method;
    double tol = 0;
    double median_seconds = 0;
    double iterations = 0;
    double residual = 0;
    double error_vs_truth = 0;
};

/// Median wall time and iteration count per (method, tol) over seeds; each
/// timing is itself the median of `repetitions` runs. Under StopRule::error
/// the reference is the direct solve of the discrete system.
std::vector<BenchmarkRow> benchmark(const PoissonSystem& sys, const std::string& problem,
                                    const std::optional<Vector>& truth, const BenchmarkOptions& options);

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

/// Columns x[,y],u.
std::string solution_csv(const PoissonSystem& sys, const Vector& u);

std::string_view to_string(StopRule rule);
StopRule parse_stop_rule(std::string_view name);

} // namespace rflnn
