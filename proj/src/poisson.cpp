#include "rflnn/poisson.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "rflnn/freqgen.hpp"
#include "rflnn/linalg.hpp"

namespace rflnn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_residual(const PoissonSystem& sys, const Vector& u, double g_norm) {
    const double r = (sys.g - sys.A * u).norm();
    return g_norm > 0 ? r / g_norm : r;
}

} // namespace

PoissonSystem discretize_1d(Index n, const std::function<double(double)>& g_fn) {
    if (n < 2) throw ConfigError("discretize_1d: n must be >= 2");
    PoissonSystem sys;
    const Index p = n - 1;
    const double dx = 2.0 / static_cast<double>(n);
    sys.grid = {1, n, dx, -1.0, 1.0};
    sys.interior_coords.resize(p, 1);
    sys.g.resize(p);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(3 * p));
    for (Index i = 0; i < p; ++i) {
        const double x = -1.0 + static_cast<double>(i + 1) * dx;
        sys.interior_coords(i, 0) = x;
        sys.g(i) = dx * dx * g_fn(x);
        t.emplace_back(i, i, 2.0);
        if (i > 0) t.emplace_back(i, i - 1, -1.0);
        if (i + 1 < p) t.emplace_back(i, i + 1, -1.0);
    }
    sys.A.resize(p, p);
    sys.A.setFromTriplets(t.begin(), t.end());
    sys.A.makeCompressed();
    return sys;
}

PoissonSystem discretize_2d(Index n, const std::function<double(double, double)>& f_fn,
                            const std::function<double(double, double)>& boundary_fn) {
    if (n < 2) throw ConfigError("discretize_2d: n must be >= 2");
    PoissonSystem sys;
    const Index m = n - 1;
    const Index p = m * m;
    const double h = 1.0 / static_cast<double>(n);
    sys.grid = {2, n, h, 0.0, 1.0};
    sys.interior_coords.resize(p, 2);
    sys.g.resize(p);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(5 * p));
    auto id = [m](Index i, Index j) { return (j - 1) * m + (i - 1); };
    for (Index j = 1; j <= m; ++j) {
        for (Index i = 1; i <= m; ++i) {
            const Index row = id(i, j);
            const double x = static_cast<double>(i) * h;
            const double y = static_cast<double>(j) * h;
            sys.interior_coords(row, 0) = x;
            sys.interior_coords(row, 1) = y;
            double rhs = h * h * f_fn(x, y);
            t.emplace_back(row, row, 4.0);
            const Index di[4] = {-1, 1, 0, 0};
            const Index dj[4] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const Index ii = i + di[k];
                const Index jj = j + dj[k];
                if (ii == 0 || ii == n || jj == 0 || jj == n)
                    rhs += boundary_fn(static_cast<double>(ii) * h, static_cast<double>(jj) * h);
                else
                    t.emplace_back(row, id(ii, jj), -1.0);
            }
            sys.g(row) = rhs;
        }
    }
    sys.A.resize(p, p);
    sys.A.setFromTriplets(t.begin(), t.end());
    sys.A.makeCompressed();
    return sys;
}

double paper_source_1d(double x) {
    return std::sin(x) + 4 * std::sin(4 * x) - 8 * std::sin(8 * x) + 16 * std::sin(24 * x);
}

namespace {
double particular_1d(double x) {
    return std::sin(x) + std::sin(4 * x) / 4 - std::sin(8 * x) / 8 + std::sin(24 * x) / 36;
}
} // namespace

double paper_solution_1d(double x) {
    // The particular part is odd, so u(-1) = u(1) = 0 leaves only a linear term.
    return particular_1d(x) - particular_1d(1.0) * x;
}

double paper_source_2d(double x, double y) { return -2 * (x * x + y * y); }

double paper_boundary_2d(double x, double y) {
    if (x == 1.0) return y * y;
    if (y == 1.0) return x * x;
    return 0.0;
}

double paper_solution_2d(double x, double y) { return x * x * y * y; }

PoissonSystem paper_problem_1d(Index n) { return discretize_1d(n, paper_source_1d); }
PoissonSystem paper_problem_2d(Index n) { return discretize_2d(n, paper_source_2d, paper_boundary_2d); }

Vector paper_solution(const PoissonSystem& sys) {
    Vector u(sys.size());
    for (Index i = 0; i < sys.size(); ++i)
        u(i) = sys.grid.dim == 1 ? paper_solution_1d(sys.interior_coords(i, 0))
                                 : paper_solution_2d(sys.interior_coords(i, 0), sys.interior_coords(i, 1));
    return u;
}

Vector direct_solve(const PoissonSystem& sys) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.A);
    if (ldlt.info() != Eigen::Success) throw NumericError("direct_solve: factorization failed");
    Vector u = ldlt.solve(sys.g);
    if (ldlt.info() != Eigen::Success) throw NumericError("direct_solve: solve failed");
    return u;
}

SolveResult jacobi_solve(const PoissonSystem& sys, const Vector& u0, const JacobiOptions& options) {
    if (u0.size() != sys.size()) throw UsageError("jacobi: initial guess has the wrong length");
    if (!(options.tol > 0)) throw ConfigError("jacobi: tol must be positive");
    if (options.max_iters < 0) throw ConfigError("jacobi: max_iters must be nonnegative");
    if (options.rule == StopRule::error && !options.reference)
        throw UsageError("jacobi: the error stopping rule needs a reference solution");
    const Vector diag = sys.A.diagonal();
    if ((diag.array() == 0).any()) throw NumericError("jacobi: zero on the diagonal");

    const auto start = Clock::now();
    const Vector inv_diag = diag.cwiseInverse();
    const double g_norm = sys.g.norm();
    const double ref_norm = options.reference ? options.reference->norm() : 0.0;

    SolveResult out;
    out.u = u0;
    Vector r(sys.size());
    auto rel_error = [&] {
        const double e = (out.u - *options.reference).norm();
        return ref_norm > 0 ? e / ref_norm : e;
    };

    Index it = 0;
    for (;; ++it) {
        r.noalias() = sys.g - sys.A * out.u;
        const double res = g_norm > 0 ? r.norm() / g_norm : r.norm();
        if (options.record_history) out.trace.residual_history.push_back(res);
        out.trace.final_residual = res;
        const double measure = options.rule == StopRule::residual ? res : rel_error();
        if (measure <= options.tol) {
            out.trace.converged = true;
            break;
        }
        if (it >= options.max_iters) break;
        out.u.array() += r.array() * inv_diag.array();
    }
    out.trace.iterations = it;
    if (options.reference) out.trace.final_error = rel_error();
    out.trace.wall_time = seconds_since(start);
    return out;
}

PoissonBlsConfig default_poisson_bls_1d() {
    PoissonBlsConfig c;
    c.bls.feature_groups = 1;
    c.bls.feature_nodes = 3;
    c.bls.feature_interval = 1.0;
    c.bls.feature_activation = Activation::identity;
    c.bls.enhancement_groups = 1;
    c.bls.enhancement_nodes = 25;
    c.bls.enhancement_activation = Activation::tanh;
    c.bls.schedule = IntervalSchedule::constant(16.0);
    c.bls.lambda = 1e-12;
    c.coordinates = CoordinateRange::symmetric;
    return c;
}

PoissonBlsConfig default_poisson_bls_2d() {
    PoissonBlsConfig c = default_poisson_bls_1d();
    c.bls.enhancement_nodes = 10;
    c.bls.schedule = IntervalSchedule::constant(1.0);
    c.bls.lambda = 1e-10;
    return c;
}

Index default_growth_steps(int dim) {
    // Each 2-D step costs a pass over (n-1)^2 points; one step already reaches 1e-3.
    return dim == 1 ? 6 : 1;
}

PoissonFit bls_fit_poisson(const PoissonSystem& sys, const PoissonBlsConfig& config, Index growth_steps,
                           std::uint64_t seed) {
    if (growth_steps < 0) throw ConfigError("bls poisson: growth steps must be >= 0");
    const BlsConfig& bc = config.bls;
    bc.validate();
    if (!(bc.lambda > 0)) throw ConfigError("bls poisson: lambda must be positive");

    const double span = sys.grid.upper - sys.grid.lower;
    Matrix coords = (sys.interior_coords.array() - sys.grid.lower) / span;
    if (config.coordinates == CoordinateRange::symmetric) coords = (2 * coords.array() - 1).matrix();

    std::vector<RandomGroup> features;
    for (Index i = 0; i < bc.feature_groups; ++i)
        features.push_back(RandomGroup::sample(coords.cols(), bc.feature_nodes, bc.feature_bound(),
                                               bc.feature_activation, feature_group_seed(seed, i)));
    Matrix z(coords.rows(), bc.feature_nodes * bc.feature_groups);
    for (Index i = 0; i < bc.feature_groups; ++i)
        z.middleCols(i * bc.feature_nodes, bc.feature_nodes) = features[static_cast<std::size_t>(i)].map(coords);

    IncrementalRidge<double> ridge(sys.g, bc.lambda);
    ridge.reserve(z.cols() + bc.enhancement_nodes * (bc.enhancement_groups + growth_steps));
    std::vector<Matrix> phi_blocks{z};
    ridge.append(sys.A * z);

    PoissonFit fit;
    const double g_norm = sys.g.norm();
    auto assemble = [&](const Matrix& w) {
        Vector u = Vector::Zero(sys.size());
        Index at = 0;
        for (const auto& b : phi_blocks) {
            u.noalias() += b * w.middleRows(at, b.cols());
            at += b.cols();
        }
        return u;
    };
    auto add_group = [&](Index group_index, double bound) {
        const RandomGroup grp = RandomGroup::sample(z.cols(), bc.enhancement_nodes, bound, bc.enhancement_activation,
                                                    enhancement_group_seed(seed, group_index));
        Matrix h = grp.map(z);
        ridge.append(sys.A * h);
        phi_blocks.push_back(std::move(h));
    };

    Index group = 0;
    for (; group < bc.enhancement_groups; ++group) add_group(group, bc.schedule.at(0));
    fit.u = assemble(ridge.solve());
    fit.step_residuals.push_back(relative_residual(sys, fit.u, g_norm));
    for (Index k = 1; k <= growth_steps; ++k, ++group) {
        add_group(group, bc.schedule.at(k));
        fit.u = assemble(ridge.solve());
        fit.step_residuals.push_back(relative_residual(sys, fit.u, g_norm));
    }
    fit.columns = ridge.columns();
    return fit;
}

SolveResult bls_jacobi_solve(const PoissonSystem& sys, const PoissonBlsConfig& config, Index growth_steps,
                             const JacobiOptions& options, std::uint64_t seed) {
    const auto start = Clock::now();
    const PoissonFit fit = bls_fit_poisson(sys, config, growth_steps, seed);
    SolveResult out = jacobi_solve(sys, fit.u, options);
    out.trace.warm_start_source = WarmStart::bls;
    out.trace.wall_time = seconds_since(start);
    return out;
}

double sine_mode_coefficient(const Vector& e, Index k, Index n) {
    if (e.size() != n - 1) throw UsageError("sine_mode_coefficient: vector length must be n - 1");
    double dot = 0;
    for (Index i = 1; i < n; ++i)
        dot += e(i - 1) * std::sin(kPi * static_cast<double>(k * i) / static_cast<double>(n));
    // Grid sine modes are orthogonal with squared norm n/2.
    return std::abs(dot) / (static_cast<double>(n) / 2);
}

std::vector<BenchmarkRow> benchmark(const PoissonSystem& sys, const std::string& problem,
                                    const std::optional<Vector>& truth, const BenchmarkOptions& options) {
    if (options.repetitions < 1) throw ConfigError("benchmark: repetitions must be >= 1");
    if (options.seeds.empty()) throw ConfigError("benchmark: needs at least one seed");
    for (const auto& m : options.methods)
        if (m != "jacobi" && m != "bls_jacobi") throw ConfigError("benchmark: unknown method '" + m + "'");

    JacobiOptions jo;
    jo.rule = options.rule;
    jo.max_iters = options.max_iters;
    jo.record_history = false;
    if (options.rule == StopRule::error) jo.reference = direct_solve(sys);

    auto truth_error = [&](const Vector& u) {
        return truth ? (u - *truth).cwiseAbs().maxCoeff() : std::nan("");
    };

    std::vector<BenchmarkRow> rows;
    for (const auto& method : options.methods) {
        for (double tol : options.tols) {
            jo.tol = tol;
            std::vector<double> times, iters, residuals, errors;
            const std::size_t seed_count = method == "jacobi" ? 1 : options.seeds.size();
            for (std::size_t s = 0; s < seed_count; ++s) {
                std::vector<double> reps;
                SolveResult last;
                for (Index r = 0; r < options.repetitions; ++r) {
                    last = method == "jacobi"
                               ? jacobi_solve(sys, Vector::Zero(sys.size()), jo)
                               : bls_jacobi_solve(sys, options.bls, options.growth_steps, jo, options.seeds[s]);
                    reps.push_back(last.trace.wall_time);
                }
                times.push_back(median(reps));
                iters.push_back(static_cast<double>(last.trace.iterations));
                residuals.push_back(last.trace.final_residual);
                errors.push_back(truth_error(last.u));
            }
            BenchmarkRow row;
            row.problem = problem;
            row.method = method;
            row.tol = tol;
            row.median_seconds = options.record_timing ? median(times) : 0.0;
            row.iterations = median(iters);
            row.residual = median(residuals);
            row.error_vs_truth = truth ? median(errors) : std::nan("");
            rows.push_back(row);
        }
    }
    return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream os;
    os << "problem,method,tol,median_seconds,iterations,residual,error_vs_truth\n";
    for (const auto& r : rows)
        os << r.problem << ',' << r.method << ',' << format_real(r.tol) << ',' << format_real(r.median_seconds) << ','
           << format_real(r.iterations) << ',' << format_real(r.residual) << ','
           << (std::isnan(r.error_vs_truth) ? std::string() : format_real(r.error_vs_truth)) << '\n';
    return os.str();
}

std::string solution_csv(const PoissonSystem& sys, const Vector& u) {
    if (u.size() != sys.size()) throw UsageError("solution_csv: length mismatch");
    std::ostringstream os;
    os << (sys.grid.dim == 1 ? "x,u\n" : "x,y,u\n");
    for (Index i = 0; i < sys.size(); ++i) {
        for (Index d = 0; d < sys.interior_coords.cols(); ++d) os << format_real(sys.interior_coords(i, d)) << ',';
        os << format_real(u(i)) << '\n';
    }
    return os.str();
}

std::string_view to_string(StopRule rule) { return rule == StopRule::residual ? "residual" : "error"; }

StopRule parse_stop_rule(std::string_view name) {
    if (name == "residual") return StopRule::residual;
    if (name == "error") return StopRule::error;
    throw ConfigError("unknown stopping rule '" + std::string(name) + "'");
}

} // namespace rflnn
