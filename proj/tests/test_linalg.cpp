#include <doctest.h>

#include <limits>
#include <random>

#include "rflnn/interval_schedule.hpp"
#include "rflnn/linalg.hpp"
#include "rflnn/random.hpp"

using namespace rflnn;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-1, 1);
    return m;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

} // namespace

TEST_CASE("activation kinds") {
    const Matrix z = Matrix::Zero(2, 3);
    CHECK(activate(z, Activation::tanh).isZero(0));
    const Matrix m = random_matrix(3, 4, 1);
    CHECK(activate(m, Activation::identity) == m);
    Matrix big(1, 1);
    big(0, 0) = 1e6;
    CHECK(std::abs(activate(big, Activation::tanh)(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(activate(big, Activation::sigmoid)(0, 0) - 1.0) < 1e-12);
    big(0, 0) = -1e6;
    CHECK(activate(big, Activation::sigmoid)(0, 0) == doctest::Approx(0.0));
    Matrix one(1, 1);
    one(0, 0) = 0.3;
    CHECK(activate(one, Activation::sigmoid)(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-14));
    CHECK_THROWS_AS(parse_activation("relu"), ConfigError);
    CHECK(parse_activation("linear") == Activation::identity);
}

TEST_CASE("fast_tanh agrees with std::tanh in relative terms") {
    Matrix z(1, 12);
    z << 0.0, 1e-300, -1e-12, 0.2499, 0.25, -0.3, 0.7, 3.0, -19.0, 25.0, 710.0, -1e6;
    const Matrix t = fast_tanh(z);
    for (Index j = 0; j < z.cols(); ++j) {
        const double want = std::tanh(z(0, j));
        CHECK(std::abs(t(0, j) - want) <= 1e-15 * std::abs(want));
        CHECK(std::signbit(t(0, j)) == std::signbit(want));
    }
    const Matrix m = 8.0 * random_matrix(40, 30, 11);
    CHECK((fast_tanh(m) - m.array().tanh().matrix()).cwiseAbs().maxCoeff() < 1e-15);
    Matrix inf(1, 2);
    inf << std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity();
    CHECK(fast_tanh(inf)(0, 0) == 1.0);
    CHECK(fast_tanh(inf)(0, 1) == -1.0);
}

TEST_CASE("ridge_solve small cases") {
    Matrix a = Matrix::Identity(2, 2);
    Matrix y(2, 1);
    y << 1, 2;
    const Matrix w = ridge_solve(a, y, 1.0);
    CHECK(w(0, 0) == doctest::Approx(0.5));
    CHECK(w(1, 0) == doctest::Approx(1.0));

    // Orthonormal columns with lambda = 0 collapse to A^T Y.
    const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(6, 3, 2)).householderQ() * Matrix::Identity(6, 3);
    const Matrix y6 = random_matrix(6, 2, 3);
    CHECK(rel(ridge_solve(q, y6, 0.0), q.transpose() * y6) < 1e-12);
}

TEST_CASE("ridge_solve matches explicit inverse of the normal matrix") {
    const Matrix a = random_matrix(6, 3, 4);
    const Matrix y = random_matrix(6, 2, 5);
    const double lambda = 0.1;
    const Matrix normal = lambda * Matrix::Identity(3, 3) + a.transpose() * a;
    const Matrix oracle = normal.inverse() * a.transpose() * y;
    CHECK(rel(ridge_solve(a, y, lambda), oracle) < 1e-10);
}

TEST_CASE("ridge_solve errors and rank deficiency") {
    Matrix a = random_matrix(5, 2, 6);
    Matrix y = random_matrix(4, 1, 7);
    CHECK_THROWS_AS(ridge_solve(a, y, 0.1), UsageError);
    y = random_matrix(5, 1, 7);
    CHECK_THROWS_AS(ridge_solve(a, y, -1.0), ConfigError);
    a(0, 0) = std::nan("");
    CHECK_THROWS_AS(ridge_solve(a, y, 0.1), NumericError);

    // Duplicate column, lambda = 0: minimum-norm solution splits weight evenly.
    Matrix d(4, 2);
    d.col(0) << 1, 2, 3, 4;
    d.col(1) = d.col(0);
    Matrix t(4, 1);
    t.col(0) = 2 * d.col(0);
    const Matrix w = ridge_solve(d, t, 0.0);
    CHECK(w(0, 0) == doctest::Approx(1.0));
    CHECK(w(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("ridge optimality under random perturbations") {
    const Matrix a = random_matrix(20, 5, 8);
    const Matrix y = random_matrix(20, 2, 9);
    const double lambda = 0.05;
    const Matrix w = ridge_solve(a, y, lambda);
    auto objective = [&](const Matrix& v) { return (a * v - y).squaredNorm() + lambda * v.squaredNorm(); };
    const double best = objective(w);
    for (std::uint64_t s = 0; s < 200; ++s) {
        Matrix delta = random_matrix(5, 2, 100 + s);
        delta *= 1e-3 / delta.norm();
        CHECK(objective(w + delta) >= best);
    }
}

TEST_CASE("pinv") {
    CHECK(rel(pinv(Matrix::Identity(3, 3)), Matrix::Identity(3, 3)) < 1e-15);
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2;
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 0.5;
    CHECK(rel(pinv(d), expect) < 1e-15);

    const Matrix a = random_matrix(5, 3, 10);
    const Matrix p = pinv(a);
    CHECK((p * a - Matrix::Identity(3, 3)).norm() < 1e-10);
    // Penrose identities.
    CHECK((a * p * a - a).norm() < 1e-10);
    CHECK((p * a * p - p).norm() < 1e-10);
    CHECK(((a * p).transpose() - a * p).norm() < 1e-10);
    CHECK(((p * a).transpose() - p * a).norm() < 1e-10);
    CHECK(pinv_defect(a, p) < 1e-12);

    Matrix bad = a;
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(pinv(bad), NumericError);
}

TEST_CASE("grow_columns: orthogonal new column takes the C-pinv branch") {
    Matrix a = Matrix::Zero(4, 2);
    a(0, 0) = 1;
    a(1, 1) = 1;
    Matrix col = Matrix::Zero(4, 1);
    col(2, 0) = 3;
    const Matrix y = random_matrix(4, 1, 11);
    const Matrix ap = pinv(a);
    const auto g = grow_columns<double>(a, ap, ap * y, col, y);
    CHECK_FALSE(g.dependent);
    // B^T = C+ = col^T / 9.
    CHECK((g.pinv.bottomRows(1) - col.transpose() / 9.0).norm() < 1e-15);
}

TEST_CASE("grow_columns equals batch least squares") {
    const Matrix a = random_matrix(30, 6, 12);
    const Matrix h = random_matrix(30, 4, 13);
    const Matrix y = random_matrix(30, 2, 14);
    const Matrix ap = pinv(a);
    const auto g = grow_columns<double>(a, ap, ap * y, h, y);
    Matrix full(30, 10);
    full << a, h;
    const Matrix oracle = full.colPivHouseholderQr().solve(y);
    CHECK(rel(g.weights, oracle) < 1e-10);
    CHECK(pinv_defect(full, g.pinv) < 1e-10);
}

TEST_CASE("grow_columns: exactly dependent columns leave predictions unchanged") {
    const Matrix a = random_matrix(12, 4, 15);
    const Matrix y = random_matrix(12, 1, 16);
    const Matrix ap = pinv(a);
    const Matrix w = ap * y;
    const Matrix dup = a.leftCols(2);
    const auto g = grow_columns<double>(a, ap, w, dup, y);
    CHECK(g.dependent);
    Matrix full(12, 6);
    full << a, dup;
    CHECK((full * g.weights - a * w).norm() < 1e-8);
    CHECK(pinv_defect(full, g.pinv) < 1e-8);
    // Reference pseudoinverse of the widened matrix.
    CHECK(rel(g.pinv, pinv(full)) < 1e-8);
}

TEST_CASE("grow_columns: partially dependent block") {
    const Matrix a = random_matrix(15, 3, 17);
    Matrix h(15, 2);
    h.col(0) = a.col(1) - 0.5 * a.col(2);
    h.col(1) = random_matrix(15, 1, 18);
    const Matrix y = random_matrix(15, 1, 19);
    const Matrix ap = pinv(a);
    const auto g = grow_columns<double>(a, ap, ap * y, h, y);
    Matrix full(15, 5);
    full << a, h;
    CHECK(rel(g.pinv, pinv(full)) < 1e-8);
    CHECK(rel(g.weights, pinv(full) * y) < 1e-8);
}

TEST_CASE("grow_columns rejects a stale pseudoinverse") {
    const Matrix a = random_matrix(8, 3, 20);
    const Matrix y = random_matrix(8, 1, 21);
    const Matrix stale = pinv(Matrix(a.leftCols(2)));
    CHECK_THROWS_AS(grow_columns<double>(a, stale, stale * y, random_matrix(8, 1, 22), y), StateError);
}

TEST_CASE("IncrementalRidge matches a one-shot ridge solve") {
    const Matrix b1 = random_matrix(40, 5, 23);
    const Matrix b2 = random_matrix(40, 3, 24);
    const Matrix b3 = random_matrix(40, 4, 25);
    const Matrix y = random_matrix(40, 1, 26);
    IncrementalRidge<double> inc(y, 1e-3);
    inc.append(b1);
    inc.append(b2);
    inc.append(b3);
    Matrix full(40, 12);
    full << b1, b2, b3;
    const Matrix oracle = (1e-3 * Matrix::Identity(12, 12) + full.transpose() * full).inverse() * full.transpose() * y;
    CHECK(rel(inc.solve(), oracle) < 1e-10);
    CHECK(inc.columns() == 12);
    CHECK_THROWS_AS(IncrementalRidge<double>(y, 0.0), ConfigError);
}

TEST_CASE("templated on scalar: float instantiation") {
    Eigen::MatrixXf a = Eigen::MatrixXf::Identity(3, 3) * 2.0f;
    const Eigen::MatrixXf p = pinv(a, 1e-6f);
    CHECK(p(0, 0) == doctest::Approx(0.5f));
    Eigen::MatrixXf y = Eigen::MatrixXf::Ones(3, 1);
    CHECK(ridge_solve(a, y, 0.0f)(2, 0) == doctest::Approx(0.5f));
}

TEST_CASE("interval schedules") {
    CHECK(IntervalSchedule::constant(1.0).at(7) == 1.0);
    CHECK(IntervalSchedule::geometric(1.0, 1.5, 100).at(2) == doctest::Approx(2.25));
    CHECK(IntervalSchedule::geometric(1.0, 2.0, 8.0).at(10) == 8.0);
    CHECK(IntervalSchedule::linear(1.0, 0.5, 3.0).at(2) == 2.0);
    CHECK(IntervalSchedule::linear(1.0, 0.5, 3.0).at(100) == 3.0);
    CHECK_THROWS_AS(IntervalSchedule::constant(0.0), ConfigError);
    CHECK_THROWS_AS(IntervalSchedule::geometric(1.0, -1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(IntervalSchedule::linear(1.0, -0.1, 2.0), ConfigError);

    // Growth schedules never decrease and never exceed the cap.
    for (double rate : {1.0, 1.2, 1.4, 2.0, 3.5}) {
        const auto s = IntervalSchedule::geometric(0.7, rate, 16.0);
        for (Index k = 1; k < 60; ++k) {
            CHECK(s.at(k) >= s.at(k - 1));
            CHECK(s.at(k) <= 16.0);
        }
        if (rate > 1) CHECK(s.at(1000) == 16.0);
    }
    for (double inc : {0.0, 0.3, 2.0}) {
        const auto s = IntervalSchedule::linear(0.5, inc, 4.0);
        for (Index k = 1; k < 60; ++k) CHECK(s.at(k) >= s.at(k - 1));
    }
}

TEST_CASE("rng determinism and range") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform(-2, 2);
        CHECK(x == b.uniform(-2, 2));
        CHECK(x >= -2);
        CHECK(x <= 2);
    }
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    Rng c(7);
    for (int i = 0; i < 100; ++i) CHECK(c.below(10) < 10);
}
