#include <doctest.h>

#include <cmath>

#include "rflnn/data_io.hpp"
#include "rflnn/freqgen.hpp"

using namespace rflnn;

namespace {

// Fourier integral of tanh(w x + b) with kernel exp(-i zeta x). The sign
// function carries the slow tail, and its transform is known in closed form:
// sign(w x + b) -> sign(w) exp(i zeta b / w) (-2 i / zeta). The remainder
// decays exponentially and is integrated with Simpson's rule on both sides of
// the kink at x = -b / w.
std::complex<double> tanh_ft_quadrature(double w, double b, double zeta) {
    const double x0 = -b / w;
    const double len = 40.0 / std::abs(w);
    const double sw = w > 0 ? 1.0 : -1.0;
    // sign(w x + b) is -sw left of the kink and +sw right of it.
    auto simpson = [&](double a, double c, double sign) {
        const int n = 200000;
        const double h = (c - a) / n;
        std::complex<double> acc = 0;
        for (int k = 0; k <= n; ++k) {
            const double x = a + k * h;
            const double wt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += wt * (std::tanh(w * x + b) - sign) * std::complex<double>(std::cos(zeta * x), -std::sin(zeta * x));
        }
        return acc * h / 3.0;
    };
    const std::complex<double> i(0, 1);
    const std::complex<double> sign_part = sw * std::exp(i * zeta * b / w) * (-2.0 * i / zeta);
    return simpson(x0 - len, x0, -sw) + simpson(x0, x0 + len, sw) + sign_part;
}

Dataset sine_mix(Index n) { return gen_sine_mix(n, -kPi, kPi, {1.0, 8.0}); }

} // namespace

TEST_CASE("tanh spectrum closed form at w = 1, b = 0") {
    for (double zeta : {0.3, 1.0, 2.5}) {
        // -i pi / sinh(pi zeta / 2)
        const auto v = tanh_spectrum_exact(1.0, 0.0, zeta);
        CHECK(std::abs(v.real()) < 1e-15);
        CHECK(v.imag() == doctest::Approx(-kPi / std::sinh(kPi * zeta / 2)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(tanh_spectrum(0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(tanh_spectrum(1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("tanh spectrum magnitude does not depend on b") {
    for (double w : {-3.0, 0.5, 1.0, 4.0})
        for (double zeta : {-7.0, 0.5, 3.0, 10.0}) {
            const double ref = std::abs(tanh_spectrum(w, 0.0, zeta));
            for (double b : {-5.0, -0.3, 0.7, 12.0})
                CHECK(std::abs(tanh_spectrum(w, b, zeta)) == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("tanh spectrum magnitude grows with |w| at fixed zeta") {
    for (double zeta : {1.0, 10.0, 25.0}) {
        double prev = 0;
        for (int k = 1; k <= 16; ++k) {
            const double m = std::abs(tanh_spectrum(0.5 * k, 0.2, zeta));
            CHECK(m > prev);
            CHECK(std::abs(tanh_spectrum(-0.5 * k, 0.2, zeta)) == doctest::Approx(m).epsilon(1e-12));
            prev = m;
        }
    }
    CHECK(std::abs(tanh_spectrum(4.0, 0.0, 10.0)) > std::abs(tanh_spectrum(1.0, 0.0, 10.0)));
}

TEST_CASE("asymptotic forms agree with the exact form once |u| > 20") {
    for (double w : {-2.0, -0.5, 0.25, 1.0, 3.0})
        for (double u : {-29.0, -25.0, -20.5, 20.5, 24.0, 29.0}) {
            const double zeta = 2 * w * u / kPi;
            const auto ex = tanh_spectrum_exact(w, 0.7, zeta);
            const auto as = tanh_spectrum_asymptotic(w, 0.7, zeta);
            CHECK(std::abs(ex - as) / std::abs(ex) < 1e-6);
        }
    // Far out the switch keeps the value finite and nonzero.
    const auto far = tanh_spectrum(0.5, 0.0, 200.0);
    CHECK(std::isfinite(far.imag()));
    CHECK(std::abs(far) > 0);
}

TEST_CASE("tanh spectrum matches a numeric Fourier integral" * doctest::timeout(60)) {
    for (double w : {0.5, 1.0, -2.0, 4.0})
        for (double b : {0.0, 0.8})
            for (double r : {0.5, 1.0, 2.0}) {
                const double zeta = r * std::abs(w);
                const auto num = tanh_ft_quadrature(w, b, zeta);
                const auto ex = tanh_spectrum_exact(w, b, zeta);
                CHECK(std::abs(std::abs(num) - std::abs(ex)) / std::abs(ex) < 0.05);
            }
}

TEST_CASE("quartiles and median") {
    const auto q = quartiles({0.4, 0.1, 0.3, 0.2});
    CHECK(q.median == doctest::Approx(0.25));
    CHECK(q.min == 0.1);
    CHECK(q.max == 0.4);
    CHECK(q.q1 == doctest::Approx(0.175));
    CHECK(q.q3 == doctest::Approx(0.325));
    CHECK(median({3.0}) == 3.0);
    CHECK(median({5.0, 1.0, 3.0}) == 3.0);
    CHECK_THROWS_AS(median({}), UsageError);
}

TEST_CASE("freq-guided training reduces to the baseline") {
    const Dataset d = sine_mix(80);
    BlsConfig cfg;
    cfg.feature_nodes = 4;
    cfg.enhancement_nodes = 5;
    cfg.lambda = 1e-8;
    const auto m0 = train_bls_freq_guided(d, cfg, IntervalSchedule::constant(1.0), 0, 3);
    CHECK(m0.output_weights == train_bls(d, cfg, 3).output_weights);

    auto plain = train_bls(d, cfg, 3);
    for (Index k = 1; k <= 4; ++k) plain = grow_bls(plain, d, cfg, k);
    const auto guided = train_bls_freq_guided(d, cfg, IntervalSchedule::constant(1.0), 4, 3);
    CHECK(guided.output_weights == plain.output_weights);

    const auto sched = IntervalSchedule::geometric(1.0, 1.4, 16.0);
    const auto g = train_bls_freq_guided(d, cfg, sched, 4, 3);
    REQUIRE(g.enhancement_groups.size() == 5);
    CHECK(g.enhancement_groups[0].interval_bound == 1.0);
    for (Index k = 1; k <= 4; ++k) {
        CHECK(g.enhancement_groups[k].interval_bound == sched.at(k));
        CHECK(g.enhancement_groups[k].weights.cwiseAbs().maxCoeff() <= sched.at(k));
    }
    CHECK_THROWS_AS(train_bls_freq_guided(d, cfg, sched, -1, 3), ConfigError);
}

TEST_CASE("comparison with identical arms gives identical vectors") {
    const Split s = split(sine_mix(120), 0.8, 1);
    BlsConfig cfg;
    cfg.feature_nodes = 5;
    cfg.enhancement_nodes = 10;
    CompareOptions opts;
    opts.guided_schedule = opts.fixed_schedule;
    opts.runs = 2;
    opts.growth_steps = 3;
    opts.metric = Metric::negative_rmse;
    const auto r = compare_methods(s.train, s.test, cfg, opts);
    CHECK(r.runs() == 2);
    CHECK(r.accuracies_fixed == r.accuracies_guided);
    CHECK(r.guided_wins() == 0);
    CHECK(r.seeds == std::vector<std::uint64_t>{1, 2});
    const std::string csv = r.to_csv();
    CHECK(csv.rfind("run,arm,accuracy\n", 0) == 0);
    CHECK(r.summary_json().find("\"median\"") != std::string::npos);

    opts.jobs = 2;
    const auto par = compare_methods(s.train, s.test, cfg, opts);
    CHECK(par.to_csv() == csv);

    opts.runs = 1;
    CHECK_THROWS_AS(compare_methods(s.train, s.test, cfg, opts), ConfigError);
}

TEST_CASE("guided schedule beats the fixed interval on sin(x) + sin(8x)" * doctest::timeout(120)) {
    const Split s = split(sine_mix(400), 0.8, 1);
    BlsConfig cfg;
    cfg.feature_nodes = 5;
    cfg.feature_activation = Activation::identity;
    cfg.enhancement_nodes = 10;
    cfg.lambda = 0.0;
    CompareOptions opts;
    opts.runs = 30;
    opts.metric = Metric::negative_rmse;
    const auto r = compare_methods(s.train, s.test, cfg, opts);
    MESSAGE("guided wins " << r.guided_wins() << " of 30; median -rmse fixed " << r.fixed_summary.median
                           << " guided " << r.guided_summary.median);
    CHECK(r.guided_wins() >= 18);
    CHECK(r.guided_summary.median > r.fixed_summary.median);
}
