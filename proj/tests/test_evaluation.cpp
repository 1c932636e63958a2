#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "ppg2ecg/ppg2ecg.hpp"

using namespace ppg2ecg;

TEST_CASE("rrmse on simple vectors") {
    const std::vector<double> y{1.0, 0.0, 1.0, 0.0};
    CHECK(rrmse(y, y) == 0.0);
    CHECK(rrmse(y, std::vector<double>(4, 0.0)) == Catch::Approx(1.0).margin(1e-12));

    const std::vector<double> y34{3.0, 4.0};
    CHECK(rrmse(y34, std::vector<double>{0.0, 0.0}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(rrmse(y34, std::vector<double>{3.0, 0.0}) == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("rrmse against a scaled copy equals the scale gap") {
    std::mt19937_64 eng(109);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(64);
    for (auto& v : y) v = g(eng);
    for (double a : {-1.0, 0.0, 0.5, 1.0, 1.75}) {
        std::vector<double> scaled(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) scaled[i] = a * y[i];
        CHECK(rrmse(y, scaled) == Catch::Approx(std::fabs(1.0 - a)).margin(1e-12));
    }
}

TEST_CASE("rrmse rejects a zero reference") {
    try {
        rrmse(std::vector<double>(4, 0.0), std::vector<double>(4, 1.0));
        FAIL("expected ZeroReference");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroReference);
    }
    CHECK_THROWS_AS(rrmse(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("pearson identities") {
    std::mt19937_64 eng(113);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(50);
    for (auto& v : x) v = g(eng);
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];

    CHECK(std::fabs(pearson(x, x) - 1.0) <= 1e-12);
    CHECK(std::fabs(pearson(x, neg) + 1.0) <= 1e-12);
}

TEST_CASE("pearson is invariant under positive affine maps of either argument") {
    std::mt19937_64 eng(127);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(80), y(80);
    for (std::size_t i = 0; i < 80; ++i) {
        x[i] = g(eng);
        y[i] = 0.6 * x[i] + 0.4 * g(eng);
    }
    const double base = pearson(x, y);
    std::vector<double> ax(80), by(80);
    for (std::size_t i = 0; i < 80; ++i) {
        ax[i] = 2.5 * x[i] - 7.0;
        by[i] = 0.125 * y[i] + 3.0;
    }
    CHECK(std::fabs(pearson(ax, y) - base) <= 1e-12);
    CHECK(std::fabs(pearson(x, by) - base) <= 1e-12);
    CHECK(std::fabs(pearson(ax, by) - base) <= 1e-12);
}

TEST_CASE("pearson rejects constant input") {
    try {
        pearson(std::vector<double>(10, 2.0), std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
        FAIL("expected ConstantInput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConstantInput);
    }
}

namespace {

SessionMetrics make_metrics(double rrmse_v, double rho_v) {
    SessionMetrics m;
    m.rrmse = rrmse_v;
    m.rho = rho_v;
    return m;
}

}  // namespace

TEST_CASE("aggregate of identical sessions has zero spread") {
    const std::vector<SessionMetrics> ms(4, make_metrics(0.1, 0.98));
    const AggregateStats a = aggregate(ms);
    CHECK(a.n == 4);
    CHECK(a.mean_rrmse == Catch::Approx(0.1).margin(1e-15));
    CHECK(a.std_rrmse == 0.0);
    CHECK(a.std_rho == 0.0);
}

TEST_CASE("two-point aggregate matches the closed form") {
    const AggregateStats a = aggregate({make_metrics(0.1, 0.9), make_metrics(0.2, 1.0)});
    CHECK(a.mean_rho == Catch::Approx(0.95).margin(1e-15));
    CHECK(a.std_rho == Catch::Approx(0.0707106781186547).margin(1e-12));
    CHECK(a.mean_rrmse == Catch::Approx(0.15).margin(1e-15));
}

TEST_CASE("aggregate mean is permutation invariant") {
    std::vector<SessionMetrics> ms;
    for (int i = 0; i < 9; ++i)
        ms.push_back(make_metrics(0.05 + 0.01 * i, 0.99 - 0.003 * i));
    const AggregateStats before = aggregate(ms);
    std::mt19937_64 eng(131);
    std::shuffle(ms.begin(), ms.end(), eng);
    const AggregateStats after = aggregate(ms);
    // summation order changes the result only at rounding level
    CHECK(after.mean_rrmse == Catch::Approx(before.mean_rrmse).margin(1e-14));
    CHECK(after.mean_rho == Catch::Approx(before.mean_rho).margin(1e-14));
}

TEST_CASE("aggregate needs two sessions") {
    try {
        aggregate({make_metrics(0.1, 0.9)});
        FAIL("expected TooFewSessions");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewSessions);
    }
}

TEST_CASE("regularized incomplete beta matches closed forms") {
    // I_x(1, b) = 1 - (1-x)^b and I_x(a, 1) = x^a.
    for (double x : {0.05, 0.3, 0.7, 0.95}) {
        for (double b : {1.0, 2.5, 7.0}) {
            CHECK(regularized_incomplete_beta(1.0, b, x)
                  == Catch::Approx(1.0 - std::pow(1.0 - x, b)).margin(1e-10));
            CHECK(regularized_incomplete_beta(b, 1.0, x)
                  == Catch::Approx(std::pow(x, b)).margin(1e-10));
        }
    }
    CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("regularized incomplete beta matches the binomial-tail oracle") {
    for (int a : {1, 2, 5, 9}) {
        for (int b : {1, 3, 8}) {
            for (double x : {0.1, 0.37, 0.5, 0.81}) {
                CHECK(regularized_incomplete_beta(a, b, x)
                      == Catch::Approx(oracle::reg_inc_beta_int(a, b, x)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("regularized incomplete beta matches quadrature at F-test shapes") {
    // a = d2/2 = 19, b = d1/2 = 1.5 is the shape used for n = 42 sessions.
    for (double x : {0.2, 0.5, 0.8, 0.9}) {
        CHECK(regularized_incomplete_beta(19.0, 1.5, x)
              == Catch::Approx(oracle::reg_inc_beta_quad(19.0, 1.5, x)).margin(1e-10));
    }
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    for (double x : {0.15, 0.6, 0.85}) {
        CHECK(regularized_incomplete_beta(4.5, 2.25, x)
              == Catch::Approx(1.0 - regularized_incomplete_beta(2.25, 4.5, 1.0 - x))
                     .margin(1e-12));
    }
}

TEST_CASE("F-tail p-value is monotone decreasing in the statistic") {
    double prev = 1.1;
    for (double f : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0}) {
        const double p = f_upper_tail(f, 3.0, 38.0);
        CHECK(p <= prev);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK(f_upper_tail(0.0, 3.0, 38.0) == 1.0);
}

namespace {

std::vector<ProfileRow> varied_profiles(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> age(18.0, 80.0), weight(45.0, 110.0);
    std::vector<ProfileRow> rows(n);
    for (auto& r : rows) {
        r.age = age(eng);
        r.weight = weight(eng);
    }
    return rows;
}

}  // namespace

TEST_CASE("profile regression of a constant metric explains nothing") {
    auto rows = varied_profiles(12, 137);
    for (auto& r : rows) r.metric = 0.42;
    const ProfileRegressionResult res = profile_regression(rows);
    CHECK(res.r_squared == 0.0);
    CHECK(res.f_statistic == 0.0);
    CHECK(res.p_value == 1.0);
}

TEST_CASE("profile regression recovers an exact age effect") {
    auto rows = varied_profiles(15, 139);
    for (auto& r : rows) r.metric = 2.0 + 0.1 * r.age;
    const ProfileRegressionResult res = profile_regression(rows);
    CHECK(res.r_squared >= 1.0 - 1e-10);
    CHECK(res.p_value == 0.0);
    CHECK(res.coefficients[0] == Catch::Approx(2.0).margin(1e-6));
    CHECK(res.coefficients[1] == Catch::Approx(0.1).margin(1e-8));
    CHECK(res.coefficients[2] == Catch::Approx(0.0).margin(1e-8));
    CHECK(res.coefficients[3] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("profile regression matches an independent OLS solve") {
    auto rows = varied_profiles(25, 149);
    std::mt19937_64 eng(151);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& r : rows)
        r.metric = 0.3 - 0.002 * r.age + 0.001 * r.weight + 0.05 * g(eng);
    const ProfileRegressionResult res = profile_regression(rows);

    const std::size_t n = rows.size();
    Matrix x(n, 4), y(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = rows[i].age;
        x(i, 2) = rows[i].weight;
        x(i, 3) = rows[i].age * rows[i].weight;
        y(i, 0) = rows[i].metric;
    }
    const Matrix beta = oracle::dense_solve(gram(x), cross_product(x, y));
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(res.coefficients[j] == Catch::Approx(beta(j, 0)).margin(1e-8));

    double mean = 0.0;
    for (const auto& r : rows) mean += r.metric;
    mean /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < 4; ++j) fit += x(i, j) * beta(j, 0);
        ss_res += (y(i, 0) - fit) * (y(i, 0) - fit);
        ss_tot += (y(i, 0) - mean) * (y(i, 0) - mean);
    }
    CHECK(res.r_squared == Catch::Approx(1.0 - ss_res / ss_tot).margin(1e-9));
}

TEST_CASE("degenerate profile designs are rejected") {
    auto rows = varied_profiles(10, 157);
    for (auto& r : rows) {
        r.age = 50.0;  // constant age collapses two design columns
        r.metric = r.weight;
    }
    try {
        profile_regression(rows);
        FAIL("expected RankDeficientDesign");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficientDesign);
    }

    try {
        profile_regression(varied_profiles(4, 163));
        FAIL("expected TooFewSessions");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewSessions);
    }
}

TEST_CASE("sweep reuses preprocessing and matches individual runs") {
    SynthConfig scfg;
    scfg.fs = 300.0;
    scfg.duration_s = 60.0;
    scfg.hr_mean = 70.0;
    scfg.hr_jitter = 0.02;
    scfg.coupling = SynthConfig::Coupling::LinearDct;
    scfg.seed = 19;
    const SynthOutput out = generate(scfg);

    PipelineConfig cfg;
    const SessionSpectra spectra(preprocess_session(out.session, cfg), cfg.L);
    const auto swept = sweep_lx(spectra, {2, 12}, cfg, "s");
    REQUIRE(swept.size() == 2);
    CHECK(swept[0].l_x == 2);
    CHECK(swept[1].l_x == 12);

    for (const auto& m : swept) {
        PipelineConfig one = cfg;
        one.l_x = m.l_x;
        const SubjectRun run = run_from_spectra(spectra, one);
        CHECK(m.rrmse == rrmse(run.reference, run.reconstruction));
        CHECK(m.rho == pearson(run.reference, run.reconstruction));
    }
}

TEST_CASE("sweeping the full length equals the untruncated run") {
    SynthConfig scfg;
    scfg.fs = 120.0;
    scfg.duration_s = 60.0;
    scfg.hr_mean = 70.0;
    scfg.hr_jitter = 0.02;
    scfg.seed = 23;
    const SynthOutput out = generate(scfg);

    PipelineConfig cfg;
    cfg.L = 120;
    cfg.l_y = 120;  // keep L_x <= L_y valid across the whole grid
    const SessionSpectra spectra(preprocess_session(out.session, cfg), cfg.L);
    const auto swept = sweep_lx(spectra, {cfg.L}, cfg, "s");
    REQUIRE(swept.size() == 1);

    PipelineConfig full = cfg;
    full.l_x = cfg.L;
    const SubjectRun run = run_from_spectra(spectra, full);
    CHECK(swept[0].rrmse == rrmse(run.reference, run.reconstruction));
    CHECK(swept[0].rho == pearson(run.reference, run.reconstruction));

    PipelineConfig bad = cfg;
    CHECK_THROWS_AS(sweep_lx(spectra, {cfg.L + 1}, bad, "s"), Error);
}
