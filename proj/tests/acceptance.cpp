// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line (criterion 3 may report SKIP when no dataset export is available);
// the process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracles.hpp"
#include "ppg2ecg/ppg2ecg.hpp"

using namespace ppg2ecg;
using nlohmann::json;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!ok) ++failures;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ppg2ecg-acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// The noiseless oracle session: 600 one-second cycles with an exact linear
// DCT coupling and a 42-sample pulse transit delay.
const char* kOracleSynth =
    "{\"fs\": 300, \"duration_s\": 600, \"hr_mean\": 60, \"hr_jitter\": 0,"
    " \"coupling\": \"linear_dct\", \"noise_std\": 0, \"seed\": 7, \"ppg_delay\": 42}\n";

void criterion_1() {
    const fs::path dir = fresh_dir("c1");
    write_text_file(dir / "synth.json", kOracleSynth);

    const auto t0 = std::chrono::steady_clock::now();
    bool ok = run_cli("synth --config " + (dir / "synth.json").string() + " --out "
                      + (dir / "sess").string())
              == 0;
    ok = ok
         && run_cli("train --in " + (dir / "sess").string() + " --model "
                    + (dir / "model.json").string())
                == 0;
    ok = ok
         && run_cli("reconstruct --in " + (dir / "sess").string() + " --model "
                    + (dir / "model.json").string() + " --out " + (dir / "rec").string())
                == 0;
    ok = ok
         && run_cli("evaluate --in " + (dir / "sess").string() + " --report "
                    + (dir / "report.json").string())
                == 0;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    double rho = 0.0, rr = 1.0;
    if (ok) {
        const json r = json::parse(read_text_file(dir / "report.json"));
        rho = r["sessions"][0]["rho"].get<double>();
        rr = r["sessions"][0]["rrmse"].get<double>();
    }
    ok = ok && rho >= 0.999 && rr <= 0.05 && seconds < 10.0;
    report(1, ok,
           "noiseless oracle end-to-end: rho=" + fmt(rho) + " (>=0.999), rrmse=" + fmt(rr)
               + " (<=0.05), " + fmt(seconds) + " s (<10)");
}

void criterion_2() {
    const fs::path dir = fresh_dir("c2");
    // Cycles are unit-variance by construction, so noise_std=0.1 is 20 dB SNR.
    write_text_file(dir / "synth.json",
                    "{\"fs\": 300, \"duration_s\": 600, \"hr_mean\": 60, \"hr_jitter\": 0,"
                    " \"coupling\": \"linear_dct\", \"noise_std\": 0.1, \"seed\": 7,"
                    " \"ppg_delay\": 42}\n");
    bool ok = run_cli("synth --config " + (dir / "synth.json").string() + " --out "
                      + (dir / "sess").string())
              == 0;
    ok = ok
         && run_cli("evaluate --in " + (dir / "sess").string() + " --report "
                    + (dir / "report.json").string())
                == 0;
    double rho = 0.0;
    if (ok) {
        const json r = json::parse(read_text_file(dir / "report.json"));
        rho = r["sessions"][0]["rho"].get<double>();
    }
    ok = ok && rho >= 0.95;
    report(2, ok, "20 dB oracle: rho=" + fmt(rho) + " (>=0.95)");
}

void criterion_3() {
    const char* root = std::getenv("CAPNOBASE_DIR");
    if (root == nullptr || *root == '\0') {
        report(3, true, "SKIP - dataset reproduction (CAPNOBASE_DIR not set)");
        return;
    }
    std::vector<SessionMetrics> ms;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    try {
        for (const auto& d : dirs) {
            const Session s = ingest(d);
            const PipelineConfig cfg;  // library defaults
            const SubjectRun run = run_subject_dependent(s, cfg);
            ms.push_back(metrics_of(run, cfg.scheme, cfg.l_x, s.id));
        }
        if (ms.size() < 2) {
            report(3, false, "dataset reproduction: fewer than 2 ingestible sessions");
            return;
        }
        const AggregateStats agg = aggregate(ms);
        const bool ok = agg.mean_rho >= 0.95 && agg.mean_rrmse <= 0.20;
        report(3, ok,
               "dataset reproduction over " + std::to_string(ms.size())
                   + " sessions: mean rho=" + fmt(agg.mean_rho) + " (>=0.95), mean rrmse="
                   + fmt(agg.mean_rrmse) + " (<=0.20)");
    } catch (const Error& e) {
        report(3, false, std::string("dataset reproduction failed: ") + e.what());
    }
}

void criterion_4() {
    // Short cycles (hr=180) place the 4..7 coefficient band at stream
    // frequencies the detrender passes, so the coupling is exactly
    // 8-coefficient-supported end to end.
    SynthConfig scfg;
    scfg.fs = 300.0;
    scfg.duration_s = 200.0;
    scfg.hr_mean = 180.0;
    scfg.hr_jitter = 0.0;
    scfg.coupling = SynthConfig::Coupling::LinearDct;
    scfg.noise_std = 0.0;
    scfg.seed = 11;
    scfg.ppg_delay = 42;
    scfg.band_lo = 4;
    scfg.band_hi = 7;
    scfg.ecg_coeffs = 40;
    const SynthOutput out = generate(scfg);

    PipelineConfig cfg;
    const SessionSpectra spectra(preprocess_session(out.session, cfg), cfg.L);
    std::vector<std::size_t> grid;
    for (std::size_t g = 8; g <= 40; ++g) grid.push_back(g);
    const auto swept = sweep_lx(spectra, grid, cfg, out.session.id);

    double lo = 2.0, hi = -2.0;
    for (const auto& m : swept) {
        lo = std::min(lo, m.rho);
        hi = std::max(hi, m.rho);
    }
    const double spread = hi - lo;
    report(4, spread <= 0.005,
           "sweep saturation over L_x in [8,40]: max-min rho=" + fmt(spread) + " (<=0.005)");
}

void criterion_5() {
    // (a) banded detrend vs dense solve at T = 200.
    std::mt19937_64 eng(211);
    std::normal_distribution<double> g(0.0, 1.0);
    TimeSeries ts;
    ts.fs = 100.0;
    ts.samples.resize(200);
    for (auto& v : ts.samples) v = g(eng);
    const TimeSeries banded = detrend(ts, 500.0);
    Matrix rhs(200, 1);
    for (std::size_t i = 0; i < 200; ++i) rhs(i, 0) = ts.samples[i];
    const Matrix trend = oracle::dense_solve(oracle::detrend_system(200, 500.0), rhs);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
        const double want = ts.samples[i] - trend(i, 0);
        num += (banded.samples[i] - want) * (banded.samples[i] - want);
        den += want * want;
    }
    const double detrend_err = std::sqrt(num / den);

    // (b) DCT basis orthonormality at L = 64.
    const Matrix b = DctPlan(64).basis();
    const Matrix gm = matmul(transpose(b), b);
    double ortho = 0.0;
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j)
            ortho = std::max(ortho, std::fabs(gm(i, j) - (i == j ? 1.0 : 0.0)));

    // (c) ridge vs dense normal equations.
    Matrix x(100, 20), y(100, 20);
    for (auto& v : x.data()) v = g(eng);
    for (auto& v : y.data()) v = g(eng);
    const TransformModel m = train_ridge(x, y, 10.0);
    Matrix a = gram(x);
    for (std::size_t i = 0; i < 20; ++i) a(i, i) += 10.0;
    const Matrix want = oracle::dense_solve(a, cross_product(x, y));
    double rnum = 0.0, rden = 0.0;
    for (std::size_t i = 0; i < want.data().size(); ++i) {
        const double d = m.f_star.data()[i] - want.data()[i];
        rnum += d * d;
        rden += want.data()[i] * want.data()[i];
    }
    const double ridge_err = std::sqrt(rnum / rden);

    const bool ok = detrend_err <= 1e-10 && ortho < 1e-10 && ridge_err <= 1e-9;
    report(5, ok,
           "numerical oracles: detrend=" + fmt(detrend_err) + " (<=1e-10), dct-ortho="
               + fmt(ortho) + " (<1e-10), ridge=" + fmt(ridge_err) + " (<=1e-9)");
}

void criterion_6() {
    std::mt19937_64 eng(223);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(128), x(128), neg(128), affine(128);
    for (std::size_t i = 0; i < 128; ++i) {
        y[i] = g(eng);
        x[i] = g(eng);
        neg[i] = -x[i];
        affine[i] = 2.0 * x[i] + 5.0;
    }
    const std::vector<double> zeros(128, 0.0);
    const double tol = 1e-12;
    const bool ok = rrmse(y, y) <= tol && std::fabs(rrmse(y, zeros) - 1.0) <= tol
                    && std::fabs(pearson(x, x) - 1.0) <= tol
                    && std::fabs(pearson(x, neg) + 1.0) <= tol
                    && std::fabs(pearson(x, affine) - 1.0) <= tol;
    report(6, ok, "metric identities exact within 1e-12");
}

void criterion_7() {
    std::mt19937_64 eng(227);
    std::uniform_int_distribution<Index> jitter(-40, 40);
    std::vector<Index> base;
    Index at = 1000;
    for (int i = 0; i < 30; ++i) {
        base.push_back(at);
        at += 300 + jitter(eng);
    }
    const Index ptt = 80;

    int recovered = 0;
    for (int n = -5; n <= 5; ++n) {
        std::vector<Index> sp, rp;
        if (n >= 0) {
            // PPG lags by n cycles: its train starts n beats into the ECG train.
            sp.assign(base.begin() + n, base.end());
            rp = base;
        } else {
            sp = base;
            rp.assign(base.begin() - n, base.end());
        }
        for (auto& p : sp) p += ptt;
        const int got =
            estimate_cycle_delay({sp, PeakKind::PpgSystolic}, {rp, PeakKind::EcgR}, 5);
        if (got == n) ++recovered;
    }
    report(7, recovered == 11,
           "cycle-delay recovery: " + std::to_string(recovered) + "/11 exact for n in [-5,5]");
}

void criterion_8() {
    std::mt19937_64 eng(1234);
    std::uniform_real_distribution<double> age(18.0, 80.0), weight(45.0, 110.0);
    std::normal_distribution<double> metric(0.0, 1.0);
    int hits = 0;
    const int draws = 200;
    for (int d = 0; d < draws; ++d) {
        std::vector<ProfileRow> rows(42);
        for (auto& r : rows) {
            r.age = age(eng);
            r.weight = weight(eng);
            r.metric = metric(eng);
        }
        if (profile_regression(rows).p_value < 0.05) ++hits;
    }
    const double rate = static_cast<double>(hits) / draws;
    const bool ok = rate >= 0.01 && rate <= 0.10;
    report(8, ok,
           "F-test calibration: " + std::to_string(hits) + "/200 false positives at alpha=0.05 "
               "(rate " + fmt(rate) + " in [0.01,0.10])");
}

void criterion_9() {
    const fs::path dir = fresh_dir("c9");
    write_text_file(dir / "synth.json",
                    "{\"fs\": 300, \"duration_s\": 120, \"hr_mean\": 72, \"hr_jitter\": 0.03,"
                    " \"coupling\": \"linear_dct\", \"noise_std\": 0.05, \"seed\": 42,"
                    " \"ppg_delay\": 35}\n");

    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const fs::path sub = dir / run;
        fs::create_directories(sub);
        ok = ok
             && run_cli("synth --config " + (dir / "synth.json").string() + " --out "
                        + (sub / "sess").string())
                    == 0;
        ok = ok
             && run_cli("train --in " + (sub / "sess").string() + " --model "
                        + (sub / "model.json").string())
                    == 0;
        ok = ok
             && run_cli("reconstruct --in " + (sub / "sess").string() + " --model "
                        + (sub / "model.json").string() + " --out " + (sub / "rec").string())
                    == 0;
        ok = ok
             && run_cli("evaluate --in " + (sub / "sess").string() + " --report "
                        + (sub / "report.json").string())
                    == 0;
        ok = ok
             && run_cli("sweep --in " + (sub / "sess").string() + " --grid 2:2:12 --report "
                        + (sub / "sweep.json").string())
                    == 0;
    }

    int identical = 0;
    const char* files[] = {"model.json",        "rec/reconstruction.csv", "report.json",
                           "report.csv",        "sweep.json",             "sweep.csv",
                           "sess/signals.csv",  "sess/meta.json"};
    if (ok)
        for (const char* f : files)
            if (read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f)) ++identical;
    ok = ok && identical == 8;
    report(9, ok,
           "determinism: " + std::to_string(identical) + "/8 artifacts byte-identical across "
               "two seeded runs");
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all acceptance criteria satisfied\n");
    return 0;
}
