// Command-line front end: synthetic data, preprocessing, training,
// reconstruction, evaluation, coefficient sweeps, and profile regression.
// Exit codes: 0 success, 1 usage error, 2 data/config error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppg2ecg/ppg2ecg.hpp"

namespace {

using namespace ppg2ecg;
using nlohmann::json;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scheme;
    bool quiet = false;
};

void info(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::fprintf(stderr, "%s\n", msg.c_str());
}

json read_json_file(const fs::path& p) {
    const json j = json::parse(read_text_file(p), nullptr, false);
    if (j.is_discarded()) raise(ErrorCode::ParseError, "invalid JSON: " + p.string());
    return j;
}

PipelineConfig pipeline_config(const std::string& path, const GlobalOpts& g) {
    PipelineConfig cfg;
    if (!path.empty()) {
        const json j = read_json_file(path);
        if (j.contains("scheme")) cfg.scheme = scheme_from_name(j["scheme"].get<std::string>());
        if (j.contains("L")) cfg.L = j["L"].get<std::size_t>();
        if (j.contains("L_x")) cfg.l_x = j["L_x"].get<std::size_t>();
        if (j.contains("L_y")) cfg.l_y = j["L_y"].get<std::size_t>();
        if (j.contains("lambda_detrend")) cfg.lambda_detrend = j["lambda_detrend"].get<double>();
        if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
        if (j.contains("k")) cfg.k = j["k"].get<Index>();
        if (j.contains("train_fraction")) cfg.train_fraction = j["train_fraction"].get<double>();
        if (j.contains("peak_source"))
            cfg.peak_source = peak_source_from_name(j["peak_source"].get<std::string>());
    }
    if (g.scheme) cfg.scheme = scheme_from_name(*g.scheme);
    cfg.validate();
    return cfg;
}

struct SynthJob {
    SynthConfig cfg;
    std::optional<double> age, weight;
    std::size_t count = 1;
};

SynthJob synth_job(const std::string& path, const GlobalOpts& g) {
    SynthJob job;
    const json j = read_json_file(path);
    auto& c = job.cfg;
    if (j.contains("fs")) c.fs = j["fs"].get<double>();
    if (j.contains("duration_s")) c.duration_s = j["duration_s"].get<double>();
    if (j.contains("hr_mean")) c.hr_mean = j["hr_mean"].get<double>();
    if (j.contains("hr_jitter")) c.hr_jitter = j["hr_jitter"].get<double>();
    if (j.contains("coupling")) {
        const auto name = j["coupling"].get<std::string>();
        if (name == "template")
            c.coupling = SynthConfig::Coupling::Template;
        else if (name == "linear_dct")
            c.coupling = SynthConfig::Coupling::LinearDct;
        else
            raise(ErrorCode::InvalidConfig, "unknown coupling: " + name);
    }
    if (j.contains("noise_std")) c.noise_std = j["noise_std"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("ppg_delay")) c.ppg_delay = j["ppg_delay"].get<Index>();
    if (j.contains("shape_variation")) c.shape_variation = j["shape_variation"].get<double>();
    if (j.contains("band_lo")) c.band_lo = j["band_lo"].get<std::size_t>();
    if (j.contains("band_hi")) c.band_hi = j["band_hi"].get<std::size_t>();
    if (j.contains("ecg_coeffs")) c.ecg_coeffs = j["ecg_coeffs"].get<std::size_t>();
    if (j.contains("ecg_variation_fraction"))
        c.ecg_variation_fraction = j["ecg_variation_fraction"].get<double>();
    if (j.contains("mid_band_fraction"))
        c.mid_band_fraction = j["mid_band_fraction"].get<double>();
    if (j.contains("age")) job.age = j["age"].get<double>();
    if (j.contains("weight")) job.weight = j["weight"].get<double>();
    if (j.contains("count")) job.count = j["count"].get<std::size_t>();
    if (job.count < 1) raise(ErrorCode::InvalidConfig, "count must be >= 1");
    if (g.seed) c.seed = *g.seed;
    return job;
}

void cmd_synth(const std::string& cfg_path, const std::string& out_dir, const GlobalOpts& g) {
    const SynthJob job = synth_job(cfg_path, g);
    for (std::size_t i = 0; i < job.count; ++i) {
        SynthConfig c = job.cfg;
        c.seed = job.cfg.seed + i;
        SynthOutput o = generate(c);
        o.session.age = job.age;
        o.session.weight = job.weight;
        const fs::path dir = job.count == 1 ? fs::path(out_dir) : fs::path(out_dir) / o.session.id;
        write_session(dir, o.session);
        info(g, "wrote " + dir.string() + " (" + std::to_string(o.truth.cycle_count)
                    + " cycles, " + std::to_string(o.session.ppg.size()) + " samples)");
    }
}

void cmd_preprocess(const std::string& in_dir, const std::string& cfg_path,
                    const std::string& out_dir, const GlobalOpts& g) {
    const PipelineConfig cfg = pipeline_config(cfg_path, g);
    const Session s = ingest(in_dir);
    const CyclePairSet cs = preprocess_session(s, cfg);
    write_cycles(out_dir, cs);
    info(g, "wrote " + out_dir + " (" + std::to_string(cs.cycle_count()) + " cycles, scheme "
                + scheme_name(cs.scheme) + ")");
}

void cmd_train(const std::string& in_dir, const std::string& cfg_path,
               const std::string& model_path, const GlobalOpts& g) {
    const PipelineConfig cfg = pipeline_config(cfg_path, g);
    const Session s = ingest(in_dir);
    const SubjectRun run = run_subject_dependent(s, cfg);
    save_model(model_path, run.model);
    info(g, "wrote " + model_path + " (trained on " + std::to_string(run.n_train) + " of "
                + std::to_string(run.n_train + run.n_test) + " cycles)");
}

void cmd_reconstruct(const std::string& in_dir, const std::string& model_path,
                     const std::string& out_dir, const GlobalOpts& g) {
    const TransformModel m = load_model(model_path);
    PipelineConfig cfg;
    cfg.scheme = m.scheme;
    cfg.L = m.L;
    cfg.l_x = m.l_x;
    cfg.l_y = m.l_y;
    cfg.lambda_detrend = m.lambda_detrend;
    cfg.gamma = m.gamma;
    cfg.train_fraction = m.train_fraction;
    const Session s = ingest(in_dir);
    const SessionSpectra spectra(preprocess_session(s, cfg), cfg.L);
    const SubjectRun run = run_with_model(spectra, m);

    std::string csv = "index,y_hat,y_ref\n";
    for (std::size_t i = 0; i < run.reconstruction.size(); ++i)
        csv += std::to_string(i) + ',' + format_g17(run.reconstruction[i]) + ','
               + format_g17(run.reference[i]) + '\n';
    write_text_file(fs::path(out_dir) / "reconstruction.csv", csv);
    info(g, "wrote " + out_dir + "/reconstruction.csv (" + std::to_string(run.n_test)
                + " test cycles)");
}

fs::path plot_csv_path(const fs::path& report) {
    fs::path p = report;
    p.replace_extension(".csv");
    if (p == report) p += ".plot.csv";
    return p;
}

void cmd_evaluate(const std::vector<std::string>& in_dirs, const std::string& cfg_path,
                  const std::string& report_path, const GlobalOpts& g) {
    const PipelineConfig cfg = pipeline_config(cfg_path, g);
    std::vector<ReportRow> rows;
    for (const auto& dir : in_dirs) {
        const Session s = ingest(dir);
        const SubjectRun run = run_subject_dependent(s, cfg);
        rows.push_back({metrics_of(run, cfg.scheme, cfg.l_x, s.id), s.age, s.weight});
    }
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.metrics.session_id < b.metrics.session_id;
    });
    std::optional<AggregateStats> agg;
    if (rows.size() >= 2) {
        std::vector<SessionMetrics> ms;
        for (const auto& r : rows) ms.push_back(r.metrics);
        agg = aggregate(ms);
    }
    write_json_g17(report_path, report_json(rows, agg));
    write_plot_csv(plot_csv_path(report_path), rows);
    info(g, "wrote " + report_path + " (" + std::to_string(rows.size()) + " sessions)");
}

std::vector<std::size_t> parse_grid(const std::string& spec) {
    std::size_t lo = 0, step = 0, hi = 0;
    char tail = '\0';
    if (std::sscanf(spec.c_str(), "%zu:%zu:%zu%c", &lo, &step, &hi, &tail) != 3 || lo < 1
        || step < 1 || hi < lo)
        throw CLI::ValidationError("--grid", "expected lo:step:hi with 1 <= lo <= hi");
    std::vector<std::size_t> grid;
    for (std::size_t v = lo; v <= hi; v += step) grid.push_back(v);
    return grid;
}

void cmd_sweep(const std::vector<std::string>& in_dirs, const std::string& grid_spec,
               const std::string& cfg_path, const std::string& report_path,
               const GlobalOpts& g) {
    const PipelineConfig cfg = pipeline_config(cfg_path, g);
    const auto grid = parse_grid(grid_spec);
    std::vector<ReportRow> rows;
    for (const auto& dir : in_dirs) {
        const Session s = ingest(dir);
        const SessionSpectra spectra(preprocess_session(s, cfg), cfg.L);
        for (const auto& m : sweep_lx(spectra, grid, cfg, s.id))
            rows.push_back({m, s.age, s.weight});
    }
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.metrics.session_id, a.metrics.l_x)
               < std::tie(b.metrics.session_id, b.metrics.l_x);
    });
    json j;
    j["sweep"] = json::array();
    for (const auto& r : rows) j["sweep"].push_back(metrics_json(r.metrics));
    write_json_g17(report_path, j);
    write_plot_csv(plot_csv_path(report_path), rows);
    info(g, "wrote " + report_path + " (" + std::to_string(rows.size()) + " grid points)");
}

void cmd_profile_test(const std::string& report_path, const std::string& out_path,
                      const GlobalOpts& g) {
    const json rep = read_json_file(report_path);
    if (!rep.contains("sessions"))
        raise(ErrorCode::ParseError, "report lacks a sessions block: " + report_path);
    std::vector<ProfileRow> rrmse_rows, rho_rows;
    for (const auto& s : rep["sessions"]) {
        if (!s.contains("age") || !s.contains("weight")) continue;
        const double age = s["age"].get<double>();
        const double weight = s["weight"].get<double>();
        rrmse_rows.push_back({age, weight, s["rrmse"].get<double>()});
        rho_rows.push_back({age, weight, s["rho"].get<double>()});
    }
    json out;
    out["n"] = rrmse_rows.size();
    out["rrmse"] = profile_json(profile_regression(rrmse_rows));
    out["rho"] = profile_json(profile_regression(rho_rows));
    write_json_g17(out_path, out);
    info(g, "wrote " + out_path + " (" + std::to_string(rrmse_rows.size()) + " sessions)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PPG-to-ECG reconstruction via per-subject DCT-domain ridge regression"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "override the generator seed");
    app.add_option("--scheme", g.scheme, "cycle segmentation scheme")
        ->check(CLI::IsMember({"SR", "R2R"}));
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::string synth_cfg, synth_out;
    auto* c_synth = app.add_subcommand("synth", "emit synthetic session(s)");
    c_synth->add_option("--config", synth_cfg)->required()->check(CLI::ExistingFile);
    c_synth->add_option("--out", synth_out)->required();

    std::string pre_in, pre_cfg, pre_out;
    auto* c_pre = app.add_subcommand("preprocess", "segment and normalize one session");
    c_pre->add_option("--in", pre_in)->required();
    c_pre->add_option("--config", pre_cfg)->check(CLI::ExistingFile);
    c_pre->add_option("--out", pre_out)->required();

    std::string train_in, train_cfg, train_model;
    auto* c_train = app.add_subcommand("train", "fit the subject-dependent model");
    c_train->add_option("--in", train_in)->required();
    c_train->add_option("--config", train_cfg)->check(CLI::ExistingFile);
    c_train->add_option("--model", train_model)->required();

    std::string rec_in, rec_model, rec_out;
    auto* c_rec = app.add_subcommand("reconstruct", "reconstruct the test split");
    c_rec->add_option("--in", rec_in)->required();
    c_rec->add_option("--model", rec_model)->required()->check(CLI::ExistingFile);
    c_rec->add_option("--out", rec_out)->required();

    std::vector<std::string> eval_in;
    std::string eval_cfg, eval_report;
    auto* c_eval = app.add_subcommand("evaluate", "per-session metrics and aggregate");
    c_eval->add_option("--in", eval_in)->required()->expected(-1);
    c_eval->add_option("--config", eval_cfg)->check(CLI::ExistingFile);
    c_eval->add_option("--report", eval_report)->required();

    std::vector<std::string> sweep_in;
    std::string sweep_grid = "2:2:40", sweep_cfg, sweep_report;
    auto* c_sweep = app.add_subcommand("sweep", "metrics across a coefficient-count grid");
    c_sweep->add_option("--in", sweep_in)->required()->expected(-1);
    c_sweep->add_option("--grid", sweep_grid, "lo:step:hi")->capture_default_str();
    c_sweep->add_option("--config", sweep_cfg)->check(CLI::ExistingFile);
    c_sweep->add_option("--report", sweep_report)->required();

    std::string prof_report, prof_out;
    auto* c_prof = app.add_subcommand("profile-test", "age/weight regression over a report");
    c_prof->add_option("--report", prof_report)->required()->check(CLI::ExistingFile);
    c_prof->add_option("--out", prof_out)->required();

    try {
        app.parse(argc, argv);
        if (c_synth->parsed()) cmd_synth(synth_cfg, synth_out, g);
        if (c_pre->parsed()) cmd_preprocess(pre_in, pre_cfg, pre_out, g);
        if (c_train->parsed()) cmd_train(train_in, train_cfg, train_model, g);
        if (c_rec->parsed()) cmd_reconstruct(rec_in, rec_model, rec_out, g);
        if (c_eval->parsed()) cmd_evaluate(eval_in, eval_cfg, eval_report, g);
        if (c_sweep->parsed()) cmd_sweep(sweep_in, sweep_grid, sweep_cfg, sweep_report, g);
        if (c_prof->parsed()) cmd_profile_test(prof_report, prof_out, g);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
