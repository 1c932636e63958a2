#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppg2ecg/errors.hpp"
#include "ppg2ecg/evaluation.hpp"
#include "ppg2ecg/preprocess.hpp"
#include "ppg2ecg/types.hpp"

namespace ppg2ecg {

namespace fs = std::filesystem;
using nlohmann::json;

/// Fixed 17-significant-digit decimal: every double round-trips exactly and
/// every run prints the same bytes.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

/// json serializer with 17-significant-digit floats. nlohmann's dump() picks
/// the shortest representation, which is lossless but not fixed-width; report
/// bytes are part of the contract here, so numbers are pinned down.
inline void dump_g17(const json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) { out += "{}"; break; }
            out += "{\n";
            for (auto it = j.begin(); it != j.end();) {
                out += pad_in + json(it.key()).dump() + ": ";
                dump_g17(it.value(), out, depth + 1);
                if (++it != j.end()) out += ',';
                out += '\n';
            }
            out += pad + "}";
            break;
        }
        case json::value_t::array: {
            if (j.empty()) { out += "[]"; break; }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                out += pad_in;
                dump_g17(j[i], out, depth + 1);
                if (i + 1 < j.size()) out += ',';
                out += '\n';
            }
            out += pad + "]";
            break;
        }
        case json::value_t::number_float:
            out += format_g17(j.get<double>());
            break;
        default:
            out += j.dump();
    }
}

}  // namespace detail

inline std::string read_text_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(ErrorCode::ParseError, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) raise(ErrorCode::ParseError, "cannot write " + p.string());
    out << text;
}

inline void write_json_g17(const fs::path& p, const json& j) {
    std::string text;
    detail::dump_g17(j, text, 0);
    text += '\n';
    write_text_file(p, text);
}

namespace detail {

inline double parse_field(const std::string& field, std::size_t line_no) {
    const char* s = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        raise(ErrorCode::ParseError, "non-numeric field at line " + std::to_string(line_no),
              static_cast<Index>(line_no));
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

// --- session directories (signals.csv + meta.json) -----------------------

inline void write_session(const fs::path& dir, const Session& s) {
    fs::create_directories(dir);
    std::ofstream csv(dir / "signals.csv", std::ios::binary);
    if (!csv) raise(ErrorCode::ParseError, "cannot write " + (dir / "signals.csv").string());
    csv << "index,ppg,ecg\n";
    for (std::size_t i = 0; i < s.ppg.size(); ++i)
        csv << i << ',' << format_g17(s.ppg.samples[i]) << ',' << format_g17(s.ecg.samples[i])
            << '\n';

    json meta;
    meta["fs"] = s.ppg.fs;
    if (s.age) meta["age"] = *s.age;
    if (s.weight) meta["weight"] = *s.weight;
    meta["artifact_intervals"] = json::array();
    for (const auto& iv : s.artifact_mask)
        meta["artifact_intervals"].push_back({iv.start, iv.end});
    if (s.ppg_peaks) meta["ppg_peaks"] = *s.ppg_peaks;
    if (s.ecg_peaks) meta["ecg_peaks"] = *s.ecg_peaks;
    write_json_g17(dir / "meta.json", meta);
}

inline Session ingest(const fs::path& dir) {
    const fs::path csv_path = dir / "signals.csv";
    const fs::path meta_path = dir / "meta.json";
    if (!fs::exists(meta_path)) raise(ErrorCode::MissingMeta, "missing " + meta_path.string());
    if (!fs::exists(csv_path)) raise(ErrorCode::ParseError, "missing " + csv_path.string());

    const json meta = json::parse(read_text_file(meta_path), nullptr, false);
    if (meta.is_discarded())
        raise(ErrorCode::ParseError, "invalid JSON in " + meta_path.string());
    if (!meta.contains("fs")) raise(ErrorCode::MissingMeta, "meta.json lacks fs");

    Session s;
    s.id = dir.filename().string();
    const double fs_hz = meta["fs"].get<double>();
    if (fs_hz <= 0.0) raise(ErrorCode::UnitMismatch, "fs must be positive");
    s.ppg.fs = s.ecg.fs = fs_hz;
    if (meta.contains("age")) s.age = meta["age"].get<double>();
    if (meta.contains("weight")) s.weight = meta["weight"].get<double>();
    if (meta.contains("artifact_intervals"))
        for (const auto& iv : meta["artifact_intervals"])
            s.artifact_mask.push_back({iv.at(0).get<Index>(), iv.at(1).get<Index>()});
    if (meta.contains("ppg_peaks")) s.ppg_peaks = meta["ppg_peaks"].get<std::vector<Index>>();
    if (meta.contains("ecg_peaks")) s.ecg_peaks = meta["ecg_peaks"].get<std::vector<Index>>();

    std::ifstream in(csv_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line.rfind("index,ppg,ecg", 0) != 0)
                raise(ErrorCode::ParseError, "signals.csv: expected header index,ppg,ecg");
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            raise(ErrorCode::ParseError, "signals.csv: expected 3 fields at line "
                                             + std::to_string(line_no),
                  static_cast<Index>(line_no));
        detail::parse_field(fields[0], line_no);  // index column, value unused
        s.ppg.samples.push_back(detail::parse_field(fields[1], line_no));
        s.ecg.samples.push_back(detail::parse_field(fields[2], line_no));
    }
    return validate_session(std::move(s));
}

// --- model persistence ----------------------------------------------------

inline void save_model(const fs::path& file, const TransformModel& m) {
    json j;
    j["version"] = 1;
    j["scheme"] = scheme_name(m.scheme);
    j["L"] = m.L;
    j["L_x"] = m.l_x;
    j["L_y"] = m.l_y;
    j["gamma"] = m.gamma;
    j["lambda_detrend"] = m.lambda_detrend;
    j["train_fraction"] = m.train_fraction;
    j["f_star"] = m.f_star.data();  // row-major, parses back bit-exact
    write_json_g17(file, j);
}

inline TransformModel load_model(const fs::path& file) {
    const json j = json::parse(read_text_file(file), nullptr, false);
    if (j.is_discarded()) raise(ErrorCode::ParseError, "invalid model JSON: " + file.string());
    for (const char* key : {"version", "scheme", "L", "L_x", "L_y", "gamma", "lambda_detrend",
                            "f_star"})
        if (!j.contains(key))
            raise(ErrorCode::ParseError, std::string("model JSON lacks field ") + key);
    TransformModel m;
    m.scheme = scheme_from_name(j["scheme"].get<std::string>());
    m.L = j["L"].get<std::size_t>();
    m.l_x = j["L_x"].get<std::size_t>();
    m.l_y = j["L_y"].get<std::size_t>();
    m.gamma = j["gamma"].get<double>();
    m.lambda_detrend = j["lambda_detrend"].get<double>();
    if (j.contains("train_fraction")) m.train_fraction = j["train_fraction"].get<double>();
    const auto flat = j["f_star"].get<std::vector<double>>();
    if (flat.size() != m.l_x * m.l_y)
        raise(ErrorCode::ParseError, "model f_star length != L_x * L_y");
    m.f_star = Matrix(m.l_x, m.l_y);
    m.f_star.data() = flat;
    if (!m.f_star.all_finite()) raise(ErrorCode::ParseError, "model f_star has non-finite entries");
    return m;
}

// --- reports --------------------------------------------------------------

struct ReportRow {
    SessionMetrics metrics;
    std::optional<double> age;
    std::optional<double> weight;
};

inline json metrics_json(const SessionMetrics& m) {
    json j;
    j["session_id"] = m.session_id;
    j["scheme"] = scheme_name(m.scheme);
    j["l_x"] = m.l_x;
    j["rrmse"] = m.rrmse;
    j["rho"] = m.rho;
    j["n_test_cycles"] = m.n_test_cycles;
    return j;
}

inline json report_json(const std::vector<ReportRow>& rows,
                        const std::optional<AggregateStats>& agg,
                        const std::vector<SessionMetrics>& sweep = {}) {
    json j;
    j["sessions"] = json::array();
    for (const auto& row : rows) {
        json s = metrics_json(row.metrics);
        if (row.age) s["age"] = *row.age;
        if (row.weight) s["weight"] = *row.weight;
        j["sessions"].push_back(std::move(s));
    }
    if (agg) {
        j["aggregate"] = {{"n", agg->n},
                          {"mean_rrmse", agg->mean_rrmse},
                          {"std_rrmse", agg->std_rrmse},
                          {"mean_rho", agg->mean_rho},
                          {"std_rho", agg->std_rho}};
    }
    if (!sweep.empty()) {
        j["sweep"] = json::array();
        for (const auto& m : sweep) j["sweep"].push_back(metrics_json(m));
    }
    return j;
}

inline json profile_json(const ProfileRegressionResult& r) {
    json j;
    j["coefficients"] = {{"intercept", r.coefficients[0]},
                         {"age", r.coefficients[1]},
                         {"weight", r.coefficients[2]},
                         {"age_weight", r.coefficients[3]}};
    j["r_squared"] = r.r_squared;
    j["f_statistic"] = r.f_statistic;
    j["p_value"] = r.p_value;
    j["n"] = r.n;
    return j;
}

/// Plot-ready flat CSV; rows ordered as given, one per (session, L_x) point.
inline void write_plot_csv(const fs::path& file, const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << "session_id,scheme,l_x,rrmse,rho,age,weight\n";
    for (const auto& row : rows) {
        const auto& m = row.metrics;
        out << m.session_id << ',' << scheme_name(m.scheme) << ',' << m.l_x << ','
            << format_g17(m.rrmse) << ',' << format_g17(m.rho) << ','
            << (row.age ? format_g17(*row.age) : "") << ','
            << (row.weight ? format_g17(*row.weight) : "") << '\n';
    }
    write_text_file(file, out.str());
}

// --- cycle-set export (preprocess subcommand) -----------------------------

inline void write_matrix_csv(const fs::path& file, const Matrix& m) {
    std::ostringstream out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_g17(m(r, c));
        }
        out << '\n';
    }
    write_text_file(file, out.str());
}

inline void write_cycles(const fs::path& dir, const CyclePairSet& cs) {
    fs::create_directories(dir);
    write_matrix_csv(dir / "c_x.csv", cs.c_x);
    write_matrix_csv(dir / "c_y.csv", cs.c_y);
    std::ostringstream b;
    b << "start,end\n";
    for (const auto& iv : cs.cycle_boundaries) b << iv.start << ',' << iv.end << '\n';
    write_text_file(dir / "boundaries.csv", b.str());
    json meta;
    meta["scheme"] = scheme_name(cs.scheme);
    meta["L"] = cs.L;
    meta["n_cycles"] = cs.cycle_count();
    meta["degenerate_dropped"] = cs.degenerate_dropped;
    write_json_g17(dir / "cycles.json", meta);
}

}  // namespace ppg2ecg
