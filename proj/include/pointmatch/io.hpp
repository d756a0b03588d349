#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "pointmatch/core.hpp"
#include "pointmatch/fit.hpp"
#include "pointmatch/metrics.hpp"

namespace pointmatch {

inline const char* version_string() { return "0.1.0"; }

// --------------------------------------------------------- number format

namespace detail {

/// Reports quote derived statistics at 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline double round9(double v) { return std::strtod(format_g9(v).c_str(), nullptr); }

/// Integral values print as integers in JSON reports, everything else as a
/// 9-significant-digit double.
inline nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15)
        return static_cast<std::int64_t>(v);
    return round9(v);
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_header() {
    return std::string("# pointmatch ") + version_string() + "\n";
}

}  // namespace detail

// ------------------------------------------------------ annotation files

struct NamedPoints {
    std::string image_id;
    PointSet points;
};

struct NamedProposals {
    std::string image_id;
    ProposalSet proposals;
};

namespace detail {

inline nlohmann::ordered_json parse_record_line(const std::string& path, std::size_t line_no,
                                                const std::string& line) {
    const auto j = nlohmann::ordered_json::parse(line, nullptr, false);
    if (j.is_discarded())
        throw ParseError(path + ": line " + std::to_string(line_no) + ": invalid JSON");
    return j;
}

inline std::string record_loc(const std::string& path, std::size_t line_no) {
    return path + ": line " + std::to_string(line_no) + ": ";
}

inline std::pair<std::string, PointSet> read_id_and_points(const std::string& loc,
                                                           const nlohmann::ordered_json& j,
                                                           bool allow_confidences) {
    if (!j.is_object()) throw SchemaError(loc + "record must be a JSON object");
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        if (key == "image_id" || key == "points") continue;
        if (key == "confidences") {
            if (!allow_confidences)
                throw SchemaError(loc + "ground-truth records must not carry confidences");
            continue;
        }
        throw SchemaError(loc + "unknown field '" + key + "'");
    }
    if (!j.contains("image_id") || !j["image_id"].is_string())
        throw SchemaError(loc + "record needs a string image_id");
    const std::string id = j["image_id"].get<std::string>();
    if (id.empty()) throw SchemaError(loc + "image_id must be nonempty");
    if (!j.contains("points") || !j["points"].is_array())
        throw SchemaError(loc + "record needs a points array");

    PointSet ps;
    ps.points.reserve(j["points"].size());
    for (const auto& e : j["points"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw SchemaError(loc + "each point must be a [x, y] number pair");
        const Point p{e[0].get<double>(), e[1].get<double>()};
        if (!is_finite(p)) throw SchemaError(loc + "point coordinates must be finite");
        ps.points.push_back(p);
    }
    return {id, std::move(ps)};
}

template <typename Row>
void check_unique_ids(const std::string& path, const std::vector<Row>& rows) {
    std::set<std::string> seen;
    for (const Row& r : rows)
        if (!seen.insert(r.image_id).second)
            throw SchemaError(path + ": duplicate image_id '" + r.image_id + "'");
}

}  // namespace detail

/// JSON-lines ground truth: {"image_id": <string>, "points": [[x,y], ...]}
/// per line. Records carrying confidences are rejected —-that file is a
/// prediction file.
inline std::vector<NamedPoints> parse_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<NamedPoints> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = detail::parse_record_line(path, line_no, line);
        auto [id, ps] = detail::read_id_and_points(detail::record_loc(path, line_no), j, false);
        out.push_back({std::move(id), std::move(ps)});
    }
    detail::check_unique_ids(path, out);
    return out;
}

/// JSON-lines predictions: ground-truth schema plus a required
/// "confidences" array of the same length with entries in [0, 1].
inline std::vector<NamedProposals> parse_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::vector<NamedProposals> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = detail::parse_record_line(path, line_no, line);
        const std::string loc = detail::record_loc(path, line_no);
        auto [id, ps] = detail::read_id_and_points(loc, j, true);
        if (!j.contains("confidences") || !j["confidences"].is_array())
            throw SchemaError(loc + "prediction records need a confidences array");
        const auto& conf = j["confidences"];
        if (conf.size() != ps.size())
            throw SchemaError(loc + "confidences length " + std::to_string(conf.size()) +
                              " != points length " + std::to_string(ps.size()));
        NamedProposals np;
        np.image_id = std::move(id);
        np.proposals.proposals.reserve(ps.size());
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (!conf[k].is_number())
                throw SchemaError(loc + "confidences must be numbers");
            const double t = conf[k].get<double>();
            if (!(t >= 0.0 && t <= 1.0))
                throw SchemaError(loc + "confidence " + detail::format_g9(t) + " outside [0, 1]");
            np.proposals.proposals.push_back({ps.points[k], t});
        }
        out.push_back(std::move(np));
    }
    detail::check_unique_ids(path, out);
    return out;
}

inline std::string format_ground_truth(const std::vector<NamedPoints>& records) {
    std::string out;
    for (const NamedPoints& r : records) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const Point& p : r.points.points) pts.push_back({p.x, p.y});
        nlohmann::ordered_json j;
        j["image_id"] = r.image_id;
        j["points"] = std::move(pts);
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::string format_predictions(const std::vector<NamedProposals>& records) {
    std::string out;
    for (const NamedProposals& r : records) {
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        nlohmann::ordered_json conf = nlohmann::ordered_json::array();
        for (const Proposal& p : r.proposals.proposals) {
            pts.push_back({p.point.x, p.point.y});
            conf.push_back(p.confidence);
        }
        nlohmann::ordered_json j;
        j["image_id"] = r.image_id;
        j["points"] = std::move(pts);
        j["confidences"] = std::move(conf);
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw ParseError("write failed: " + path);
}

/// Sort both sides by image_id and require the id sets to be identical.
/// Returns aligned (gt, prediction) rows.
inline std::vector<std::pair<NamedPoints, NamedProposals>> pair_by_image_id(
    std::vector<NamedPoints> gt, std::vector<NamedProposals> pred) {
    auto by_id = [](const auto& a, const auto& b) { return a.image_id < b.image_id; };
    std::sort(gt.begin(), gt.end(), by_id);
    std::sort(pred.begin(), pred.end(), by_id);
    for (const NamedPoints& g : gt) {
        const auto it = std::lower_bound(pred.begin(), pred.end(), g.image_id,
                                         [](const NamedProposals& p, const std::string& id) {
                                             return p.image_id < id;
                                         });
        if (it == pred.end() || it->image_id != g.image_id)
            throw InvalidInput("no prediction record for image_id '" + g.image_id + "'");
    }
    if (pred.size() != gt.size()) {
        for (const NamedProposals& p : pred) {
            const auto it = std::lower_bound(gt.begin(), gt.end(), p.image_id,
                                             [](const NamedPoints& g, const std::string& id) {
                                                 return g.image_id < id;
                                             });
            if (it == gt.end() || it->image_id != p.image_id)
                throw InvalidInput("no ground-truth record for image_id '" + p.image_id + "'");
        }
    }
    std::vector<std::pair<NamedPoints, NamedProposals>> out;
    out.reserve(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i)
        out.push_back({std::move(gt[i]), std::move(pred[i])});
    return out;
}

// ----------------------------------------------------------- config file

struct ConfigBundle {
    LossConfig loss;
    FitConfig fit;
    std::set<std::string> keys_present;  // which keys the file set explicitly
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double config_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("invalid value for " + key + ": '" + value + "'");
    }
}

inline long long config_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("invalid value for " + key + ": '" + value + "'");
    }
}

inline std::uint64_t config_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size() || value.front() == '-') throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("invalid value for " + key + ": '" + value + "'");
    }
}

}  // namespace detail

/// Flat key=value text. '#' starts a comment, blank lines are skipped,
/// unknown and duplicate keys are errors, missing keys keep the documented
/// defaults. Returns validated configs.
inline ConfigBundle load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    ConfigBundle bundle;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;

        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ": line " + std::to_string(line_no) +
                                  ": expected key=value");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ValidationError(path + ": line " + std::to_string(line_no) + ": empty key");
        if (!bundle.keys_present.insert(key).second)
            throw ValidationError("duplicate config key: " + key);

        LossConfig& lc = bundle.loss;
        FitConfig& fc = bundle.fit;
        if (key == "gamma") lc.gamma = detail::config_double(key, value);
        else if (key == "alpha") lc.alpha = detail::config_double(key, value);
        else if (key == "epsilon") lc.epsilon = detail::config_double(key, value);
        else if (key == "lambda1") lc.lambda1 = detail::config_double(key, value);
        else if (key == "lambda2") lc.lambda2 = detail::config_double(key, value);
        else if (key == "lambda3") lc.lambda3 = detail::config_double(key, value);
        else if (key == "clamp") lc.confidence_clamp = detail::config_double(key, value);
        else if (key == "threshold") lc.count_threshold = detail::config_double(key, value);
        else if (key == "wce_mode") {
            if (value == "standard") lc.wce_mode = WceMode::Standard;
            else if (value == "literal") lc.wce_mode = WceMode::Literal;
            else throw ValidationError("invalid value for wce_mode: '" + value + "'");
        } else if (key == "hrc_count_mode") {
            if (value == "hard") lc.hrc_count_mode = HrcCountMode::Hard;
            else if (value == "soft") lc.hrc_count_mode = HrcCountMode::Soft;
            else throw ValidationError("invalid value for hrc_count_mode: '" + value + "'");
        } else if (key == "steps") {
            fc.steps = static_cast<int>(detail::config_int(key, value));
        } else if (key == "lr_coord") fc.lr_coord = detail::config_double(key, value);
        else if (key == "lr_conf") fc.lr_conf = detail::config_double(key, value);
        else if (key == "proposal_factor") fc.proposal_factor = detail::config_double(key, value);
        else if (key == "init") {
            if (value == "grid") fc.init = InitMode::Grid;
            else if (value == "random") fc.init = InitMode::Random;
            else throw ValidationError("invalid value for init: '" + value + "'");
        } else if (key == "rematch_every") {
            fc.rematch_every = static_cast<int>(detail::config_int(key, value));
        } else if (key == "seed") {
            fc.seed = detail::config_u64(key, value);
        } else {
            throw ValidationError("unknown config key: " + key);
        }
    }

    bundle.loss.validate();
    bundle.fit.validate();
    return bundle;
}

// -------------------------------------------------------------- reports

inline std::string format_eval_csv(const EvalResult& result) {
    std::string out = detail::csv_header();
    out += "# mae=" + detail::format_g9(result.mae) + " mse=" + detail::format_g9(result.mse) + "\n";
    out += "image_id,gt_count,predicted_count,error\n";
    for (const CountRecord& r : result.per_image) {
        out += detail::csv_field(r.image_id) + ',' + detail::format_g9(r.gt_count) + ',' +
               detail::format_g9(r.predicted_count) + ',' +
               detail::format_g9(r.predicted_count - r.gt_count) + '\n';
    }
    return out;
}

inline std::string format_eval_json(const EvalResult& result) {
    nlohmann::ordered_json j;
    j["version"] = version_string();
    j["mae"] = detail::json_number(result.mae);
    j["mse"] = detail::json_number(result.mse);
    auto& rows = j["per_image"] = nlohmann::ordered_json::array();
    for (const CountRecord& r : result.per_image) {
        nlohmann::ordered_json row;
        row["image_id"] = r.image_id;
        row["gt_count"] = detail::json_number(r.gt_count);
        row["predicted_count"] = detail::json_number(r.predicted_count);
        row["error"] = detail::json_number(r.predicted_count - r.gt_count);
        rows.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

inline std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = detail::csv_header();
    out += "id,regression,classification,counting,count_mae,count_mse\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string name = rows[i].variant.name();
        const auto p1 = name.find('+');
        const auto p2 = name.find('+', p1 + 1);
        out += std::to_string(i + 1) + ',' + name.substr(0, p1) + ',' +
               name.substr(p1 + 1, p2 - p1 - 1) + ',' + name.substr(p2 + 1) + ',' +
               detail::format_g9(rows[i].count_mae) + ',' + detail::format_g9(rows[i].count_mse) +
               '\n';
    }
    return out;
}

inline std::string format_ablation_json(const std::vector<AblationRow>& rows) {
    nlohmann::ordered_json j;
    j["version"] = version_string();
    auto& arr = j["rows"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string name = rows[i].variant.name();
        const auto p1 = name.find('+');
        const auto p2 = name.find('+', p1 + 1);
        nlohmann::ordered_json row;
        row["id"] = i + 1;
        row["variant"] = name;
        row["regression"] = name.substr(0, p1);
        row["classification"] = name.substr(p1 + 1, p2 - p1 - 1);
        row["counting"] = name.substr(p2 + 1);
        row["count_mae"] = detail::json_number(rows[i].count_mae);
        row["count_mse"] = detail::json_number(rows[i].count_mse);
        arr.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

struct DensityRow {
    std::string image_id;
    std::size_t point_count = 0;
    double integral = 0.0;
};

inline std::string format_density_csv(const std::vector<DensityRow>& rows, double sigma) {
    std::string out = detail::csv_header();
    out += "# sigma=" + detail::format_g9(sigma) + "\n";
    out += "image_id,point_count,integral,absolute_error,relative_error\n";
    for (const DensityRow& r : rows) {
        const double abs_err = std::abs(r.integral - static_cast<double>(r.point_count));
        out += detail::csv_field(r.image_id) + ',' + std::to_string(r.point_count) + ',' +
               detail::format_g9(r.integral) + ',' + detail::format_g9(abs_err) + ',';
        if (r.point_count > 0) out += detail::format_g9(abs_err / static_cast<double>(r.point_count));
        out += '\n';
    }
    return out;
}

inline std::string format_density_json(const std::vector<DensityRow>& rows, double sigma) {
    nlohmann::ordered_json j;
    j["version"] = version_string();
    j["sigma"] = detail::json_number(sigma);
    auto& arr = j["rows"] = nlohmann::ordered_json::array();
    for (const DensityRow& r : rows) {
        const double abs_err = std::abs(r.integral - static_cast<double>(r.point_count));
        nlohmann::ordered_json row;
        row["image_id"] = r.image_id;
        row["point_count"] = r.point_count;
        row["integral"] = detail::json_number(r.integral);
        row["absolute_error"] = detail::json_number(abs_err);
        if (r.point_count > 0)
            row["relative_error"] = detail::json_number(abs_err / static_cast<double>(r.point_count));
        else
            row["relative_error"] = nullptr;
        arr.push_back(std::move(row));
    }
    return j.dump(2) + "\n";
}

struct MatchRow {
    std::string image_id;
    Matching matching;
    double total_cost = 0.0;
};

/// JSON-lines matching dump; the first line carries the version.
inline std::string format_match_jsonl(const std::vector<MatchRow>& rows) {
    std::string out = std::string("{\"version\":\"") + version_string() + "\"}\n";
    for (const MatchRow& r : rows) {
        nlohmann::ordered_json j;
        j["image_id"] = r.image_id;
        j["assignment"] = r.matching.assignment;
        j["unmatched"] = r.matching.unmatched;
        j["total_cost"] = detail::json_number(r.total_cost);
        out += j.dump();
        out += '\n';
    }
    return out;
}

struct LossRow {
    std::string image_id;
    LossReport report;
};

/// JSON-lines per-image loss reports with gradients; the first line carries
/// the version.
inline std::string format_loss_jsonl(const std::vector<LossRow>& rows) {
    std::string out = std::string("{\"version\":\"") + version_string() + "\"}\n";
    for (const LossRow& r : rows) {
        nlohmann::ordered_json j;
        j["image_id"] = r.image_id;
        j["total"] = detail::json_number(r.report.total);
        j["l_cls"] = detail::json_number(r.report.l_cls);
        j["l_reg"] = detail::json_number(r.report.l_reg);
        j["l_cou"] = detail::json_number(r.report.l_cou);
        auto& gc = j["grad_coords"] = nlohmann::ordered_json::array();
        for (const Vec2& g : r.report.grad_coords)
            gc.push_back({detail::json_number(g.x), detail::json_number(g.y)});
        auto& gt = j["grad_conf"] = nlohmann::ordered_json::array();
        for (double g : r.report.grad_conf) gt.push_back(detail::json_number(g));
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline std::string format_trace_csv(const FitTrace& trace) {
    std::string out = detail::csv_header();
    out += "step,total,l_cls,l_reg,l_cou,mean_matched_dist,decoded_count\n";
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const FitStep& st = trace.steps[s];
        out += std::to_string(s) + ',' + detail::format_g9(st.total) + ',' +
               detail::format_g9(st.l_cls) + ',' + detail::format_g9(st.l_reg) + ',' +
               detail::format_g9(st.l_cou) + ',' + detail::format_g9(st.mean_matched_dist) + ',' +
               std::to_string(st.decoded_count) + '\n';
    }
    return out;
}

}  // namespace pointmatch
