#include "profs/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "profs/version.hpp"

#include "json.hpp"

namespace profs::io {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& raw, const std::string& what) {
    const std::string s = trim(raw);
    if (s.empty()) throw ConfigError(what + ": empty number");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ConfigError(what + ": not a finite number: \"" + s + "\"");
    }
    return v;
}

// --- unified key/value access over the two config formats ----------------

struct ConfigMap {
    std::string path;
    std::map<std::string, std::string> strings;
    std::map<std::string, std::vector<double>> lists;
    mutable std::set<std::string> consumed;

    bool has(const std::string& key) const {
        return strings.count(key) > 0 || lists.count(key) > 0;
    }

    std::string get_string(const std::string& key) const {
        consumed.insert(key);
        auto it = strings.find(key);
        if (it == strings.end()) throw ConfigError(path + ": missing key: " + key);
        return it->second;
    }

    double get_double(const std::string& key) const {
        return parse_double(get_string(key), path + ": " + key);
    }

    int get_int(const std::string& key) const {
        const double v = get_double(key);
        if (v != std::floor(v) || std::fabs(v) > 2147483647.0) {
            throw ConfigError(path + ": " + key + ": not an integer");
        }
        return static_cast<int>(v);
    }

    std::uint64_t get_seed(const std::string& key) const {
        const std::string s = trim(get_string(key));
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (errno != 0 || end != s.c_str() + s.size()) {
            throw ConfigError(path + ": " + key + ": not a nonnegative integer");
        }
        return v;
    }

    std::vector<double> get_list(const std::string& key) const {
        consumed.insert(key);
        auto it = lists.find(key);
        if (it != lists.end()) return it->second;
        auto is = strings.find(key);
        if (is == strings.end()) throw ConfigError(path + ": missing key: " + key);
        if (trim(is->second).empty()) return {};
        std::vector<double> out;
        for (const auto& piece : split(is->second, ',')) {
            out.push_back(parse_double(piece, path + ": " + key));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [k, v] : strings) {
            if (!consumed.count(k)) throw ConfigError(path + ": unknown key: " + k);
        }
        for (const auto& [k, v] : lists) {
            if (!consumed.count(k)) throw ConfigError(path + ": unknown key: " + k);
        }
    }
};

ConfigMap parse_config_file(const std::string& path) {
    const std::string text = read_file(path);
    ConfigMap cfg;
    cfg.path = path;

    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        ordered_json j;
        try {
            j = ordered_json::parse(text);
        } catch (const std::exception& e) {
            throw ConfigError(path + ": invalid JSON: " + e.what());
        }
        if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_array()) {
                std::vector<double> xs;
                for (const auto& v : value) {
                    if (!v.is_number()) {
                        throw ConfigError(path + ": " + key + ": arrays must be numeric");
                    }
                    xs.push_back(v.get<double>());
                }
                cfg.lists[key] = std::move(xs);
            } else if (value.is_string()) {
                cfg.strings[key] = value.get<std::string>();
            } else if (value.is_boolean()) {
                cfg.strings[key] = value.get<bool>() ? "1" : "0";
            } else if (value.is_number()) {
                std::ostringstream os;
                os.precision(17);
                os << value.get<double>();
                cfg.strings[key] = os.str();
            } else {
                throw ConfigError(path + ": " + key + ": unsupported value type");
            }
        }
        return cfg;
    }

    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path + ": line " + std::to_string(line_no) + ": empty key");
        }
        if (cfg.strings.count(key)) {
            throw ConfigError(path + ": line " + std::to_string(line_no) +
                              ": duplicate key: " + key);
        }
        cfg.strings[key] = value;
    }
    return cfg;
}

sim::PiecewiseHazard hazard_from_config(const ConfigMap& cfg, const std::string& arm,
                                        const std::string& layer) {
    const std::string rates_key = arm + "_" + layer + "_rates";
    const std::string cuts_key = arm + "_" + layer + "_cuts";
    std::vector<double> rates = cfg.get_list(rates_key);
    std::vector<double> cuts;
    if (cfg.has(cuts_key)) cuts = cfg.get_list(cuts_key);
    try {
        return sim::PiecewiseHazard(std::move(cuts), std::move(rates));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(cfg.path + ": " + rates_key + ": " + e.what());
    }
}

}  // namespace

TrialDataset read_dataset_csv(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    auto fail = [&](int column, const std::string& msg) -> void {
        throw ParseError(path + ": row " + std::to_string(line_no) + ", column " +
                         std::to_string(column) + ": " + msg);
    };

    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line, ',');
    if (header.size() < 5 || trim(header[0]) != "id" || trim(header[1]) != "arm" ||
        trim(header[2]) != "stratum") {
        throw ParseError(path + ": row 1, column 1: header must start with "
                         "id,arm,stratum,time_1,censored_1");
    }
    if ((header.size() - 3) % 2 != 0) {
        throw ParseError(path + ": row 1, column " + std::to_string(header.size()) +
                         ": time/censored columns must come in pairs");
    }
    const int layers = static_cast<int>((header.size() - 3) / 2);
    for (int k = 0; k < layers; ++k) {
        const std::string t = "time_" + std::to_string(k + 1);
        const std::string c = "censored_" + std::to_string(k + 1);
        if (trim(header[3 + 2 * k]) != t) fail(4 + 2 * k, "expected column " + t);
        if (trim(header[4 + 2 * k]) != c) fail(5 + 2 * k, "expected column " + c);
    }

    std::vector<SubjectRecord> subjects;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != header.size()) {
            fail(static_cast<int>(fields.size()),
                 "expected " + std::to_string(header.size()) + " fields, found " +
                     std::to_string(fields.size()));
        }
        SubjectRecord rec;
        const std::string arm = trim(fields[1]);
        if (arm == "0") {
            rec.arm = 0;
        } else if (arm == "1") {
            rec.arm = 1;
        } else {
            fail(2, "arm must be 0 or 1, found \"" + arm + "\"");
        }
        const std::string stratum = trim(fields[2]);
        if (!stratum.empty()) rec.stratum = stratum;
        rec.layers.resize(layers);
        for (int k = 0; k < layers; ++k) {
            const std::string tv = trim(fields[3 + 2 * k]);
            char* end = nullptr;
            errno = 0;
            const double t = std::strtod(tv.c_str(), &end);
            if (tv.empty() || errno != 0 || end != tv.c_str() + tv.size() ||
                !std::isfinite(t) || t < 0.0) {
                fail(4 + 2 * k, "time_" + std::to_string(k + 1) +
                                    " must be a nonnegative number, found \"" + tv +
                                    "\"");
            }
            const std::string cv = trim(fields[4 + 2 * k]);
            if (cv != "0" && cv != "1") {
                fail(5 + 2 * k, "censored_" + std::to_string(k + 1) +
                                    " must be 0 or 1, found \"" + cv + "\"");
            }
            rec.layers[k] = {t, cv == "1"};
        }
        subjects.push_back(std::move(rec));
    }
    if (subjects.empty()) throw ParseError(path + ": no data rows");
    try {
        return TrialDataset(std::move(subjects), layers);
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_dataset_csv(const TrialDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "id,arm,stratum";
    for (int k = 1; k <= data.layer_count(); ++k) {
        out << ",time_" << k << ",censored_" << k;
    }
    out << "\n";
    char buf[64];
    int id = 0;
    for (const auto& s : data.subjects()) {
        out << "S" << ++id << "," << s.arm << ","
            << (s.stratum ? *s.stratum : "");
        for (const auto& layer : s.layers) {
            std::snprintf(buf, sizeof(buf), "%.10g", layer.time);
            out << "," << buf << "," << (layer.censored ? 1 : 0);
        }
        out << "\n";
    }
}

sim::ScenarioConfig read_scenario_config(const std::string& path) {
    const ConfigMap cfg = parse_config_file(path);

    auto build = [&]() -> sim::ScenarioConfig {
        if (cfg.has("preset")) {
            const std::string id = trim(cfg.get_string("preset"));
            try {
                return sim::paper_scenario(id);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(path + ": " + e.what());
            }
        }
        if (cfg.has("beta") && cfg.has("kendall_w")) {
            throw ConfigError(path + ": specify beta or kendall_w, not both");
        }
        double beta = 1.0;
        if (cfg.has("beta")) beta = cfg.get_double("beta");
        if (cfg.has("kendall_w")) {
            const double w = cfg.get_double("kendall_w");
            if (!(w >= 0.0 && w < 1.0)) {
                throw ConfigError(path + ": kendall_w must be in [0,1)");
            }
            beta = 1.0 / (1.0 - w);
        }
        try {
            sim::CopulaSpec control(beta, hazard_from_config(cfg, "control", "death"),
                                    hazard_from_config(cfg, "control", "hosp"));
            sim::CopulaSpec treatment(beta,
                                      hazard_from_config(cfg, "treatment", "death"),
                                      hazard_from_config(cfg, "treatment", "hosp"));
            return sim::ScenarioConfig(std::move(control), std::move(treatment));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path + ": " + e.what());
        }
    };

    sim::ScenarioConfig out = build();
    if (cfg.has("id")) out.id = trim(cfg.get_string("id"));
    if (out.id.empty()) out.id = "scenario";
    if (cfg.has("n_total")) out.n_total = cfg.get_int("n_total");
    if (cfg.has("treated_fraction")) out.treated_fraction = cfg.get_double("treated_fraction");
    if (cfg.has("follow_up")) out.follow_up = cfg.get_double("follow_up");
    if (cfg.has("s_inf")) out.schedule_floor = cfg.get_double("s_inf");
    if (cfg.has("replicates")) out.replicates = cfg.get_int("replicates");
    if (cfg.has("alpha")) out.alpha = cfg.get_double("alpha");
    if (cfg.has("seed")) out.seed = cfg.get_seed("seed");
    cfg.reject_unknown();
    try {
        out.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return out;
}

gs::GsDesign read_design_config(const std::string& path) {
    const ConfigMap cfg = parse_config_file(path);

    double s_inf = cfg.has("s_inf") ? cfg.get_double("s_inf") : 0.0;
    auto schedule = [&]() -> ExaminationSchedule {
        try {
            if (cfg.has("schedule")) {
                std::vector<double> times = cfg.get_list("schedule");
                const double horizon = cfg.has("horizon")
                                           ? cfg.get_double("horizon")
                                           : (times.empty() ? 0.0 : times.back());
                return ExaminationSchedule(std::move(times), horizon, s_inf);
            }
            if (cfg.has("examinations")) {
                const int p = cfg.get_int("examinations");
                return quantile_schedule(cfg.get_double("horizon"), p, s_inf);
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path + ": " + e.what());
        }
        throw ConfigError(path + ": need schedule or examinations + horizon");
    };

    gs::GsDesign design(schedule());
    if (cfg.has("looks")) design.looks = cfg.get_int("looks");
    if (cfg.has("per_arm_increment")) design.per_arm_increment = cfg.get_int("per_arm_increment");
    if (cfg.has("stop_probs")) design.stop_probs = cfg.get_list("stop_probs");
    if (cfg.has("draws")) design.draws = cfg.get_int("draws");
    if (cfg.has("seed")) design.seed = cfg.get_seed("seed");
    cfg.reject_unknown();
    try {
        design.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return design;
}

// --- manifest -------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= 0xFF;
    h *= 1099511628211ull;
    return h;
}

}  // namespace

std::uint64_t RunManifest::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    h = fnv1a(h, command);
    for (const auto& p : inputs) {
        h = fnv1a(h, p);
        std::ifstream in(p, std::ios::binary);
        if (in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            h = fnv1a(h, buf.str());
        }
    }
    std::vector<std::pair<std::string, std::string>> opts = options;
    std::sort(opts.begin(), opts.end());
    for (const auto& [k, v] : opts) {
        h = fnv1a(h, k);
        h = fnv1a(h, v);
    }
    h = fnv1a(h, std::to_string(seed));
    h = fnv1a(h, version);
    return h;
}

std::string RunManifest::hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso_utc_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::write(const std::string& path) const {
    ordered_json j;
    j["manifest"] = hash_hex(hash());
    j["command"] = command;
    j["inputs"] = inputs;
    ordered_json opts = ordered_json::object();
    for (const auto& [k, v] : options) opts[k] = v;
    j["options"] = opts;
    j["seed"] = seed;
    j["version"] = version;
    j["started"] = started;
    j["finished"] = finished;
    j["outputs"] = outputs;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

// --- result documents -----------------------------------------------------

namespace {

ordered_json matrix_json(const detail::Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (int i = 0; i < m.dim(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

}  // namespace

void write_profs_result_json(const std::string& path, const ProfsResult& result,
                             const ExaminationSchedule& schedule,
                             const TrialDataset& data, const ResultContext& ctx) {
    ordered_json j;
    j["manifest"] = ctx.manifest_hash;
    j["version"] = kVersion;
    j["seed"] = ctx.seed;
    j["n"] = data.n();
    j["m"] = data.treated_count();
    j["layer_count"] = data.layer_count();
    j["stratified"] = ctx.stratified;
    j["schedule"] = {{"times", schedule.times()},
                     {"horizon", schedule.horizon()},
                     {"floor", schedule.floor()}};
    j["z"] = result.z_vec;
    j["r"] = result.r_vec;
    j["sigma"] = matrix_json(result.sigma);
    j["omega"] = matrix_json(result.omega);
    j["dropped_examinations"] = result.dropped;
    j["z_max"] = result.z_max;
    j["argmax_examination"] = result.argmax_examination;
    j["p_value"] = result.p_value;
    j["degenerate"] = result.degenerate;
    j["mvn"] = {{"value", result.mvn.value},
                {"error_estimate", result.mvn.error_estimate},
                {"samples_used", result.mvn.samples_used},
                {"converged", result.mvn.converged},
                {"correlation_adjusted", result.mvn.correlation_adjusted}};
    write_json_file(path, j);
}

void write_results_csv(const std::string& path,
                       const std::vector<sim::OperatingCharacteristics>& runs,
                       const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "# manifest " << manifest_hash << "\n";
    out << "scenario_id,test_name,rejections,replicates,rate,ci_lo,ci_hi\n";
    for (const auto& run : runs) {
        for (const auto& t : run.tests) {
            out << run.scenario_id << "," << t.test << "," << t.rejections << ","
                << t.replicates << "," << format_double(t.rate) << ","
                << format_double(t.ci_lo) << "," << format_double(t.ci_hi) << "\n";
        }
    }
}

void write_plot_data_csv(const std::string& path, const std::vector<PlotRow>& rows,
                         const std::string& manifest_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "# manifest " << manifest_hash << "\n";
    out << "family,kendall_w,follow_up,test_name,power\n";
    for (const auto& r : rows) {
        out << r.family << "," << format_double(r.kendall_w) << ","
            << format_double(r.follow_up) << "," << r.test << ","
            << format_double(r.power) << "\n";
    }
}

void write_gs_trace_json(const std::string& path, const gs::GsDesign& design,
                         const gs::GsRunState& state, const ResultContext& ctx) {
    ordered_json j;
    j["manifest"] = ctx.manifest_hash;
    j["version"] = kVersion;
    j["seed"] = ctx.seed;
    j["design"] = {{"looks", design.looks},
                   {"per_arm_increment", design.per_arm_increment},
                   {"stop_probs", design.stop_probs},
                   {"draws", design.draws},
                   {"schedule",
                    {{"times", design.schedule.times()},
                     {"horizon", design.schedule.horizon()},
                     {"floor", design.schedule.floor()}}}};
    ordered_json looks = ordered_json::array();
    for (const auto& rec : state.looks) {
        looks.push_back({{"look", rec.look},
                         {"cumulative_n", rec.cumulative_n},
                         {"z", rec.z_vec},
                         {"r", rec.r_vec},
                         {"observed_max", rec.observed_max},
                         {"boundary", rec.boundary},
                         {"decision", gs::to_string(rec.decision)}});
    }
    j["looks"] = looks;
    j["final_decision"] = gs::to_string(state.final_decision);
    j["stopped_at"] = state.stopped_at;
    write_json_file(path, j);
}

}  // namespace profs::io
