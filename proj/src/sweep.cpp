#include "qdcool/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "qdcool/oracle.hpp"
#include "qdcool/reduced.hpp"
#include "qdcool/statistics.hpp"

namespace qdcool {

namespace {

constexpr const char* kCsvHeader =
    "sweep_value,mode,mean_n,g2,n_max_used,tail_mass,residual,warnings";

std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad numeric value for " + key + ": '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad integer value for " + key + ": '" + s + "'");
    }
}

std::vector<Mode> canonical_modes(std::vector<Mode> modes) {
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    return modes;
}

ModelParams at_sweep_value(const RunConfig& cfg, double x) {
    ModelParams p = cfg.params;
    if (cfg.sweep_axis == "delta")
        p.delta = x;
    else if (cfg.sweep_axis == "g")
        p.g = x;
    else
        p.nbar = x;
    return p;
}

std::string sanitize(std::string msg) {
    for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
    return msg;
}

// Fock cutoff for the oracle modes: the reduced solver's converged size plus
// a guard band, clamped to the dense-path cap.
int oracle_truncation(const ModelParams& prm, const RunConfig& cfg, bool* capped) {
    int wanted = 0;
    try {
        const DressedParams dp = dress(prm, false);
        const SteadyState ss =
            solve_adaptive(dp, prm, cfg.tail_tol, cfg.n_start, std::min(cfg.n_cap, 1024));
        wanted = ss.n_max + 5;
    } catch (const std::exception&) {
        // No reduced sizing available (undriven QD or divergent sizing solve);
        // fall back to the thermal tail estimate.
        wanted = std::max(cfg.n_start, 8);
        if (prm.nbar > 0.0) {
            const double r = prm.nbar / (1.0 + prm.nbar);
            double tail = std::pow(r, wanted) / (1.0 + prm.nbar);
            while (tail > cfg.tail_tol && wanted < oracle::kDenseOracleCap) {
                wanted += 4;
                tail = std::pow(r, wanted) / (1.0 + prm.nbar);
            }
            wanted += 5;
        }
    }
    *capped = wanted > oracle::kDenseOracleCap;
    return std::min(wanted, oracle::kDenseOracleCap);
}

SweepRow eval_mode(const RunConfig& cfg, double x, Mode mode) {
    SweepRow row;
    row.sweep_value = x;
    row.mode = mode;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        const ModelParams prm = at_sweep_value(cfg, x);
        if (mode == Mode::secular || mode == Mode::beyond_secular) {
            const DressedParams dp = dress(prm, mode == Mode::secular);
            const SteadyState ss = solve_adaptive(dp, prm, cfg.tail_tol, cfg.n_start, cfg.n_cap);
            const PhononStats stats = observables(ss);
            row.mean_n = stats.mean_n;
            row.g2 = stats.g2;
            row.n_max_used = ss.n_max;
            row.tail_mass = stats.tail_mass;
            row.residual = ss.residual;
            row.warnings = dp.warnings;
            row.warnings.insert(row.warnings.end(), ss.warnings.begin(), ss.warnings.end());
        } else {
            bool capped = false;
            const int n_o = oracle_truncation(prm, cfg, &capped);
            const oracle::DenseLiouvillian liouv =
                mode == Mode::oracle_dressed
                    ? oracle::build_dressed_liouvillian(dress(prm, false), prm, n_o)
                    : oracle::build_labframe_rotating_liouvillian(prm, n_o);
            const oracle::NullSpaceResult ns = oracle::steady_state_null(liouv);
            const double mean = oracle::mean_phonon(ns.rho);
            row.mean_n = mean;
            if (mean >= kG2UndefinedThreshold) row.g2 = oracle::g2_phonon(ns.rho);
            row.n_max_used = n_o;
            row.tail_mass = oracle::phonon_populations(ns.rho).back();
            row.residual = ns.residual;
            if (capped) row.warnings.push_back("oracle-truncation: capped at the dense-path limit");
        }
    } catch (const std::exception& e) {
        row.failed = true;
        row.mean_n = nan;
        row.g2.reset();
        row.tail_mass = nan;
        row.residual = nan;
        row.n_max_used = 0;
        row.warnings.push_back("error: " + sanitize(e.what()));
    }
    return row;
}

nlohmann::ordered_json row_to_json(const SweepRow& row) {
    nlohmann::ordered_json j;
    j["sweep_value"] = row.sweep_value;
    j["mode"] = mode_name(row.mode);
    j["mean_n"] = row.mean_n;  // NaN serializes as null
    if (row.g2)
        j["g2"] = *row.g2;
    else
        j["g2"] = nullptr;
    j["n_max_used"] = row.n_max_used;
    j["tail_mass"] = row.tail_mass;
    j["residual"] = row.residual;
    j["warnings"] = row.warnings;
    return j;
}

double json_number(const nlohmann::json& v) {
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return v.get<double>();
}

SweepRow row_from_json(const nlohmann::json& j) {
    SweepRow row;
    row.sweep_value = json_number(j.at("sweep_value"));
    row.mode = mode_from_name(j.at("mode").get<std::string>());
    row.mean_n = json_number(j.at("mean_n"));
    if (!j.at("g2").is_null()) {
        const double g2 = j.at("g2").get<double>();
        if (std::isfinite(g2)) row.g2 = g2;
    }
    row.n_max_used = j.at("n_max_used").get<int>();
    row.tail_mass = json_number(j.at("tail_mass"));
    row.residual = json_number(j.at("residual"));
    for (const auto& w : j.at("warnings")) row.warnings.push_back(w.get<std::string>());
    for (const auto& w : row.warnings)
        if (w.rfind("error:", 0) == 0) row.failed = true;
    return row;
}

std::string csv_line(const SweepRow& row) {
    std::string warnings;
    for (std::size_t i = 0; i < row.warnings.size(); ++i) {
        if (i) warnings += ';';
        warnings += sanitize(row.warnings[i]);
    }
    std::string g2 = row.g2 && std::isfinite(*row.g2) ? fmt17(*row.g2) : "nan";
    std::string line;
    line += fmt17(row.sweep_value);
    line += ',';
    line += mode_name(row.mode);
    line += ',';
    line += fmt17(row.mean_n);
    line += ',';
    line += g2;
    line += ',';
    line += std::to_string(row.n_max_used);
    line += ',';
    line += fmt17(row.tail_mass);
    line += ',';
    line += fmt17(row.residual);
    line += ',';
    line += warnings;
    return line;
}

}  // namespace

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::secular: return "secular";
        case Mode::beyond_secular: return "beyond_secular";
        case Mode::oracle_dressed: return "oracle_dressed";
        case Mode::oracle_labframe: return "oracle_labframe";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "secular") return Mode::secular;
    if (name == "beyond_secular") return Mode::beyond_secular;
    if (name == "oracle_dressed") return Mode::oracle_dressed;
    if (name == "oracle_labframe") return Mode::oracle_labframe;
    throw std::runtime_error("unknown mode: '" + name + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     " is not of the form key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string val = trim(stripped.substr(eq + 1));

        if (key == "omega_ph")
            cfg.params.omega_ph = parse_double(val, key);
        else if (key == "delta")
            cfg.params.delta = parse_double(val, key);
        else if (key == "rabi")
            cfg.params.rabi = parse_double(val, key);
        else if (key == "g")
            cfg.params.g = parse_double(val, key);
        else if (key == "gamma")
            cfg.params.gamma = parse_double(val, key);
        else if (key == "gamma_c")
            cfg.params.gamma_c = parse_double(val, key);
        else if (key == "kappa")
            cfg.params.kappa = parse_double(val, key);
        else if (key == "nbar")
            cfg.params.nbar = parse_double(val, key);
        else if (key == "sweep_axis")
            cfg.sweep_axis = val;
        else if (key == "sweep_lo")
            cfg.sweep_lo = parse_double(val, key);
        else if (key == "sweep_hi")
            cfg.sweep_hi = parse_double(val, key);
        else if (key == "sweep_points")
            cfg.sweep_points = int(parse_long(val, key));
        else if (key == "modes") {
            cfg.modes.clear();
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) cfg.modes.push_back(mode_from_name(item));
            }
        } else if (key == "tail_tol")
            cfg.tail_tol = parse_double(val, key);
        else if (key == "n_start")
            cfg.n_start = int(parse_long(val, key));
        else if (key == "n_cap")
            cfg.n_cap = int(parse_long(val, key));
        else if (key == "output")
            cfg.output = val;
        else if (key == "format")
            cfg.format = val;
        else if (key == "seed")
            cfg.seed = std::uint64_t(parse_long(val, key));
        else if (key == "unit_scale")
            cfg.unit_scale = parse_double(val, key);
        else
            throw std::runtime_error("config: unknown key '" + key + "' on line " +
                                     std::to_string(lineno));
    }
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    params.validate();
    if (sweep_axis != "delta" && sweep_axis != "g" && sweep_axis != "nbar")
        throw std::invalid_argument("config: sweep_axis must be delta, g or nbar");
    if (sweep_points < 1) throw std::invalid_argument("config: sweep_points must be >= 1");
    if (!(sweep_lo <= sweep_hi)) throw std::invalid_argument("config: sweep_lo must be <= sweep_hi");
    if (modes.empty()) throw std::invalid_argument("config: at least one mode must be selected");
    if (!(tail_tol > 0.0 && tail_tol < 1.0))
        throw std::invalid_argument("config: tail_tol must be in (0, 1)");
    if (n_start < 2) throw std::invalid_argument("config: n_start must be >= 2");
    if (n_cap < n_start) throw std::invalid_argument("config: n_cap must be >= n_start");
    if (format != "csv" && format != "json")
        throw std::invalid_argument("config: format must be csv or json");
    if (!(unit_scale > 0.0)) throw std::invalid_argument("config: unit_scale must be > 0");
}

SweepResult run(const RunConfig& config, int threads, RowSink* sink) {
    config.validate();
    const std::vector<Mode> modes = canonical_modes(config.modes);
    const int points = config.sweep_points;
    auto value_at = [&](int k) {
        if (points == 1) return config.sweep_lo;
        return config.sweep_lo + (config.sweep_hi - config.sweep_lo) * double(k) / double(points - 1);
    };

    SweepResult result;
    result.rows.reserve(std::size_t(points) * modes.size());
    std::vector<std::vector<SweepRow>> slots(points);
    std::vector<char> done(points, 0);
    std::atomic<int> next{0};
    std::mutex mu;
    int cursor = 0;

    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= points) break;
            std::vector<SweepRow> rows;
            rows.reserve(modes.size());
            for (Mode m : modes) rows.push_back(eval_mode(config, value_at(k), m));
            std::lock_guard<std::mutex> lock(mu);
            slots[k] = std::move(rows);
            done[k] = 1;
            while (cursor < points && done[cursor]) {
                for (SweepRow& r : slots[cursor]) {
                    if (sink) sink->write(r);
                    result.rows.push_back(std::move(r));
                }
                slots[cursor].clear();
                ++cursor;
            }
        }
    };

    const int nthreads = std::max(1, std::min(threads, points));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (sink) sink->finish();
    return result;
}

CsvSink::CsvSink(std::ostream& out) : out_(out) { out_ << kCsvHeader << '\n'; }

void CsvSink::write(const SweepRow& row) {
    out_ << csv_line(row) << '\n';
    out_.flush();
}

JsonSink::JsonSink(std::ostream& out) : out_(out) {}

void JsonSink::write(const SweepRow& row) {
    out_ << (first_ ? "[\n  " : ",\n  ") << row_to_json(row).dump();
    first_ = false;
    out_.flush();
}

void JsonSink::finish() {
    out_ << (first_ ? "[]" : "\n]") << '\n';
    out_.flush();
}

void write_csv(std::ostream& out, const SweepResult& result) {
    out << kCsvHeader << '\n';
    for (const SweepRow& row : result.rows) out << csv_line(row) << '\n';
}

void write_json(std::ostream& out, const SweepResult& result) {
    JsonSink sink(out);
    for (const SweepRow& row : result.rows) sink.write(row);
    sink.finish();
}

SweepResult read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader)
        throw std::runtime_error("read_csv: missing or unexpected header");
    SweepResult result;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        for (int i = 0; i < 7; ++i) {
            const auto comma = line.find(',', pos);
            if (comma == std::string::npos) throw std::runtime_error("read_csv: short row: " + line);
            fields.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        fields.push_back(line.substr(pos));  // warnings, may contain ';'

        SweepRow row;
        row.sweep_value = parse_double(fields[0], "sweep_value");
        row.mode = mode_from_name(fields[1]);
        row.mean_n = parse_double(fields[2], "mean_n");
        const double g2 = parse_double(fields[3], "g2");
        if (std::isfinite(g2)) row.g2 = g2;
        row.n_max_used = int(parse_long(fields[4], "n_max_used"));
        row.tail_mass = parse_double(fields[5], "tail_mass");
        row.residual = parse_double(fields[6], "residual");
        std::stringstream ws(fields[7]);
        std::string w;
        while (std::getline(ws, w, ';'))
            if (!w.empty()) row.warnings.push_back(w);
        for (const auto& msg : row.warnings)
            if (msg.rfind("error:", 0) == 0) row.failed = true;
        result.rows.push_back(std::move(row));
    }
    return result;
}

SweepResult read_json(std::istream& in) {
    nlohmann::json doc = nlohmann::json::parse(in);
    if (!doc.is_array()) throw std::runtime_error("read_json: expected an array of records");
    SweepResult result;
    for (const auto& j : doc) result.rows.push_back(row_from_json(j));
    return result;
}

namespace {

struct Curve {
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<std::optional<double>> g2;
};

Curve extract(const SweepResult& result, Mode mode) {
    Curve c;
    for (const SweepRow& row : result.rows) {
        if (row.mode != mode || row.failed || !std::isfinite(row.mean_n)) continue;
        c.x.push_back(row.sweep_value);
        c.mean.push_back(row.mean_n);
        c.g2.push_back(row.g2);
    }
    return c;
}

// A point counts as cooling only when it beats the bath occupation by more
// than solver noise; the margin is far below any physical dip.
double cooling_threshold(double nbar) { return nbar * (1.0 - 1e-7); }

// Length of {x : mean(x) < threshold} under linear interpolation between points.
double cooling_bandwidth(const Curve& c, double nbar) {
    const double thr = cooling_threshold(nbar);
    double width = 0.0;
    for (std::size_t i = 0; i + 1 < c.x.size(); ++i) {
        const double dx = c.x[i + 1] - c.x[i];
        const bool below0 = c.mean[i] < thr;
        const bool below1 = c.mean[i + 1] < thr;
        if (below0 && below1) {
            width += dx;
        } else if (below0 != below1) {
            const double t = (thr - c.mean[i]) / (c.mean[i + 1] - c.mean[i]);
            width += below0 ? dx * t : dx * (1.0 - t);
        }
    }
    return width;
}

double argmin_of(const Curve& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.x.size(); ++i)
        if (c.mean[i] < c.mean[best]) best = i;
    return c.x[best];
}

std::optional<double> max_g2_cooling(const Curve& c, double nbar) {
    const double thr = cooling_threshold(nbar);
    std::optional<double> best;
    for (std::size_t i = 0; i < c.x.size(); ++i)
        if (c.mean[i] < thr && c.g2[i] && (!best || *c.g2[i] > *best)) best = c.g2[i];
    return best;
}

}  // namespace

CompareReport compare_modes(const SweepResult& result, double nbar) {
    const Curve sec = extract(result, Mode::secular);
    const Curve bey = extract(result, Mode::beyond_secular);
    if (sec.x.empty() || bey.x.empty())
        throw std::runtime_error("compare_modes: both secular and beyond_secular modes are required");

    CompareReport rep;
    rep.nbar = nbar;
    for (std::size_t i = 0; i < sec.x.size(); ++i) {
        for (std::size_t j = 0; j < bey.x.size(); ++j) {
            if (bey.x[j] == sec.x[i]) {
                rep.sweep_values.push_back(sec.x[i]);
                rep.abs_mean_diff.push_back(std::abs(bey.mean[j] - sec.mean[i]));
                break;
            }
        }
    }
    rep.argmin_secular = argmin_of(sec);
    rep.argmin_beyond = argmin_of(bey);
    rep.argmin_shift = std::abs(rep.argmin_beyond - rep.argmin_secular);
    rep.bandwidth_secular = cooling_bandwidth(sec, nbar);
    rep.bandwidth_beyond = cooling_bandwidth(bey, nbar);
    rep.max_g2_cooling_secular = max_g2_cooling(sec, nbar);
    rep.max_g2_cooling_beyond = max_g2_cooling(bey, nbar);
    return rep;
}

void print_report(std::ostream& out, const CompareReport& rep) {
    out << "bath occupation nbar        " << fmt17(rep.nbar) << '\n';
    out << "argmin <n> (secular)        " << fmt17(rep.argmin_secular) << '\n';
    out << "argmin <n> (beyond)         " << fmt17(rep.argmin_beyond) << '\n';
    out << "argmin shift                " << fmt17(rep.argmin_shift) << '\n';
    out << "cooling bandwidth (secular) " << fmt17(rep.bandwidth_secular) << '\n';
    out << "cooling bandwidth (beyond)  " << fmt17(rep.bandwidth_beyond) << '\n';
    out << "max g2 in cooling (secular) "
        << (rep.max_g2_cooling_secular ? fmt17(*rep.max_g2_cooling_secular) : "none") << '\n';
    out << "max g2 in cooling (beyond)  "
        << (rep.max_g2_cooling_beyond ? fmt17(*rep.max_g2_cooling_beyond) : "none") << '\n';
    double max_diff = 0.0;
    for (double d : rep.abs_mean_diff) max_diff = std::max(max_diff, d);
    out << "max |<n>_beyond - <n>_sec|  " << fmt17(max_diff) << '\n';
    out << '\n' << "per-point |<n>_beyond - <n>_secular|" << '\n';
    for (std::size_t i = 0; i < rep.sweep_values.size(); ++i)
        out << fmt17(rep.sweep_values[i]) << ' ' << fmt17(rep.abs_mean_diff[i]) << '\n';
}

bool selftest(std::uint64_t seed, std::ostream& out) {
    bool ok = true;
    auto report = [&](const char* name, bool pass, const std::string& detail) {
        out << (pass ? "[ ok ] " : "[fail] ") << name << " (" << detail << ")\n";
        ok = ok && pass;
    };

    ModelParams base;
    base.omega_ph = 2.0;
    base.rabi = 1.0;
    base.gamma = 0.05;
    base.gamma_c = 0.01;
    base.kappa = 0.5;
    base.nbar = 1.0;

    // Thermal fixed point: no coupling, the cavity equilibrates with the bath.
    {
        ModelParams p = base;
        p.g = 0.0;
        p.delta = 1.0;
        double worst_mean = 0.0, worst_g2 = 0.0;
        for (bool secular : {true, false}) {
            const SteadyState ss = solve_adaptive(dress(p, secular), p, 1e-12, 8);
            const PhononStats st = observables(ss);
            worst_mean = std::max(worst_mean, std::abs(st.mean_n - 1.0));
            worst_g2 = std::max(worst_g2, std::abs(st.g2.value() - 2.0));
        }
        report("thermal fixed point", worst_mean < 1e-9 && worst_g2 < 1e-8,
               "|<n>-1| = " + fmt17(worst_mean) + "; |g2-2| = " + fmt17(worst_g2));
    }

    // Reduced steady state against the dressed-Liouvillian null space on the
    // same truncated space.
    {
        ModelParams p = base;
        p.g = 0.05;
        double worst = 0.0;
        for (double delta : {-1.0, 0.5, 2.0}) {
            p.delta = delta;
            for (bool secular : {true, false}) {
                const DressedParams dp = dress(p, secular);
                const SteadyState ss = solve_steady(assemble(dp, p, 12));
                const auto ns = oracle::steady_state_null(oracle::build_dressed_liouvillian(dp, p, 12));
                const std::vector<double> po = oracle::phonon_populations(ns.rho);
                for (int n = 0; n <= 12; ++n)
                    worst = std::max(worst, std::abs(ss.value(1, n) - po[n]));
            }
        }
        report("oracle equivalence", worst < 1e-8, "max |P_n difference| = " + fmt17(worst));
    }

    // Projection identity: the reduced generator reproduces the projected
    // action of the full Liouvillian on random sector states.
    {
        ModelParams p = base;
        p.g = 0.3;
        p.delta = 0.8;
        const int n_max = 10;
        double worst = 0.0;
        for (bool secular : {true, false}) {
            const DressedParams dp = dress(p, secular);
            const ReducedGenerator gen = assemble(dp, p, n_max);
            const auto liouv = oracle::build_dressed_liouvillian(dp, p, n_max);
            for (int k = 0; k < 25; ++k) {
                const Eigen::MatrixXcd rho =
                    oracle::random_sector_state(n_max, seed + 977u * k + (secular ? 0 : 1));
                const Eigen::VectorXd lhs = oracle::project_six_variables(oracle::apply(liouv, rho));
                const Eigen::VectorXd rhs = gen.matrix * oracle::project_six_variables(rho);
                worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>());
            }
        }
        report("projection identity", worst < 1e-10, "max defect = " + fmt17(worst));
    }

    return ok;
}

}  // namespace qdcool
