#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdcool/sweep.hpp"

using namespace qdcool;

namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.params.omega_ph = 2.0;
    cfg.params.rabi = 1.0;
    cfg.params.g = 0.3;
    cfg.params.gamma = 0.05;
    cfg.params.gamma_c = 0.01;
    cfg.params.kappa = 0.5;
    cfg.params.nbar = 1.0;
    cfg.sweep_axis = "delta";
    cfg.sweep_lo = -1.0;
    cfg.sweep_hi = 2.0;
    cfg.sweep_points = 7;
    cfg.modes = {Mode::secular, Mode::beyond_secular};
    cfg.tail_tol = 1e-9;
    cfg.n_start = 8;
    return cfg;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

bool rows_equal(const SweepRow& a, const SweepRow& b) {
    auto same = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    if (!same(a.sweep_value, b.sweep_value) || a.mode != b.mode) return false;
    if (!same(a.mean_n, b.mean_n)) return false;
    if (a.g2.has_value() != b.g2.has_value()) return false;
    if (a.g2 && *a.g2 != *b.g2) return false;
    if (a.n_max_used != b.n_max_used) return false;
    if (!same(a.tail_mass, b.tail_mass) || !same(a.residual, b.residual)) return false;
    std::string wa, wb;
    for (const auto& w : a.warnings) wa += w + ";";
    for (const auto& w : b.warnings) wb += w + ";";
    return wa == wb;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("config files round into validated configs") {
    const std::string path = write_temp("qdcool_cfg_good.cfg", R"(# canonical fixture, moderate coupling
omega_ph = 2.0
delta = 0.0
rabi = 1.0
g = 0.3
gamma = 0.05
gamma_c = 0.01
kappa = 0.5
nbar = 1.0
sweep_axis = delta
sweep_lo = -3.0
sweep_hi = 3.0
sweep_points = 121
modes = secular, beyond_secular
tail_tol = 1e-10
n_start = 8
n_cap = 4096
output = out.csv
format = csv
seed = 99
unit_scale = 1.0
)");
    const RunConfig cfg = RunConfig::from_file(path);
    CHECK(cfg.params.g == 0.3);
    CHECK(cfg.sweep_points == 121);
    CHECK(cfg.modes.size() == 2);
    CHECK(cfg.seed == 99);

    const std::string bad_key = write_temp("qdcool_cfg_badkey.cfg", "omega = 2.0\n");
    CHECK_THROWS(RunConfig::from_file(bad_key));
    const std::string bad_val = write_temp("qdcool_cfg_badval.cfg", "omega_ph = fast\n");
    CHECK_THROWS(RunConfig::from_file(bad_val));
    const std::string bad_mode = write_temp("qdcool_cfg_badmode.cfg", "modes = secular, laplace\n");
    CHECK_THROWS(RunConfig::from_file(bad_mode));
}

TEST_CASE("single thermal point") {
    RunConfig cfg = small_config();
    cfg.params.g = 0.0;
    cfg.sweep_points = 1;
    cfg.sweep_lo = cfg.sweep_hi = 0.0;
    cfg.modes = {Mode::secular};
    const SweepResult res = run(cfg);
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].mean_n == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.rows[0].g2.value() == doctest::Approx(2.0).epsilon(1e-8));

    // same point reached through the g axis
    RunConfig gax = small_config();
    gax.sweep_axis = "g";
    gax.sweep_points = 1;
    gax.sweep_lo = gax.sweep_hi = 0.0;
    gax.params.delta = 0.7;
    gax.modes = {Mode::secular};
    const SweepResult gres = run(gax);
    REQUIRE(gres.rows.size() == 1);
    CHECK(gres.rows[0].mean_n == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rows are ordered by point then mode") {
    RunConfig cfg = small_config();
    cfg.sweep_points = 3;
    cfg.modes = {Mode::beyond_secular, Mode::secular};  // listed out of order
    const SweepResult res = run(cfg);
    REQUIRE(res.rows.size() == 6);
    for (int k = 0; k < 3; ++k) {
        CHECK(res.rows[2 * k].mode == Mode::secular);
        CHECK(res.rows[2 * k + 1].mode == Mode::beyond_secular);
        CHECK(res.rows[2 * k].sweep_value == res.rows[2 * k + 1].sweep_value);
    }
}

TEST_CASE("output bytes are identical across runs and thread counts") {
    RunConfig cfg = small_config();
    cfg.sweep_points = 9;
    std::string csv[3];
    const int threads[3] = {1, 1, 4};
    for (int i = 0; i < 3; ++i) {
        std::ostringstream out;
        CsvSink sink(out);
        run(cfg, threads[i], &sink);
        csv[i] = out.str();
    }
    CHECK(csv[0] == csv[1]);
    CHECK(csv[0] == csv[2]);
}

TEST_CASE("csv and json encodings carry the same rows") {
    RunConfig cfg = small_config();
    cfg.sweep_points = 5;
    cfg.modes = {Mode::secular, Mode::beyond_secular};
    const SweepResult res = run(cfg, 2);

    std::stringstream csv, json;
    write_csv(csv, res);
    write_json(json, res);
    const SweepResult from_csv = read_csv(csv);
    const SweepResult from_json = read_json(json);
    REQUIRE(from_csv.rows.size() == res.rows.size());
    REQUIRE(from_json.rows.size() == res.rows.size());
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        CHECK(rows_equal(from_csv.rows[i], from_json.rows[i]));
        CHECK(rows_equal(from_csv.rows[i], res.rows[i]));
    }
}

TEST_CASE("failed points are kept with error markers") {
    RunConfig cfg = small_config();
    cfg.sweep_axis = "nbar";
    cfg.sweep_lo = -0.5;  // negative bath occupation is invalid
    cfg.sweep_hi = 0.5;
    cfg.sweep_points = 3;
    cfg.modes = {Mode::secular};
    const SweepResult res = run(cfg);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.rows[0].failed);
    CHECK(std::isnan(res.rows[0].mean_n));
    REQUIRE(!res.rows[0].warnings.empty());
    CHECK(res.rows[0].warnings[0].rfind("error:", 0) == 0);
    CHECK(!res.rows[2].failed);

    // error markers survive both encodings
    std::stringstream csv, json;
    write_csv(csv, res);
    write_json(json, res);
    for (const SweepResult& parsed : {read_csv(csv), read_json(json)}) {
        REQUIRE(parsed.rows.size() == 3);
        CHECK(parsed.rows[0].failed);
        CHECK(std::isnan(parsed.rows[0].mean_n));
        CHECK(rows_equal(parsed.rows[0], res.rows[0]));
    }
}

TEST_CASE("compare: vanishing coupling gives identical modes and no cooling") {
    RunConfig cfg = small_config();
    cfg.params.g = 1e-7;  // fast-term corrections below 1e-15
    cfg.sweep_points = 11;
    cfg.tail_tol = 1e-11;
    const SweepResult res = run(cfg, 2);
    const CompareReport rep = compare_modes(res, cfg.params.nbar);
    const double spacing = (cfg.sweep_hi - cfg.sweep_lo) / (cfg.sweep_points - 1);
    CHECK(rep.argmin_shift <= spacing + 1e-12);
    double max_diff = 0.0;
    for (double d : rep.abs_mean_diff) max_diff = std::max(max_diff, d);
    CHECK(max_diff < 1e-10);

    // no coupling at all: no cooling bandwidth on either side
    RunConfig thermal = cfg;
    thermal.params.g = 0.0;
    const CompareReport rep0 = compare_modes(run(thermal, 2), thermal.params.nbar);
    CHECK(rep0.bandwidth_secular == 0.0);
    CHECK(rep0.bandwidth_beyond == 0.0);
}

TEST_CASE("compare: moderate coupling shifts and deepens the cooling minimum") {
    // Recorded fixture outcome (g = 0.3, kappa = 0.5, nbar = 1): the cooling
    // minimum sits near delta = 1.42 (secular) vs 1.43 (beyond), about 0.012
    // apart; the beyond-secular minimum is deeper; the bandwidths at the nbar
    // level agree to eight digits, so the wider-range property is asserted as
    // `>=` within solver tolerance.
    RunConfig cfg = small_config();
    cfg.sweep_lo = 0.4;
    cfg.sweep_hi = 2.6;
    cfg.sweep_points = 441;
    const double spacing = (cfg.sweep_hi - cfg.sweep_lo) / (cfg.sweep_points - 1);
    const SweepResult res = run(cfg, 4);
    const CompareReport rep = compare_modes(res, cfg.params.nbar);

    CHECK(rep.argmin_shift > spacing);
    CHECK(rep.argmin_secular == doctest::Approx(1.42).epsilon(0.02));
    CHECK(rep.bandwidth_beyond >= rep.bandwidth_secular - 1e-6);
    CHECK(rep.max_g2_cooling_secular.value() > 2.0);
    CHECK(rep.max_g2_cooling_beyond.value() > 2.0);

    double min_sec = 1e300, min_bey = 1e300;
    for (const SweepRow& row : res.rows)
        (row.mode == Mode::secular ? min_sec : min_bey) = std::min(
            row.mode == Mode::secular ? min_sec : min_bey, row.mean_n);
    CHECK(min_bey < min_sec);          // fast terms enhance the cooling
    CHECK(min_bey < cfg.params.nbar);  // and it is genuine cooling
}

TEST_CASE("compare requires both modes") {
    RunConfig cfg = small_config();
    cfg.sweep_points = 3;
    cfg.modes = {Mode::secular};
    const SweepResult res = run(cfg);
    CHECK_THROWS(compare_modes(res, 1.0));
}

TEST_CASE("oracle modes ride along in a sweep") {
    RunConfig cfg = small_config();
    cfg.sweep_points = 1;
    cfg.sweep_lo = cfg.sweep_hi = 1.4;
    cfg.modes = {Mode::secular, Mode::beyond_secular, Mode::oracle_dressed, Mode::oracle_labframe};
    const SweepResult res = run(cfg);
    REQUIRE(res.rows.size() == 4);
    for (const SweepRow& row : res.rows) CHECK(!row.failed);
    // the dressed oracle solves the same beyond-secular model
    CHECK(res.rows[2].mean_n == doctest::Approx(res.rows[1].mean_n).epsilon(1e-6));
    // the lab-frame reference sees the same cooling within the dressed error
    CHECK(res.rows[3].mean_n < cfg.params.nbar);
    CHECK(std::abs(res.rows[3].mean_n - res.rows[1].mean_n) < 0.02);
}

}  // TEST_SUITE
