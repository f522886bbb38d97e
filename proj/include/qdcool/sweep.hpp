// sweep.hpp — Parameter sweeps, tabular output and mode comparison

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdcool/model.hpp"

namespace qdcool {

enum class Mode { secular, beyond_secular, oracle_dressed, oracle_labframe };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

// Run configuration, loadable from a flat key = value file (see README for
// the schema). Nothing is read from the environment.
struct RunConfig {
    ModelParams params;
    std::string sweep_axis = "delta";  // delta | g | nbar
    double sweep_lo = -3.0;
    double sweep_hi = 3.0;
    int sweep_points = 121;
    std::vector<Mode> modes = {Mode::secular, Mode::beyond_secular};
    double tail_tol = 1e-10;
    int n_start = 8;
    int n_cap = 4096;
    std::string output = "sweep.csv";
    std::string format = "csv";  // csv | json
    std::uint64_t seed = 12345;
    double unit_scale = 1.0;  // documentation only: physical rate one unit denotes

    static RunConfig from_file(const std::string& path);
    void validate() const;
};

// One record per (sweep point, mode). Failed points keep their slot: the
// numeric fields go NaN and warnings gains an "error: ..." entry.
struct SweepRow {
    double sweep_value = 0.0;
    Mode mode = Mode::secular;
    double mean_n = 0.0;
    std::optional<double> g2;  // empty <-> "nan" in CSV, null in JSON
    int n_max_used = 0;
    double tail_mass = 0.0;
    double residual = 0.0;
    std::vector<std::string> warnings;
    bool failed = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // ordered by (point, canonical mode order)
};

// Receives rows in final order as points complete, so partial output survives
// an interrupted run.
class RowSink {
  public:
    virtual ~RowSink() = default;
    virtual void write(const SweepRow& row) = 0;
    virtual void finish() {}
};

// Evaluates every (point, mode) pair. Points run in parallel on `threads`
// workers; rows are emitted in deterministic order regardless of thread
// count, and the output bytes are identical across runs.
SweepResult run(const RunConfig& config, int threads = 1, RowSink* sink = nullptr);

void write_csv(std::ostream& out, const SweepResult& result);
void write_json(std::ostream& out, const SweepResult& result);
SweepResult read_csv(std::istream& in);
SweepResult read_json(std::istream& in);

// Sinks for incremental file output.
class CsvSink : public RowSink {
  public:
    explicit CsvSink(std::ostream& out);
    void write(const SweepRow& row) override;

  private:
    std::ostream& out_;
};

class JsonSink : public RowSink {
  public:
    explicit JsonSink(std::ostream& out);
    void write(const SweepRow& row) override;
    void finish() override;

  private:
    std::ostream& out_;
    bool first_ = true;
};

struct CompareReport {
    double nbar = 0.0;
    std::vector<double> sweep_values;
    std::vector<double> abs_mean_diff;  // |<n>_beyond - <n>_secular| per point
    double argmin_secular = 0.0;        // sweep value of minimum <n>
    double argmin_beyond = 0.0;
    double argmin_shift = 0.0;
    double bandwidth_secular = 0.0;  // measure of {x : <n>(x) < nbar}
    double bandwidth_beyond = 0.0;
    std::optional<double> max_g2_cooling_secular;  // max g2 where <n> < nbar
    std::optional<double> max_g2_cooling_beyond;
};

// Requires both the secular and beyond_secular modes in `result`. Rows with
// error markers are excluded from the analysis.
CompareReport compare_modes(const SweepResult& result, double nbar);
void print_report(std::ostream& out, const CompareReport& report);

// Quick oracle-equivalence and thermal-fixed-point suites; prints one line
// per check and returns false if any fails.
bool selftest(std::uint64_t seed, std::ostream& out);

}  // namespace qdcool
