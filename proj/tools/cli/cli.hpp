#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "experiment_config.hpp"

namespace msol::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// One trained model: which loss, which sweep value (if any), which seed.
struct RunResult {
    std::string loss;
    std::optional<double> value;
    std::uint64_t seed = 0;
    EvalMetrics test;
    std::size_t convergence_epoch = 0;
    double seconds = 0.0;
};

struct Summary {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation, 0 for a single run
    double min = 0.0;
    double max = 0.0;
    double range() const { return max - min; }
};
Summary summarize(const std::vector<double>& xs);

/// Raw rows plus per-(loss, value) aggregates recomputed from them.
class ResultsTable {
public:
    void add(RunResult row);
    /// Rows ordered by (loss, value, seed) regardless of insertion order.
    const std::vector<RunResult>& rows() const noexcept { return rows_; }

    struct Group {
        std::string loss;
        std::optional<double> value;
        std::vector<const RunResult*> runs;
    };
    std::vector<Group> groups() const;

    /// Metric columns shared by every table, in output order.
    static const std::vector<std::string>& metric_names();
    static double metric(const RunResult& r, const std::string& name);

    void write_runs_csv(const std::filesystem::path& path) const;
    /// loss,value,metric,runs,mean,std,min,max,range
    void write_aggregate_csv(const std::filesystem::path& path) const;

private:
    std::vector<RunResult> rows_;
};

/// Runs `count` independent tasks on up to `jobs` threads; task i writes
/// only its own slot, so the gathered order never depends on scheduling.
void run_jobs(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msol::cli
