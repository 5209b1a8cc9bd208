#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtlsched/il_loop.hpp"
#include "mtlsched/tasks.hpp"

namespace mtlsched {

struct CsvTaskPaths {
    std::string main;
    std::vector<std::string> aux;
    std::string val;
    TaskKind kind = TaskKind::regression;
};

struct ExperimentConfig {
    LoopConfig loop;
    std::optional<SuiteConfig> suite;  // exactly one of suite / csv
    std::optional<CsvTaskPaths> csv;
    std::vector<ScheduleKind> schedules;  // compare list, >= 2 entries
    std::vector<std::uint64_t> seeds;     // compare seeds
    std::string output_dir = "out";
};

// Strict load: unknown keys, type mismatches and range violations raise
// ConfigError naming the offending key.
ExperimentConfig load_experiment_config(const std::string& path);

// Datasets for one run.  Synthetic suites derive from the seed's data stream,
// so runs that share a seed share their data regardless of schedule.
std::pair<std::vector<Task>, Dataset> build_tasks(const ExperimentConfig& cfg,
                                                  std::uint64_t seed);

void write_training_log(const TrainingLog& log, const std::string& path);
void write_run_summary(const TrainingLog& log, ScheduleKind schedule, std::uint64_t seed,
                       const std::string& path);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

// Exit codes: 0 success, 2 invalid config (message names the key),
// 1 runtime numeric failure (message names the failing step).
int run_experiment(const std::string& config_path, const CliOverrides& overrides = {});

// Runs every listed schedule on identical task data and seeds; writes
// comparison.csv (schedule, seed, final_val_loss, steps) and ranking.csv.
int compare_schedules(const std::string& config_path, const CliOverrides& overrides = {});

}  // namespace mtlsched
