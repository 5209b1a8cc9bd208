#include "mtlsched/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "mtlsched/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mtlsched {

namespace {

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

bool verbose_enabled() {
    const char* v = std::getenv("MTLSCHED_VERBOSE");
    return v != nullptr && std::strcmp(v, "") != 0 && std::strcmp(v, "0") != 0;
}

// Strict accessor over one JSON object: typed getters record which keys they
// touched, finish() rejects the rest by full path.
class ConfigReader {
  public:
    ConfigReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
    }

    bool has(const char* key) const {
        used_.insert(key);
        return obj_.contains(key);
    }

    const json& at(const char* key) const {
        used_.insert(key);
        if (!obj_.contains(key)) throw ConfigError("missing key '" + full(key) + "'");
        return obj_.at(key);
    }

    std::string full(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

    double real(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_number()) throw ConfigError("'" + full(key) + "' must be a number");
        return v.get<double>();
    }

    std::size_t size(const char* key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        return to_size(obj_.at(key), key);
    }

    std::uint64_t u64(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return to_u64(obj_.at(key), key);
    }

    std::string str(const char* key, std::string fallback) const {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_string()) throw ConfigError("'" + full(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::size_t to_size(const json& v, const char* key) const {
        if (v.is_number_unsigned()) return v.get<std::size_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            return static_cast<std::size_t>(v.get<std::int64_t>());
        }
        throw ConfigError("'" + full(key) + "' must be a nonnegative integer");
    }

    std::uint64_t to_u64(const json& v, const char* key) const {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        }
        throw ConfigError("'" + full(key) + "' must be a nonnegative integer");
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!used_.count(item.key())) {
                throw ConfigError("unknown key '" + full(item.key().c_str()) + "'");
            }
        }
    }

    const json& raw() const { return obj_; }
    const std::string& path() const { return path_; }

  private:
    const json& obj_;
    std::string path_;
    mutable std::set<std::string> used_;
};

TaskKind parse_kind(const std::string& s, const std::string& key) {
    if (s == "regression") return TaskKind::regression;
    if (s == "classification") return TaskKind::classification;
    throw ConfigError("'" + key + "' must be regression or classification, got '" + s + "'");
}

ScheduleKind parse_schedule(const std::string& s, const std::string& key) {
    const std::optional<ScheduleKind> kind = schedule_from_string(s);
    if (!kind) throw ConfigError("'" + key + "' names no schedule: '" + s + "'");
    return *kind;
}

OptimizerState parse_optimizer(const ConfigReader& r, const char* kind_key,
                               const char* lr_key, const OptimizerState& fallback) {
    const std::string kind = r.str(kind_key, fallback.kind == OptimizerKind::adam ? "adam"
                                                                                  : "sgd");
    const double lr = r.real(lr_key, fallback.learning_rate);
    if (kind == "adam") return make_adam(lr);
    if (kind == "sgd") return make_sgd(lr);
    throw ConfigError("'" + r.full(kind_key) + "' must be adam or sgd, got '" + kind + "'");
}

LoopConfig parse_loop(const json& obj) {
    ConfigReader r(obj, "loop");
    LoopConfig cfg;
    cfg.beta = r.real("beta", cfg.beta);
    cfg.gamma = r.real("gamma", cfg.gamma);
    cfg.minibatch_size = r.size("minibatch_size", cfg.minibatch_size);
    cfg.val_minibatch_size = r.size("val_minibatch_size", cfg.val_minibatch_size);
    cfg.max_steps = r.size("max_steps", cfg.max_steps);
    if (r.has("trunk_hidden")) {
        const json& arr = r.at("trunk_hidden");
        if (!arr.is_array()) throw ConfigError("'loop.trunk_hidden' must be an array");
        cfg.trunk_hidden.clear();
        for (const json& v : arr) cfg.trunk_hidden.push_back(r.to_size(v, "trunk_hidden"));
    }
    cfg.model_opt = parse_optimizer(r, "model_optimizer", "model_lr", cfg.model_opt);
    cfg.sched_opt = parse_optimizer(r, "sched_optimizer", "sched_lr", cfg.sched_opt);
    const std::string loss = r.str("sched_loss", "l1");
    if (loss == "l1") {
        cfg.sched_loss = LossKind::l1;
    } else if (loss == "kl") {
        cfg.sched_loss = LossKind::kl;
    } else {
        throw ConfigError("'loop.sched_loss' must be l1 or kl, got '" + loss + "'");
    }
    cfg.sched_hidden = r.size("sched_hidden", cfg.sched_hidden);
    cfg.sched_batch_size = r.size("sched_batch_size", cfg.sched_batch_size);
    cfg.replay_capacity = r.size("replay_capacity", cfg.replay_capacity);
    cfg.schedule = parse_schedule(r.str("schedule", "learned"), "loop.schedule");
    cfg.alpha = r.real("alpha", cfg.alpha);
    cfg.mixture_base =
        parse_schedule(r.str("mixture_base", "constant"), "loop.mixture_base");
    cfg.reward_cadence = r.size("reward_cadence", cfg.reward_cadence);
    cfg.patience = r.size("patience", cfg.patience);
    cfg.eta = r.real("eta", cfg.eta);
    cfg.seed = r.u64("seed", cfg.seed);
    r.finish();
    return cfg;
}

SuiteConfig parse_suite(const json& obj) {
    ConfigReader r(obj, "suite");
    SuiteConfig cfg;
    cfg.input_dim = r.size("input_dim", cfg.input_dim);
    cfg.kind = parse_kind(r.str("kind", "regression"), "suite.kind");
    cfg.main_train_size = r.size("main_train_size", cfg.main_train_size);
    cfg.val_size = r.size("val_size", cfg.val_size);
    cfg.noise_sigma = r.real("noise_sigma", cfg.noise_sigma);
    cfg.label_flip_prob = r.real("label_flip_prob", cfg.label_flip_prob);
    if (r.has("aux")) {
        const json& arr = r.at("aux");
        if (!arr.is_array()) throw ConfigError("'suite.aux' must be an array");
        std::size_t i = 0;
        for (const json& v : arr) {
            ConfigReader ar(v, "suite.aux[" + std::to_string(i) + "]");
            SuiteConfig::Aux aux;
            aux.relatedness = ar.real("relatedness", aux.relatedness);
            aux.train_size = ar.size("train_size", aux.train_size);
            ar.finish();
            cfg.aux.push_back(aux);
            ++i;
        }
    }
    r.finish();
    return cfg;
}

CsvTaskPaths parse_csv(const json& obj) {
    ConfigReader r(obj, "csv");
    CsvTaskPaths paths;
    paths.main = r.str("main", "");
    if (paths.main.empty()) throw ConfigError("'csv.main' is required");
    paths.val = r.str("val", "");
    if (paths.val.empty()) throw ConfigError("'csv.val' is required");
    paths.kind = parse_kind(r.str("kind", "regression"), "csv.kind");
    if (r.has("aux")) {
        const json& arr = r.at("aux");
        if (!arr.is_array()) throw ConfigError("'csv.aux' must be an array");
        for (const json& v : arr) {
            if (!v.is_string()) throw ConfigError("'csv.aux' entries must be strings");
            paths.aux.push_back(v.get<std::string>());
        }
    }
    r.finish();
    return paths;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }

    ExperimentConfig cfg;
    try {
        ConfigReader r(root, "");
        if (r.has("loop")) cfg.loop = parse_loop(r.at("loop"));
        if (r.has("suite")) cfg.suite = parse_suite(r.at("suite"));
        if (r.has("csv")) cfg.csv = parse_csv(r.at("csv"));
        if (r.has("schedules")) {
            const json& arr = r.at("schedules");
            if (!arr.is_array()) throw ConfigError("'schedules' must be an array");
            for (const json& v : arr) {
                if (!v.is_string()) throw ConfigError("'schedules' entries must be strings");
                cfg.schedules.push_back(parse_schedule(v.get<std::string>(), "schedules"));
            }
        }
        if (r.has("seeds")) {
            const json& arr = r.at("seeds");
            if (!arr.is_array()) throw ConfigError("'seeds' must be an array");
            for (const json& v : arr) cfg.seeds.push_back(r.to_u64(v, "seeds"));
        }
        cfg.output_dir = r.str("output_dir", cfg.output_dir);
        r.finish();
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }

    if (cfg.suite && cfg.csv) {
        throw ConfigError("config sets both 'suite' and 'csv'; pick one");
    }
    if (!cfg.suite && !cfg.csv) {
        throw ConfigError("config needs a 'suite' or a 'csv' section");
    }
    try {
        validate(cfg.loop);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("loop config: ") + e.what());
    }
    return cfg;
}

std::pair<std::vector<Task>, Dataset> build_tasks(const ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
    if (cfg.suite) {
        SyntheticSuite suite = make_synthetic_suite(*cfg.suite, seed);
        return {std::move(suite.tasks), std::move(suite.validation)};
    }

    const CsvTaskPaths& paths = *cfg.csv;
    CsvSchema schema;
    schema.kind = paths.kind;
    std::vector<Task> tasks;
    Task main_task;
    main_task.id = 0;
    main_task.kind = paths.kind;
    main_task.role = TaskRole::main;
    main_task.train = load_task_csv(paths.main, schema);
    tasks.push_back(std::move(main_task));
    for (std::size_t j = 0; j < paths.aux.size(); ++j) {
        Task aux;
        aux.id = static_cast<int>(j) + 1;
        aux.kind = paths.kind;
        aux.role = TaskRole::auxiliary;
        aux.train = load_task_csv(paths.aux[j], schema);
        tasks.push_back(std::move(aux));
    }
    Dataset val = load_task_csv(paths.val, schema);

    const Matrix& train_inputs = tasks[0].train.inputs;
    if (val.inputs.cols == train_inputs.cols) {
        for (std::size_t r = 0; r < val.inputs.rows; ++r) {
            for (std::size_t tr = 0; tr < train_inputs.rows; ++tr) {
                bool same = true;
                for (std::size_t c = 0; c < val.inputs.cols && same; ++c) {
                    same = val.inputs(r, c) == train_inputs(tr, c);
                }
                if (same) {
                    throw ArgumentError("validation row " + std::to_string(r + 1) +
                                        " duplicates a main training row");
                }
            }
        }
    }
    return {std::move(tasks), std::move(val)};
}

void write_training_log(const TrainingLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const StepRecord& rec : log.steps) {
        json line;
        line["t"] = rec.t;
        line["source"] = to_string(rec.source);
        line["task"] = rec.task;
        line["loss"] = rec.loss;
        line["reward"] = rec.reward;  // NaN serializes as null
        line["weights"] = rec.weights;
        line["l_ma"] = rec.l_ma;
        out << line.dump() << '\n';
    }
    if (!out) throw IoError("short write to '" + path + "'");
}

void write_run_summary(const TrainingLog& log, ScheduleKind schedule, std::uint64_t seed,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "schedule,seed,steps,initial_val_loss,final_val_loss,oracle_queries\n";
    out << to_string(schedule) << ',' << seed << ',' << log.steps.size() << ','
        << fmt_double(log.initial_val_loss) << ',' << fmt_double(log.final_val_loss) << ','
        << log.oracle_queries << '\n';
    if (!out) throw IoError("short write to '" + path + "'");
}

namespace {

void write_run_meta(const std::string& path, ScheduleKind schedule, std::uint64_t seed,
                    double wall_ms) {
    // Wall-clock time lives here, outside the deterministic summary files.
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    json meta;
    meta["schedule"] = to_string(schedule);
    meta["seed"] = seed;
    meta["wall_ms"] = wall_ms;
    out << meta.dump(2) << '\n';
}

void print_eval_lines(const TrainingLog& log) {
    for (const StepRecord& rec : log.steps) {
        if (std::isnan(rec.reward)) continue;
        std::cerr << "step " << rec.t << " source=" << to_string(rec.source)
                  << " task=" << rec.task << " loss=" << fmt_double(rec.loss)
                  << " reward=" << fmt_double(rec.reward) << '\n';
    }
}

struct RunOutput {
    TrainingLog log;
    double wall_ms = 0.0;
};

RunOutput run_one(const ExperimentConfig& cfg, ScheduleKind schedule, std::uint64_t seed,
                  const fs::path& dir, bool with_checkpoints) {
    LoopConfig loop = cfg.loop;
    loop.schedule = schedule;
    loop.seed = seed;

    auto [tasks, val] = build_tasks(cfg, seed);
    const auto start = std::chrono::steady_clock::now();
    TrainingResult result = run_training(loop, tasks, val);
    const auto end = std::chrono::steady_clock::now();

    fs::create_directories(dir);
    write_run_summary(result.log, schedule, seed, (dir / "summary.csv").string());
    write_training_log(result.log, (dir / "log.jsonl").string());
    if (with_checkpoints) {
        save_model_checkpoint(result.model, (dir / "model.meta.json").string(),
                              (dir / "model.params.bin").string());
        save_scheduler_checkpoint(result.net, (dir / "scheduler.meta.json").string(),
                                  (dir / "scheduler.params.bin").string());
    }

    RunOutput out;
    out.log = std::move(result.log);
    out.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
    write_run_meta((dir / "run_meta.json").string(), schedule, seed, out.wall_ms);
    return out;
}

int classify_and_report(const char* stage) {
    try {
        throw;
    } catch (const ConfigError& e) {
        std::cerr << stage << " config error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << stage << " config error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << stage << " config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << stage << " numeric failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << stage << " failed: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int run_experiment(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config_path);
        if (overrides.seed) cfg.loop.seed = *overrides.seed;
        if (overrides.out_dir) cfg.output_dir = *overrides.out_dir;
    } catch (...) {
        return classify_and_report("run");
    }

    try {
        const RunOutput out =
            run_one(cfg, cfg.loop.schedule, cfg.loop.seed, cfg.output_dir, true);
        if (verbose_enabled()) print_eval_lines(out.log);
        std::cout << "run schedule=" << to_string(cfg.loop.schedule)
                  << " seed=" << cfg.loop.seed << " steps=" << out.log.steps.size()
                  << " final_val_loss=" << fmt_double(out.log.final_val_loss) << " ("
                  << fmt_double(out.wall_ms) << " ms)\n";
        return 0;
    } catch (...) {
        return classify_and_report("run");
    }
}

int compare_schedules(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config_path);
        if (overrides.seed) cfg.loop.seed = *overrides.seed;
        if (overrides.out_dir) cfg.output_dir = *overrides.out_dir;
        if (cfg.schedules.size() < 2) {
            throw ConfigError("'schedules' must list at least two schedules to compare");
        }
    } catch (...) {
        return classify_and_report("compare");
    }

    try {
        std::vector<std::uint64_t> seeds = cfg.seeds;
        if (seeds.empty()) seeds.push_back(cfg.loop.seed);

        const fs::path out_dir(cfg.output_dir);
        fs::create_directories(out_dir);

        struct Row {
            ScheduleKind schedule;
            std::uint64_t seed;
            double final_val_loss;
            std::size_t steps;
        };
        std::vector<Row> rows;
        for (ScheduleKind schedule : cfg.schedules) {
            for (std::uint64_t seed : seeds) {
                const fs::path dir = out_dir / "runs" /
                                     (std::string(to_string(schedule)) + "_seed" +
                                      std::to_string(seed));
                const RunOutput out = run_one(cfg, schedule, seed, dir, false);
                rows.push_back(
                    {schedule, seed, out.log.final_val_loss, out.log.steps.size()});
                if (verbose_enabled()) {
                    std::cerr << "compare " << to_string(schedule) << " seed " << seed
                              << " final_val_loss=" << fmt_double(out.log.final_val_loss)
                              << '\n';
                }
            }
        }

        std::ofstream table(out_dir / "comparison.csv");
        if (!table) throw IoError("cannot write comparison.csv");
        table << "schedule,seed,final_val_loss,steps\n";
        for (const Row& row : rows) {
            table << to_string(row.schedule) << ',' << row.seed << ','
                  << fmt_double(row.final_val_loss) << ',' << row.steps << '\n';
        }
        table.close();

        struct Summary {
            ScheduleKind schedule;
            double mean_loss;
        };
        std::vector<Summary> ranking;
        for (ScheduleKind schedule : cfg.schedules) {
            double total = 0.0;
            std::size_t n = 0;
            for (const Row& row : rows) {
                if (row.schedule == schedule) {
                    total += row.final_val_loss;
                    n += 1;
                }
            }
            ranking.push_back({schedule, total / static_cast<double>(n)});
        }
        std::stable_sort(ranking.begin(), ranking.end(),
                         [](const Summary& a, const Summary& b) {
                             return a.mean_loss < b.mean_loss;
                         });

        std::ofstream rank_out(out_dir / "ranking.csv");
        if (!rank_out) throw IoError("cannot write ranking.csv");
        rank_out << "rank,schedule,mean_final_val_loss\n";
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            rank_out << i + 1 << ',' << to_string(ranking[i].schedule) << ','
                     << fmt_double(ranking[i].mean_loss) << '\n';
            std::cout << "rank " << i + 1 << ": " << to_string(ranking[i].schedule)
                      << " mean_final_val_loss=" << fmt_double(ranking[i].mean_loss)
                      << '\n';
        }
        return 0;
    } catch (...) {
        return classify_and_report("compare");
    }
}

}  // namespace mtlsched
