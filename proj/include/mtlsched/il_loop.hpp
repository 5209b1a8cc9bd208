#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mtlsched/model.hpp"
#include "mtlsched/oracle.hpp"
#include "mtlsched/scheduler_net.hpp"
#include "mtlsched/schedules.hpp"
#include "mtlsched/tasks.hpp"

namespace mtlsched {

enum class ScheduleKind { uniform, constant, exponential, mixture, learned };
enum class PolicySource { scheduler, oracle, heuristic };

const char* to_string(ScheduleKind kind);
const char* to_string(PolicySource source);
std::optional<ScheduleKind> schedule_from_string(std::string_view name);

struct LoopConfig {
    double beta = 0.9;   // probability of USING the scheduler on a step
    double gamma = 0.7;  // moving-average decay
    std::size_t minibatch_size = 16;
    std::size_t val_minibatch_size = 0;  // 0: same as minibatch_size
    std::size_t max_steps = 1000;
    std::vector<std::size_t> trunk_hidden = {16};
    OptimizerState model_opt = make_adam(0.001);
    OptimizerState sched_opt = make_adam(0.0001);
    LossKind sched_loss = LossKind::l1;
    std::size_t sched_hidden = 200;
    std::size_t sched_batch_size = 32;
    std::size_t replay_capacity = 0;  // 0: unlimited
    ScheduleKind schedule = ScheduleKind::learned;
    double alpha = 0.5;  // constant bias / exponential slope / mixture base
    ScheduleKind mixture_base = ScheduleKind::constant;  // constant or exponential
    std::size_t reward_cadence = 10;  // full-validation reward every N steps
    std::size_t patience = 0;  // reward checks without improvement before stopping; 0: off
    double eta = 0.01;         // oracle virtual step size
    std::uint64_t seed = 1;
};

// Throws ArgumentError naming the offending field.
void validate(const LoopConfig& cfg);

struct StepRecord {
    std::size_t t = 0;
    ImportanceWeights weights;
    PolicySource source = PolicySource::heuristic;
    int task = 0;
    double loss = 0.0;   // selected task's minibatch loss at the pre-update parameters
    double reward = 0.0; // NaN on steps where the validation loss was not evaluated
    std::vector<double> l_ma;  // post-update snapshot
};

struct TrainingLog {
    std::vector<StepRecord> steps;
    double initial_val_loss = 0.0;
    double final_val_loss = 0.0;
    std::vector<std::size_t> selection_counts;  // per task
    std::size_t oracle_queries = 0;             // equals replay-buffer pushes
};

struct TrainingResult {
    MtlModel model;
    SchedulerNet net;
    ReplayBuffer replay;
    TrainingLog log;
};

// Only entry k changes: l_ma[k] <- (1 - gamma) * l_ma[k] + gamma * loss.
TrainerState update_moving_average(const TrainerState& state, std::size_t k, double loss,
                                   double gamma);

// Categorical draw from w; zero-probability entries are never returned.
std::size_t sample_task(const ImportanceWeights& w, Rng& rng);

// Validation loss at `before` minus validation loss at `after`, on the full set.
double reward(const MtlModel& model, const ParamVector& before, const ParamVector& after,
              const Dataset& val);

// The training loop: per step, sample minibatches for every task plus a
// validation minibatch; with a learned schedule flip the beta-coin between
// using the scheduler and querying the oracle (push to replay, retrain the
// scheduler); sample one task from the weights; update the model on that
// task's minibatch; update the moving average; log the step.  Heuristic
// schedules supply the weights directly and never touch oracle or scheduler.
TrainingResult run_training(const LoopConfig& cfg, const std::vector<Task>& tasks,
                            const Dataset& val);

}  // namespace mtlsched
