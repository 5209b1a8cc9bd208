#include "mtlsched/il_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mtlsched {

namespace {

// Loop substreams.  Data generation lives below 1000 (tasks module); keeping
// these disjoint lets compared schedules share datasets while policies diverge.
constexpr std::uint64_t kStreamModelInit = 1000;
constexpr std::uint64_t kStreamSchedInit = 1001;
constexpr std::uint64_t kStreamMinibatch = 1002;
constexpr std::uint64_t kStreamCoin = 1003;
constexpr std::uint64_t kStreamTaskDraw = 1004;
constexpr std::uint64_t kStreamReplay = 1005;

}  // namespace

const char* to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::uniform: return "uniform";
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::exponential: return "exponential";
        case ScheduleKind::mixture: return "mixture";
        case ScheduleKind::learned: return "learned";
    }
    return "?";
}

const char* to_string(PolicySource source) {
    switch (source) {
        case PolicySource::scheduler: return "scheduler";
        case PolicySource::oracle: return "oracle";
        case PolicySource::heuristic: return "heuristic";
    }
    return "?";
}

std::optional<ScheduleKind> schedule_from_string(std::string_view name) {
    if (name == "uniform") return ScheduleKind::uniform;
    if (name == "constant") return ScheduleKind::constant;
    if (name == "exponential") return ScheduleKind::exponential;
    if (name == "mixture") return ScheduleKind::mixture;
    if (name == "learned") return ScheduleKind::learned;
    return std::nullopt;
}

void validate(const LoopConfig& cfg) {
    if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) {
        throw ArgumentError("beta must lie in [0, 1], got " + std::to_string(cfg.beta));
    }
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) {
        throw ArgumentError("gamma must lie in [0, 1], got " + std::to_string(cfg.gamma));
    }
    if (cfg.minibatch_size < 1) throw ArgumentError("minibatch_size must be >= 1");
    if (cfg.max_steps < 1) throw ArgumentError("max_steps must be >= 1");
    if (cfg.sched_hidden < 1) throw ArgumentError("sched_hidden must be >= 1");
    if (cfg.sched_batch_size < 1) throw ArgumentError("sched_batch_size must be >= 1");
    if (cfg.reward_cadence < 1) throw ArgumentError("reward_cadence must be >= 1");
    if (!(cfg.eta > 0.0)) throw ArgumentError("eta must be > 0");
    if (!(cfg.model_opt.learning_rate > 0.0)) {
        throw ArgumentError("model learning rate must be > 0");
    }
    if (!(cfg.sched_opt.learning_rate > 0.0)) {
        throw ArgumentError("scheduler learning rate must be > 0");
    }
    for (std::size_t h : cfg.trunk_hidden) {
        if (h < 1) throw ArgumentError("trunk_hidden entries must be >= 1");
    }
    const ScheduleKind base =
        cfg.schedule == ScheduleKind::mixture ? cfg.mixture_base : cfg.schedule;
    if (cfg.schedule == ScheduleKind::mixture &&
        base != ScheduleKind::constant && base != ScheduleKind::exponential) {
        throw ArgumentError("mixture_base must be constant or exponential");
    }
    if (base == ScheduleKind::constant && !(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
        throw ArgumentError("alpha must lie in [0, 1] for the constant schedule");
    }
    if (base == ScheduleKind::exponential && !(cfg.alpha > 0.0)) {
        throw ArgumentError("alpha must be > 0 for the exponential schedule");
    }
}

TrainerState update_moving_average(const TrainerState& state, std::size_t k, double loss,
                                   double gamma) {
    if (k >= state.l_ma.size()) throw ArgumentError("update_moving_average: bad task index");
    if (!std::isfinite(loss)) throw NumericError("update_moving_average: non-finite loss");
    TrainerState next = state;
    next.l_ma[k] = (1.0 - gamma) * state.l_ma[k] + gamma * loss;
    return next;
}

std::size_t sample_task(const ImportanceWeights& w, Rng& rng) {
    require_simplex(w, "sample_task weights");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] <= 0.0) continue;
        cum += w[k];
        last_positive = k;
        if (u < cum) return k;
    }
    return last_positive;  // u landed in the rounding gap past the final entry
}

double reward(const MtlModel& model, const ParamVector& before, const ParamVector& after,
              const Dataset& val) {
    MtlModel probe = model;
    const Minibatch whole = full_batch(val, 0);
    probe.params() = before;
    const double loss_before = probe.forward_loss(whole);
    probe.params() = after;
    const double loss_after = probe.forward_loss(whole);
    return loss_before - loss_after;
}

namespace {

MtlShape shape_for(const LoopConfig& cfg, const std::vector<Task>& tasks) {
    MtlShape shape;
    shape.input_dim = tasks[0].train.inputs.cols;
    shape.trunk_hidden = cfg.trunk_hidden;
    for (const Task& task : tasks) {
        if (task.train.inputs.cols != shape.input_dim) {
            throw DimensionError("run_training: task " + std::to_string(task.id) +
                                 " input dim differs from the main task's");
        }
        HeadSpec head;
        head.kind = task.kind;
        if (task.kind == TaskKind::regression) {
            head.output_dim = task.train.targets.cols;
        } else {
            int max_label = 1;
            for (int l : task.train.labels) max_label = std::max(max_label, l);
            head.output_dim = static_cast<std::size_t>(max_label) + 1;
        }
        shape.heads.push_back(head);
    }
    return shape;
}

double full_val_loss(const MtlModel& model, const Minibatch& whole_val) {
    return model.forward_loss(whole_val);
}

}  // namespace

TrainingResult run_training(const LoopConfig& cfg, const std::vector<Task>& tasks,
                            const Dataset& val) {
    validate(cfg);
    if (tasks.empty()) throw ArgumentError("run_training: no tasks");
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k].id != static_cast<int>(k)) {
            throw ArgumentError("run_training: task ids must be contiguous from 0");
        }
        if (tasks[k].train.size() == 0) throw ArgumentError("run_training: empty task");
    }
    if (tasks[0].role != TaskRole::main) throw ArgumentError("run_training: task 0 not main");
    if (val.size() == 0) throw ArgumentError("run_training: empty validation set");

    const std::size_t n_tasks = tasks.size();
    const std::size_t n_aux = n_tasks - 1;

    MtlModel model(shape_for(cfg, tasks));
    Rng model_init_rng = make_stream(cfg.seed, kStreamModelInit);
    model.init_params(model_init_rng);

    SchedulerNet net(n_tasks, cfg.sched_hidden, n_tasks);
    Rng sched_init_rng = make_stream(cfg.seed, kStreamSchedInit);
    net.init_params(sched_init_rng);

    ReplayBuffer replay =
        cfg.replay_capacity == 0 ? ReplayBuffer() : ReplayBuffer(cfg.replay_capacity);

    Rng minibatch_rng = make_stream(cfg.seed, kStreamMinibatch);
    Rng coin_rng = make_stream(cfg.seed, kStreamCoin);
    Rng task_rng = make_stream(cfg.seed, kStreamTaskDraw);
    Rng replay_rng = make_stream(cfg.seed, kStreamReplay);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    OptimizerState model_opt = cfg.model_opt;
    OptimizerState sched_opt = cfg.sched_opt;
    ScheduleClock clock(tasks[0].train.size());
    TrainerState state;
    state.l_ma.assign(n_tasks, 0.0);

    const std::size_t val_mb_size =
        std::min(cfg.val_minibatch_size == 0 ? cfg.minibatch_size : cfg.val_minibatch_size,
                 val.size());
    const Minibatch whole_val = full_batch(val, 0);

    TrainingLog log;
    log.selection_counts.assign(n_tasks, 0);
    log.initial_val_loss = full_val_loss(model, whole_val);
    double last_eval_loss = log.initial_val_loss;
    log.final_val_loss = log.initial_val_loss;
    double best_eval_loss = log.initial_val_loss;
    std::size_t evals_without_improvement = 0;

    for (std::size_t t = 0; t < cfg.max_steps; ++t) {
        try {
            // Alg. line 8: one minibatch per task plus a validation minibatch,
            // drawn every step so the sampling stream is policy-independent.
            std::vector<Minibatch> mbs;
            mbs.reserve(n_tasks);
            for (std::size_t k = 0; k < n_tasks; ++k) {
                const std::size_t mb_k = std::min(cfg.minibatch_size, tasks[k].train.size());
                mbs.push_back(sample_minibatch(tasks[k].train, mb_k, minibatch_rng,
                                               static_cast<int>(k)));
            }
            Minibatch val_mb = sample_minibatch(val, val_mb_size, minibatch_rng, 0);

            ImportanceWeights weights;
            PolicySource source = PolicySource::heuristic;
            switch (cfg.schedule) {
                case ScheduleKind::uniform:
                    weights = uniform_weights(n_aux);
                    break;
                case ScheduleKind::constant:
                    weights = constant_biased_weights(n_aux, cfg.alpha);
                    break;
                case ScheduleKind::exponential:
                    weights = exponential_weights(n_aux, cfg.alpha, clock);
                    break;
                case ScheduleKind::mixture:
                case ScheduleKind::learned: {
                    const bool use_scheduler = unit(coin_rng) < cfg.beta;
                    if (use_scheduler) {
                        source = PolicySource::scheduler;
                        const ImportanceWeights pred = net.predict(state);
                        if (cfg.schedule == ScheduleKind::learned) {
                            weights = pred;
                        } else if (n_aux == 0) {
                            weights = {1.0};
                        } else {
                            const double p_main =
                                cfg.mixture_base == ScheduleKind::constant
                                    ? cfg.alpha
                                    : 1.0 - std::exp(-cfg.alpha * clock.t_frac());
                            const std::vector<double> aux_dist(pred.begin() + 1, pred.end());
                            weights = mixture_weights(p_main, aux_dist);
                        }
                    } else {
                        // Oracle branch: label this state, aggregate, fit.
                        source = PolicySource::oracle;
                        OracleQuery q;
                        q.task_minibatches = mbs;
                        q.val_minibatch = val_mb;
                        q.eta = cfg.eta;
                        weights = oracle_policy(model, q);
                        replay.push(state.l_ma, weights);
                        log.oracle_queries += 1;
                        train_step(net, replay, cfg.sched_batch_size, sched_opt,
                                   cfg.sched_loss, replay_rng);
                    }
                    break;
                }
            }

            const std::size_t k_t = sample_task(weights, task_rng);
            log.selection_counts[k_t] += 1;

            auto [task_loss, grad] = model.backward_grad(mbs[k_t]);
            optimizer_step(model_opt, model.params(), grad);
            clock.advance(mbs[k_t].inputs.rows);
            state = update_moving_average(state, k_t, task_loss, cfg.gamma);
            state.t = t + 1;

            StepRecord rec;
            rec.t = t;
            rec.weights = weights;
            rec.source = source;
            rec.task = static_cast<int>(k_t);
            rec.loss = task_loss;
            rec.reward = std::numeric_limits<double>::quiet_NaN();
            rec.l_ma = state.l_ma;

            const bool last_step = t + 1 == cfg.max_steps;
            bool stop = false;
            if ((t + 1) % cfg.reward_cadence == 0 || last_step) {
                const double val_loss = full_val_loss(model, whole_val);
                // Accumulated reward since the previous evaluation point; the
                // per-evaluation rewards telescope to initial minus final.
                rec.reward = last_eval_loss - val_loss;
                last_eval_loss = val_loss;
                log.final_val_loss = val_loss;
                if (cfg.patience > 0) {
                    if (val_loss < best_eval_loss) {
                        best_eval_loss = val_loss;
                        evals_without_improvement = 0;
                    } else {
                        evals_without_improvement += 1;
                        if (evals_without_improvement >= cfg.patience) stop = true;
                    }
                }
            }
            log.steps.push_back(std::move(rec));
            if (stop) break;
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(t) + ": " + e.what());
        }
    }

    return TrainingResult{std::move(model), std::move(net), std::move(replay),
                          std::move(log)};
}

}  // namespace mtlsched
