#include <doctest.h>

#include <cmath>
#include <string>

#include "mtlsched/il_loop.hpp"

using namespace mtlsched;

namespace {

// Two auxiliaries around a regression main task; small enough that full runs
// stay in the millisecond range.
std::pair<std::vector<Task>, Dataset> tiny_problem(std::uint64_t seed) {
    SuiteConfig cfg;
    cfg.input_dim = 4;
    cfg.main_train_size = 32;
    cfg.val_size = 16;
    cfg.aux = {{0.8, 32}, {0.2, 32}};
    SyntheticSuite suite = make_synthetic_suite(cfg, seed);
    return {std::move(suite.tasks), std::move(suite.validation)};
}

LoopConfig tiny_config() {
    LoopConfig cfg;
    cfg.max_steps = 40;
    cfg.minibatch_size = 8;
    cfg.trunk_hidden = {6};
    cfg.sched_hidden = 16;
    cfg.reward_cadence = 10;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("schedule names round-trip") {
    for (ScheduleKind kind : {ScheduleKind::uniform, ScheduleKind::constant,
                              ScheduleKind::exponential, ScheduleKind::mixture,
                              ScheduleKind::learned}) {
        CHECK(schedule_from_string(to_string(kind)) == kind);
    }
    CHECK_FALSE(schedule_from_string("sigmoid").has_value());
    CHECK(std::string(to_string(PolicySource::oracle)) == "oracle");
}

TEST_CASE("config validation names the offending field") {
    LoopConfig cfg = tiny_config();
    cfg.beta = 1.5;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("beta"), ArgumentError);
    cfg = tiny_config();
    cfg.gamma = -0.1;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("gamma"), ArgumentError);
    cfg = tiny_config();
    cfg.minibatch_size = 0;
    CHECK_THROWS_AS(validate(cfg), ArgumentError);
    cfg = tiny_config();
    cfg.max_steps = 0;
    CHECK_THROWS_AS(validate(cfg), ArgumentError);
    cfg = tiny_config();
    cfg.eta = 0.0;
    CHECK_THROWS_AS(validate(cfg), ArgumentError);
    cfg = tiny_config();
    cfg.schedule = ScheduleKind::constant;
    cfg.alpha = 1.2;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("alpha"), ArgumentError);
    cfg = tiny_config();
    cfg.schedule = ScheduleKind::exponential;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(validate(cfg), ArgumentError);
    cfg = tiny_config();
    cfg.schedule = ScheduleKind::mixture;
    cfg.mixture_base = ScheduleKind::uniform;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("mixture_base"), ArgumentError);
}

TEST_CASE("the moving average follows the decay formula bit for bit") {
    TrainerState state;
    state.l_ma = {0.0, 0.0};
    state = update_moving_average(state, 0, 1.0, 0.7);
    CHECK(state.l_ma[0] == (1.0 - 0.7) * 0.0 + 0.7 * 1.0);
    CHECK(state.l_ma[0] == 0.7);
    CHECK(state.l_ma[1] == 0.0);
    state = update_moving_average(state, 0, 1.0, 0.7);
    CHECK(state.l_ma[0] == (1.0 - 0.7) * 0.7 + 0.7 * 1.0);
    // the decimal chain value 0.91 only holds to double rounding
    CHECK(state.l_ma[0] == doctest::Approx(0.91).epsilon(1e-15));
}

TEST_CASE("gamma zero freezes the moving average") {
    TrainerState state;
    state.l_ma = {0.25};
    state = update_moving_average(state, 0, 100.0, 0.0);
    CHECK(state.l_ma[0] == 0.25);
}

TEST_CASE("update_moving_average validates its inputs") {
    TrainerState state;
    state.l_ma = {0.0};
    CHECK_THROWS_AS(update_moving_average(state, 1, 1.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(update_moving_average(state, 0, std::nan(""), 0.5), NumericError);
}

TEST_CASE("sample_task honors one-hot and zero entries") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_task({0.0, 1.0, 0.0}, rng) == 1);
    }
    for (int i = 0; i < 1000; ++i) {
        CHECK(sample_task({0.5, 0.0, 0.5}, rng) != 1);
    }
}

TEST_CASE("sample_task frequencies stay within 5 sigma of fair") {
    Rng rng(11);
    int count0 = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        if (sample_task({0.5, 0.5}, rng) == 0) count0 += 1;
    }
    const double sigma = std::sqrt(draws * 0.25);
    CHECK(std::abs(count0 - draws / 2.0) <= 5.0 * sigma);
}

TEST_CASE("reward is zero for identical parameters and telescopes across steps") {
    auto [tasks, val] = tiny_problem(3);
    LoopConfig cfg = tiny_config();
    cfg.reward_cadence = 1;
    const TrainingResult result = run_training(cfg, tasks, val);
    CHECK(reward(result.model, result.model.params(), result.model.params(), val) == 0.0);

    double total = 0.0;
    for (const StepRecord& rec : result.log.steps) {
        REQUIRE_FALSE(std::isnan(rec.reward));
        total += rec.reward;
    }
    CHECK(total ==
          doctest::Approx(result.log.initial_val_loss - result.log.final_val_loss)
              .epsilon(1e-10));
}

TEST_CASE("rewards at a coarser cadence still telescope") {
    auto [tasks, val] = tiny_problem(3);
    LoopConfig cfg = tiny_config();
    cfg.reward_cadence = 7;
    const TrainingResult result = run_training(cfg, tasks, val);
    double total = 0.0;
    std::size_t evals = 0;
    for (const StepRecord& rec : result.log.steps) {
        if (!std::isnan(rec.reward)) {
            total += rec.reward;
            evals += 1;
        }
    }
    CHECK(evals == 6);  // floor(40/7) cadence points plus the forced final step
    CHECK(total ==
          doctest::Approx(result.log.initial_val_loss - result.log.final_val_loss)
              .epsilon(1e-10));
}

TEST_CASE("beta=1 never queries the oracle and never trains the scheduler") {
    auto [tasks, val] = tiny_problem(9);
    LoopConfig cfg = tiny_config();
    cfg.beta = 1.0;
    const TrainingResult result = run_training(cfg, tasks, val);
    CHECK(result.log.oracle_queries == 0);
    CHECK(result.replay.empty());
    for (const StepRecord& rec : result.log.steps) {
        CHECK(rec.source == PolicySource::scheduler);
    }
    // the net depends only on its init stream: a run of a different length
    // ends with the same parameters because no step ever trains it
    LoopConfig brief = cfg;
    brief.max_steps = 3;
    const TrainingResult other = run_training(brief, tasks, val);
    CHECK(other.net.params() == result.net.params());
}

TEST_CASE("beta=0 queries the oracle on every step") {
    auto [tasks, val] = tiny_problem(9);
    LoopConfig cfg = tiny_config();
    cfg.beta = 0.0;
    const TrainingResult result = run_training(cfg, tasks, val);
    CHECK(result.log.oracle_queries == cfg.max_steps);
    CHECK(result.replay.size() == cfg.max_steps);
    for (const StepRecord& rec : result.log.steps) {
        CHECK(rec.source == PolicySource::oracle);
    }
}

TEST_CASE("oracle query count concentrates around (1-beta)T") {
    auto [tasks, val] = tiny_problem(13);
    LoopConfig cfg = tiny_config();
    cfg.beta = 0.9;
    cfg.max_steps = 500;
    cfg.reward_cadence = 100;
    const TrainingResult result = run_training(cfg, tasks, val);
    const double expected = 0.1 * 500;
    const double sigma = std::sqrt(500 * 0.9 * 0.1);
    CHECK(std::abs(static_cast<double>(result.log.oracle_queries) - expected) <=
          5.0 * sigma);
    CHECK(result.replay.size() == result.log.oracle_queries);
}

TEST_CASE("identical configs produce bit-identical runs") {
    auto [tasks, val] = tiny_problem(21);
    const LoopConfig cfg = tiny_config();
    const TrainingResult a = run_training(cfg, tasks, val);
    const TrainingResult b = run_training(cfg, tasks, val);
    CHECK(a.model.params() == b.model.params());
    CHECK(a.net.params() == b.net.params());
    CHECK(a.log.initial_val_loss == b.log.initial_val_loss);
    CHECK(a.log.final_val_loss == b.log.final_val_loss);
    REQUIRE(a.log.steps.size() == b.log.steps.size());
    for (std::size_t i = 0; i < a.log.steps.size(); ++i) {
        const StepRecord& ra = a.log.steps[i];
        const StepRecord& rb = b.log.steps[i];
        CHECK(ra.weights == rb.weights);
        CHECK(ra.task == rb.task);
        CHECK(ra.loss == rb.loss);
        CHECK(ra.l_ma == rb.l_ma);
        CHECK(ra.source == rb.source);
    }
}

TEST_CASE("heuristic schedules never touch the oracle or scheduler") {
    auto [tasks, val] = tiny_problem(33);
    for (ScheduleKind kind :
         {ScheduleKind::uniform, ScheduleKind::constant, ScheduleKind::exponential}) {
        LoopConfig cfg = tiny_config();
        cfg.schedule = kind;
        const TrainingResult result = run_training(cfg, tasks, val);
        CHECK(result.log.oracle_queries == 0);
        CHECK(result.replay.empty());
        std::size_t selected = 0;
        for (const StepRecord& rec : result.log.steps) {
            CHECK(rec.source == PolicySource::heuristic);
            CHECK(is_simplex(rec.weights));
        }
        for (std::size_t c : result.log.selection_counts) selected += c;
        CHECK(selected == result.log.steps.size());
    }
}

TEST_CASE("compared schedules consume identical task minibatch streams") {
    // same seed, different policy: the constant and uniform runs must pull
    // identical minibatches, so their step-0 pre-update losses agree whenever
    // they sample the same task
    auto [tasks, val] = tiny_problem(41);
    LoopConfig uni = tiny_config();
    uni.schedule = ScheduleKind::uniform;
    LoopConfig con = tiny_config();
    con.schedule = ScheduleKind::constant;
    const TrainingResult a = run_training(uni, tasks, val);
    const TrainingResult b = run_training(con, tasks, val);
    const StepRecord& ra = a.log.steps[0];
    const StepRecord& rb = b.log.steps[0];
    if (ra.task == rb.task) CHECK(ra.loss == rb.loss);
    CHECK(a.log.initial_val_loss == b.log.initial_val_loss);
}

TEST_CASE("mixture keeps the hand-engineered main probability") {
    auto [tasks, val] = tiny_problem(55);
    LoopConfig cfg = tiny_config();
    cfg.schedule = ScheduleKind::mixture;
    cfg.alpha = 0.5;
    const TrainingResult result = run_training(cfg, tasks, val);
    bool saw_scheduler = false;
    for (const StepRecord& rec : result.log.steps) {
        CHECK(is_simplex(rec.weights));
        if (rec.source == PolicySource::scheduler) {
            saw_scheduler = true;
            CHECK(rec.weights[0] == doctest::Approx(0.5));
        }
    }
    CHECK(saw_scheduler);
    CHECK(result.log.oracle_queries > 0);  // beta=0.9 over 40 steps: near-certain
}

TEST_CASE("learned runs mix scheduler and oracle steps and keep the simplex") {
    auto [tasks, val] = tiny_problem(67);
    LoopConfig cfg = tiny_config();
    cfg.max_steps = 120;
    const TrainingResult result = run_training(cfg, tasks, val);
    std::size_t oracle_steps = 0;
    for (const StepRecord& rec : result.log.steps) {
        CHECK(is_simplex(rec.weights));
        if (rec.source == PolicySource::oracle) oracle_steps += 1;
    }
    CHECK(oracle_steps == result.log.oracle_queries);
    CHECK(result.log.steps.size() == 120);
    CHECK(result.log.selection_counts.size() == 3);
}

TEST_CASE("run_training validates tasks and the validation set") {
    auto [tasks, val] = tiny_problem(71);
    const LoopConfig cfg = tiny_config();
    CHECK_THROWS_AS(run_training(cfg, {}, val), ArgumentError);
    std::vector<Task> bad = tasks;
    bad[1].id = 5;
    CHECK_THROWS_AS(run_training(cfg, bad, val), ArgumentError);
    Dataset empty_val;
    empty_val.kind = TaskKind::regression;
    CHECK_THROWS_AS(run_training(cfg, tasks, empty_val), ArgumentError);
}

TEST_CASE("patience stops a stalled run early") {
    auto [tasks, val] = tiny_problem(83);
    LoopConfig cfg = tiny_config();
    cfg.max_steps = 400;
    cfg.reward_cadence = 1;
    cfg.patience = 3;
    // updates underflow against O(0.1) parameters, so the loss never improves
    cfg.model_opt = make_sgd(1e-300);
    const TrainingResult result = run_training(cfg, tasks, val);
    CHECK(result.log.steps.size() < 400);
}
