#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtlsched/oracle.hpp"
#include "mtlsched/tasks.hpp"

using namespace mtlsched;

namespace {

// 2 auxiliaries, ~40 trunk parameters: the acceptance-scale oracle fixture.
MtlModel small_model(Rng& rng) {
    MtlShape shape;
    shape.input_dim = 4;
    shape.trunk_hidden = {5};
    shape.heads = {{1, TaskKind::regression},
                   {1, TaskKind::regression},
                   {1, TaskKind::regression}};
    MtlModel model(shape);
    model.init_params(rng);
    return model;
}

Minibatch random_regression_batch(std::size_t n, std::size_t dim, int task_id, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Minibatch mb;
    mb.task_id = task_id;
    mb.inputs = Matrix(n, dim);
    mb.targets = Matrix(n, 1);
    for (double& x : mb.inputs.data) x = dist(rng);
    for (double& y : mb.targets.data) y = dist(rng);
    return mb;
}

OracleQuery random_query(std::size_t n_tasks, Rng& rng) {
    OracleQuery q;
    for (std::size_t k = 0; k < n_tasks; ++k) {
        q.task_minibatches.push_back(
            random_regression_batch(6, 4, static_cast<int>(k), rng));
    }
    q.val_minibatch = random_regression_batch(6, 4, 0, rng);
    return q;
}

double linf(const ImportanceWeights& a, const ImportanceWeights& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("task_gradients composes backward_grad per task") {
    Rng rng(3);
    MtlModel model = small_model(rng);
    OracleQuery q = random_query(3, rng);
    const std::vector<ParamVector> grads = task_gradients(model, q.task_minibatches);
    REQUIRE(grads.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(grads[k].size() == model.params().size());
        CHECK(grads[k] == model.backward_grad(q.task_minibatches[k]).second);
    }
    // purity: same inputs, same outputs
    CHECK(grads == task_gradients(model, q.task_minibatches));
    q.task_minibatches.pop_back();
    CHECK_THROWS_AS(task_gradients(model, q.task_minibatches), DimensionError);
}

TEST_CASE("oracle_weights clips negatives and normalizes") {
    // grads chosen so the alignment scores are exactly [2, -1, 3]
    const ParamVector grad_val = {1.0};
    const std::vector<ParamVector> grads = {{2.0}, {-1.0}, {3.0}};
    const ImportanceWeights w = oracle_weights(grad_val, grads, 0);
    CHECK(w[0] == doctest::Approx(0.4));
    CHECK(w[1] == 0.0);
    CHECK(w[2] == doctest::Approx(0.6));
}

TEST_CASE("oracle_weights is invariant to positive scaling") {
    const ParamVector grad_val = {1.0};
    const ImportanceWeights a = oracle_weights(grad_val, {{2.0}, {-1.0}, {3.0}}, 0);
    const ImportanceWeights b = oracle_weights(grad_val, {{4.0}, {-2.0}, {6.0}}, 0);
    CHECK(linf(a, b) <= 1e-15);
    const ImportanceWeights c = oracle_weights({2.5}, {{2.0}, {-1.0}, {3.0}}, 0);
    CHECK(linf(a, c) <= 1e-15);
}

TEST_CASE("all-nonpositive alignments fall back to the main task") {
    const ImportanceWeights w = oracle_weights({1.0}, {{-1.0}, {-2.0}, {-3.0}}, 0);
    CHECK(w == ImportanceWeights{1.0, 0.0, 0.0});
    const ImportanceWeights w1 = oracle_weights({1.0}, {{-1.0}, {0.0}}, 1);
    CHECK(w1 == ImportanceWeights{0.0, 1.0});
}

TEST_CASE("oracle_weights validates inputs") {
    CHECK_THROWS_AS(oracle_weights({1.0}, {}, 0), ArgumentError);
    CHECK_THROWS_AS(oracle_weights({1.0}, {{1.0}}, 5), ArgumentError);
    CHECK_THROWS_AS(oracle_weights({std::nan("")}, {{1.0}}, 0), NumericError);
}

TEST_CASE("oracle output preserves the ordering of positive alignments") {
    Rng rng(17);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ParamVector grad_val(6);
        for (double& x : grad_val) x = dist(rng);
        std::vector<ParamVector> grads(4, ParamVector(6));
        for (auto& g : grads) {
            for (double& x : g) x = dist(rng);
        }
        const ImportanceWeights w = oracle_weights(grad_val, grads, 0);
        CHECK(is_simplex(w));
        for (std::size_t j = 0; j < 4; ++j) {
            for (std::size_t k = 0; k < 4; ++k) {
                const double sj = dot(grad_val, grads[j]);
                const double sk = dot(grad_val, grads[k]);
                if (sj > 0.0 && sk > 0.0 && sj >= sk) CHECK(w[j] >= w[k] - 1e-12);
                if (sj <= 0.0 && sk > 0.0) CHECK(w[j] == 0.0);
            }
        }
    }
}

TEST_CASE("brute-force and inner-product oracles agree") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        MtlModel model = small_model(rng);
        const OracleQuery q = random_query(3, rng);
        const ImportanceWeights fast = oracle_policy(model, q);
        const ImportanceWeights slow = brute_force_oracle(model, q, 1e-4);
        CHECK(linf(fast, slow) <= 1e-3);
    }
}

TEST_CASE("the oracle is invariant to the virtual step size") {
    Rng rng(29);
    MtlModel model = small_model(rng);
    OracleQuery q = random_query(3, rng);
    const ImportanceWeights fast = oracle_policy(model, q);
    for (double eta : {0.001, 0.01, 0.1}) {
        q.eta = eta;
        CHECK(linf(fast, brute_force_oracle(model, q, 1e-4)) <= 1e-3);
    }
}

TEST_CASE("a single-task query returns the trivial simplex from both routes") {
    Rng rng(31);
    MtlShape shape;
    shape.input_dim = 4;
    shape.trunk_hidden = {5};
    shape.heads = {{1, TaskKind::regression}};
    MtlModel model(shape);
    model.init_params(rng);
    OracleQuery q;
    q.task_minibatches = {random_regression_batch(6, 4, 0, rng)};
    q.val_minibatch = random_regression_batch(6, 4, 0, rng);
    CHECK(oracle_policy(model, q) == ImportanceWeights{1.0});
    CHECK(brute_force_oracle(model, q, 1e-4) == ImportanceWeights{1.0});
}

TEST_CASE("a validation batch equal to the main batch favors the main task") {
    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        MtlModel model = small_model(rng);
        OracleQuery q = random_query(3, rng);
        q.val_minibatch = q.task_minibatches[0];
        const ParamVector g = model.backward_grad(q.task_minibatches[0]).second;
        const double s_main = dot(g, g);
        CHECK(s_main > 0.0);
        const ImportanceWeights w = oracle_policy(model, q);
        CHECK(w[0] > 0.0);
        // s_main is the squared norm; assert dominance when it is the max
        const std::vector<ParamVector> grads = task_gradients(model, q.task_minibatches);
        bool is_max = true;
        for (std::size_t k = 1; k < 3; ++k) {
            if (dot(g, grads[k]) > s_main) is_max = false;
        }
        if (is_max) {
            CHECK(w[0] >= *std::max_element(w.begin() + 1, w.end()) - 1e-12);
        }
    }
}

TEST_CASE("brute_force_oracle validates eps and eta") {
    Rng rng(41);
    MtlModel model = small_model(rng);
    OracleQuery q = random_query(3, rng);
    CHECK_THROWS_AS(brute_force_oracle(model, q, 0.0), ArgumentError);
    q.eta = 0.0;
    CHECK_THROWS_AS(brute_force_oracle(model, q, 1e-4), ArgumentError);
}
