#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtlsched/model.hpp"
#include "mtlsched/numcore.hpp"

namespace mtlsched {

enum class TaskRole { main, auxiliary };

struct Dataset {
    Matrix inputs;
    Matrix targets;           // regression
    std::vector<int> labels;  // classification
    TaskKind kind = TaskKind::regression;

    std::size_t size() const { return inputs.rows; }
};

// Task 0 is the main task; auxiliary ids are contiguous after it.
struct Task {
    int id = 0;
    TaskKind kind = TaskKind::regression;
    Dataset train;
    TaskRole role = TaskRole::main;
};

// Held out from the main task's distribution, disjoint from its training rows.
using ValidationSet = Dataset;

struct SuiteConfig {
    std::size_t input_dim = 10;
    TaskKind kind = TaskKind::regression;
    std::size_t main_train_size = 200;
    std::size_t val_size = 100;
    struct Aux {
        double relatedness = 1.0;  // rho: 1 = maximally helpful, 0 = unrelated
        std::size_t train_size = 200;
    };
    std::vector<Aux> aux;
    double noise_sigma = 0.1;       // regression target noise
    double label_flip_prob = 0.05;  // classification label noise
};

struct SyntheticSuite {
    std::vector<Task> tasks;  // index = task id
    ValidationSet validation;
    // Per-task generator weight vectors; aux k mixes rho*w_main + (1-rho)*noise.
    std::vector<std::vector<double>> ground_truth;
};

// Uniform without-replacement sample of `size` rows; deterministic given the
// rng state.  Throws ArgumentError when size is outside [1, d.size()].
Minibatch sample_minibatch(const Dataset& d, std::size_t size, Rng& rng, int task_id = 0);

Minibatch full_batch(const Dataset& d, int task_id);

// Pure function of (cfg, seed).  Main task is noisy linear-in-features; each
// auxiliary draws its ground truth as rho*w_main + (1-rho)*independent noise.
SyntheticSuite make_synthetic_suite(const SuiteConfig& cfg, std::uint64_t seed);

// Target generators behind make_synthetic_suite, exposed for verification.
Matrix linear_targets(const std::vector<double>& w, const Matrix& inputs, double sigma,
                      Rng& noise);
std::vector<int> threshold_labels(const std::vector<double>& w, const Matrix& inputs,
                                  double sigma, double flip_prob, Rng& noise);

struct CsvSchema {
    int n_features = -1;  // -1: infer from the header
    TaskKind kind = TaskKind::regression;
};

// First line is the header; feature columns then one target column; '.' decimal
// separator.  Missing file -> IoError; malformed row -> ParseError naming the
// 1-based line; empty data section -> ArgumentError.
Dataset load_task_csv(const std::string& path, const CsvSchema& schema);

}  // namespace mtlsched
