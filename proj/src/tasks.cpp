#include "mtlsched/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>

namespace mtlsched {

namespace {

// Substream ids for the suite generator.  Base + task id (or aux index) keeps
// every random decision on its own stream so datasets are reproducible even
// when the suite layout changes.
constexpr std::uint64_t kStreamGroundTruth = 0;
constexpr std::uint64_t kStreamAuxNoise = 100;  // + aux index
constexpr std::uint64_t kStreamInputs = 200;    // + task id; val uses K+1
constexpr std::uint64_t kStreamTargets = 300;   // + task id; val uses K+1

Matrix gaussian_inputs(std::size_t n, std::size_t dim, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(n, dim);
    for (double& x : m.data) x = dist(rng);
    return m;
}

std::vector<double> gaussian_direction(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<double> w(dim);
    for (double& x : w) x = scale * dist(rng);
    return w;
}

bool rows_equal(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    for (std::size_t c = 0; c < a.cols; ++c) {
        if (a(i, c) != b(j, c)) return false;
    }
    return true;
}

Dataset make_task_dataset(const std::vector<double>& w, std::size_t n, TaskKind kind,
                          double sigma, double flip_prob, Rng& input_rng,
                          Rng& target_rng, std::size_t dim) {
    Dataset d;
    d.kind = kind;
    d.inputs = gaussian_inputs(n, dim, input_rng);
    if (kind == TaskKind::regression) {
        d.targets = linear_targets(w, d.inputs, sigma, target_rng);
    } else {
        d.labels = threshold_labels(w, d.inputs, sigma, flip_prob, target_rng);
    }
    return d;
}

}  // namespace

Minibatch sample_minibatch(const Dataset& d, std::size_t size, Rng& rng, int task_id) {
    const std::size_t n = d.size();
    if (size < 1 || size > n) {
        throw ArgumentError("sample_minibatch: size " + std::to_string(size) +
                            " outside [1, " + std::to_string(n) + "]");
    }
    // Partial Fisher-Yates: first `size` slots are a uniform without-replacement draw.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }

    Minibatch mb;
    mb.task_id = task_id;
    mb.inputs = Matrix(size, d.inputs.cols);
    if (d.kind == TaskKind::regression) {
        mb.targets = Matrix(size, d.targets.cols);
    } else {
        mb.labels.resize(size);
    }
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t row = idx[i];
        for (std::size_t c = 0; c < d.inputs.cols; ++c) mb.inputs(i, c) = d.inputs(row, c);
        if (d.kind == TaskKind::regression) {
            for (std::size_t c = 0; c < d.targets.cols; ++c) {
                mb.targets(i, c) = d.targets(row, c);
            }
        } else {
            mb.labels[i] = d.labels[row];
        }
    }
    return mb;
}

Minibatch full_batch(const Dataset& d, int task_id) {
    Minibatch mb;
    mb.task_id = task_id;
    mb.inputs = d.inputs;
    mb.targets = d.targets;
    mb.labels = d.labels;
    return mb;
}

Matrix linear_targets(const std::vector<double>& w, const Matrix& inputs, double sigma,
                      Rng& noise) {
    if (w.size() != inputs.cols) throw DimensionError("linear_targets: weight/input dim");
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix y(inputs.rows, 1);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < inputs.cols; ++c) acc += w[c] * inputs(r, c);
        y(r, 0) = acc + sigma * dist(noise);
    }
    return y;
}

std::vector<int> threshold_labels(const std::vector<double>& w, const Matrix& inputs,
                                  double sigma, double flip_prob, Rng& noise) {
    if (w.size() != inputs.cols) throw DimensionError("threshold_labels: weight/input dim");
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<int> labels(inputs.rows);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < inputs.cols; ++c) acc += w[c] * inputs(r, c);
        int label = (acc + sigma * dist(noise)) > 0.0 ? 1 : 0;
        if (coin(noise) < flip_prob) label = 1 - label;
        labels[r] = label;
    }
    return labels;
}

SyntheticSuite make_synthetic_suite(const SuiteConfig& cfg, std::uint64_t seed) {
    if (cfg.input_dim < 1) throw ArgumentError("make_synthetic_suite: input_dim must be >= 1");
    if (cfg.main_train_size < 1) throw ArgumentError("make_synthetic_suite: main_train_size");
    if (cfg.val_size < 1) throw ArgumentError("make_synthetic_suite: val_size");
    if (cfg.noise_sigma < 0.0) throw ArgumentError("make_synthetic_suite: noise_sigma < 0");
    if (cfg.label_flip_prob < 0.0 || cfg.label_flip_prob >= 0.5) {
        throw ArgumentError("make_synthetic_suite: label_flip_prob outside [0, 0.5)");
    }
    for (const SuiteConfig::Aux& aux : cfg.aux) {
        if (aux.relatedness < 0.0 || aux.relatedness > 1.0) {
            throw ArgumentError("make_synthetic_suite: relatedness outside [0, 1]");
        }
        if (aux.train_size < 1) throw ArgumentError("make_synthetic_suite: aux train_size");
    }

    SyntheticSuite suite;
    const std::size_t n_aux = cfg.aux.size();

    Rng gt_rng = make_stream(seed, kStreamGroundTruth);
    const std::vector<double> w_main = gaussian_direction(cfg.input_dim, gt_rng);
    suite.ground_truth.push_back(w_main);
    for (std::size_t j = 0; j < n_aux; ++j) {
        Rng noise_rng = make_stream(seed, kStreamAuxNoise + j);
        const std::vector<double> n_j = gaussian_direction(cfg.input_dim, noise_rng);
        const double rho = cfg.aux[j].relatedness;
        std::vector<double> w(cfg.input_dim);
        for (std::size_t c = 0; c < cfg.input_dim; ++c) {
            w[c] = rho * w_main[c] + (1.0 - rho) * n_j[c];
        }
        suite.ground_truth.push_back(std::move(w));
    }

    for (std::size_t k = 0; k <= n_aux; ++k) {
        Rng input_rng = make_stream(seed, kStreamInputs + k);
        Rng target_rng = make_stream(seed, kStreamTargets + k);
        const std::size_t n = k == 0 ? cfg.main_train_size : cfg.aux[k - 1].train_size;
        Task task;
        task.id = static_cast<int>(k);
        task.kind = cfg.kind;
        task.role = k == 0 ? TaskRole::main : TaskRole::auxiliary;
        task.train = make_task_dataset(suite.ground_truth[k], n, cfg.kind, cfg.noise_sigma,
                                       cfg.label_flip_prob, input_rng, target_rng,
                                       cfg.input_dim);
        suite.tasks.push_back(std::move(task));
    }

    // Validation set: fresh i.i.d. draws from the main task's generator, on
    // streams of its own.  Continuous inputs collide with the training rows
    // with probability zero; redraw on the (theoretical) exact match so the
    // disjointness invariant holds unconditionally.
    Rng val_input_rng = make_stream(seed, kStreamInputs + n_aux + 1);
    Rng val_target_rng = make_stream(seed, kStreamTargets + n_aux + 1);
    Matrix val_inputs = gaussian_inputs(cfg.val_size, cfg.input_dim, val_input_rng);
    const Matrix& main_inputs = suite.tasks[0].train.inputs;
    std::normal_distribution<double> redraw(0.0, 1.0);
    for (std::size_t r = 0; r < val_inputs.rows; ++r) {
        bool clash = true;
        while (clash) {
            clash = false;
            for (std::size_t tr = 0; tr < main_inputs.rows; ++tr) {
                if (rows_equal(val_inputs, r, main_inputs, tr)) {
                    clash = true;
                    break;
                }
            }
            if (clash) {
                for (std::size_t c = 0; c < val_inputs.cols; ++c) {
                    val_inputs(r, c) = redraw(val_input_rng);
                }
            }
        }
    }
    suite.validation.kind = cfg.kind;
    suite.validation.inputs = std::move(val_inputs);
    if (cfg.kind == TaskKind::regression) {
        suite.validation.targets =
            linear_targets(w_main, suite.validation.inputs, cfg.noise_sigma, val_target_rng);
    } else {
        suite.validation.labels = threshold_labels(w_main, suite.validation.inputs,
                                                   cfg.noise_sigma, cfg.label_flip_prob,
                                                   val_target_rng);
    }
    return suite;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_number(std::string_view field, std::size_t line_no, const char* what) {
    field = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                         std::string(field) + "'");
    }
    return value;
}

}  // namespace

Dataset load_task_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: missing header");
    const std::size_t header_cols = split_fields(line).size();
    if (header_cols < 2) throw ParseError("line 1: need at least one feature and a target");
    const std::size_t n_features =
        schema.n_features >= 0 ? static_cast<std::size_t>(schema.n_features) : header_cols - 1;
    if (n_features + 1 != header_cols) {
        throw ParseError("line 1: header has " + std::to_string(header_cols) +
                         " columns, schema expects " + std::to_string(n_features + 1));
    }

    std::vector<double> features;
    std::vector<double> targets;
    std::vector<int> labels;
    std::size_t n_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string_view> fields = split_fields(line);
        if (fields.size() != header_cols) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header_cols) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < n_features; ++c) {
            features.push_back(parse_number(fields[c], line_no, "feature"));
        }
        const double target = parse_number(fields.back(), line_no, "target");
        if (schema.kind == TaskKind::classification) {
            const int label = static_cast<int>(target);
            if (static_cast<double>(label) != target || label < 0) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": label must be a nonnegative integer");
            }
            labels.push_back(label);
        } else {
            targets.push_back(target);
        }
        ++n_rows;
    }
    if (n_rows == 0) throw ArgumentError("'" + path + "' has no data rows");

    Dataset d;
    d.kind = schema.kind;
    d.inputs.rows = n_rows;
    d.inputs.cols = n_features;
    d.inputs.data = std::move(features);
    if (schema.kind == TaskKind::regression) {
        d.targets.rows = n_rows;
        d.targets.cols = 1;
        d.targets.data = std::move(targets);
    } else {
        d.labels = std::move(labels);
    }
    return d;
}

}  // namespace mtlsched
