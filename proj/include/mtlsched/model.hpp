#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mtlsched/numcore.hpp"

namespace mtlsched {

enum class TaskKind { regression, classification };

struct HeadSpec {
    std::size_t output_dim = 1;
    TaskKind kind = TaskKind::regression;
};

// Shared trunk (tanh) plus one linear head per task.  Parameters are stored in
// one flat vector: trunk layers first (weights row-major out x in, then bias),
// then heads in task order (weights, then bias).
struct MtlShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> trunk_hidden;  // may be empty: heads read the input directly
    std::vector<HeadSpec> heads;            // index = task id
    std::string activation = "tanh";

    std::size_t param_count() const;
};

struct Minibatch {
    Matrix inputs;            // batch x input_dim
    Matrix targets;           // regression: batch x output_dim
    std::vector<int> labels;  // classification
    int task_id = 0;
};

enum class OptimizerKind { sgd, adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::sgd;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    ParamVector m;  // adam moments, sized on first step
    ParamVector v;
    std::size_t step_count = 0;
};

OptimizerState make_sgd(double lr);
OptimizerState make_adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double epsilon = 1e-8);

// SGD: params -= lr * grad.  Adam: bias-corrected update.  The step counter
// advances even for a zero gradient.  Throws NumericError on non-finite grad.
void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad);

class MtlModel {
  public:
    explicit MtlModel(MtlShape shape);

    // Uniform [-0.1, 0.1] entries from the given stream.
    void init_params(Rng& rng);

    // Mean negative log-likelihood over the minibatch: Gaussian form
    // 0.5 * |pred - target|^2 for regression, cross-entropy for classification.
    double forward_loss(const Minibatch& mb) const;

    // Loss and its exact gradient at the current parameters.  Head blocks of
    // tasks other than mb.task_id are zero.
    std::pair<double, ParamVector> backward_grad(const Minibatch& mb) const;

    const MtlShape& shape() const { return shape_; }
    std::size_t num_tasks() const { return shape_.heads.size(); }
    const ParamVector& params() const { return params_; }
    ParamVector& params() { return params_; }

    // [begin, end) range of head k in the flat parameter vector.
    std::pair<std::size_t, std::size_t> head_span(std::size_t k) const;

  private:
    struct Block {
        std::size_t w_offset = 0;  // out_dim x in_dim, row-major
        std::size_t b_offset = 0;  // out_dim
        std::size_t in_dim = 0;
        std::size_t out_dim = 0;
    };

    Matrix affine(const Matrix& input, const Block& blk) const;
    void check_minibatch(const Minibatch& mb) const;

    MtlShape shape_;
    ParamVector params_;
    std::vector<Block> trunk_;
    std::vector<Block> heads_;
};

}  // namespace mtlsched
