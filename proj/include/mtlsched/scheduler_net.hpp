#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "mtlsched/model.hpp"
#include "mtlsched/numcore.hpp"

namespace mtlsched {

enum class LossKind { l1, kl };

// MDP state footprint: per-task moving-average losses plus the step counter.
// l_ma starts at all-zero.
struct TrainerState {
    std::vector<double> l_ma;
    std::size_t t = 0;
};

// Two dense layers with a ReLU hidden and a softmax output.  Maps the
// moving-average loss vector to importance weights.  Parameter layout:
// W1 (hidden x in, row-major), b1, W2 (out x hidden), b2.
class SchedulerNet {
  public:
    SchedulerNet(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

    // Uniform [-0.1, 0.1] entries from the given stream.
    void init_params(Rng& rng);

    ImportanceWeights predict(const TrainerState& state) const;
    ImportanceWeights predict(const std::vector<double>& features) const;

    std::size_t input_dim() const { return in_; }
    std::size_t hidden_dim() const { return hidden_; }
    std::size_t output_dim() const { return out_; }
    const ParamVector& params() const { return params_; }
    ParamVector& params() { return params_; }

  private:
    std::size_t in_, hidden_, out_;
    ParamVector params_;
};

// L1 -> sum |pred - target|; KL -> sum target * ln(target / pred), 0 ln 0 = 0.
// target must be a valid simplex point.
double scheduler_loss(const ImportanceWeights& pred, const ImportanceWeights& target,
                      LossKind kind);

// Aggregated (state, oracle-action) pairs; insertion order preserved, oldest
// evicted first once the optional capacity is exceeded.
class ReplayBuffer {
  public:
    struct Entry {
        std::vector<double> state;
        ImportanceWeights action;
    };

    ReplayBuffer() = default;
    explicit ReplayBuffer(std::size_t capacity);

    // Stores by value; the action must be a valid simplex point.
    void push(std::vector<double> state, ImportanceWeights action);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }

  private:
    std::deque<Entry> entries_;
    std::optional<std::size_t> capacity_;
};

// Mean imitation loss over the batch and its gradient wrt the net parameters.
std::pair<double, ParamVector> imitation_loss_grad(
    const SchedulerNet& net, const std::vector<const ReplayBuffer::Entry*>& batch,
    LossKind kind);

// One optimizer step on a uniformly sampled replay minibatch of
// min(batch_size, buffer size) entries.  Returns the pre-step mean loss.
double train_step(SchedulerNet& net, const ReplayBuffer& buffer, std::size_t batch_size,
                  OptimizerState& opt, LossKind kind, Rng& rng);

}  // namespace mtlsched
