#include "mtlsched/scheduler_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mtlsched {

SchedulerNet::SchedulerNet(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim)
    : in_(input_dim), hidden_(hidden_dim), out_(output_dim) {
    if (in_ == 0 || hidden_ == 0 || out_ == 0) {
        throw ArgumentError("SchedulerNet: zero-sized layer");
    }
    params_.assign(hidden_ * in_ + hidden_ + out_ * hidden_ + out_, 0.0);
}

void SchedulerNet::init_params(Rng& rng) {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& p : params_) p = dist(rng);
}

ImportanceWeights SchedulerNet::predict(const TrainerState& state) const {
    return predict(state.l_ma);
}

ImportanceWeights SchedulerNet::predict(const std::vector<double>& features) const {
    if (features.size() != in_) {
        throw DimensionError("SchedulerNet::predict: got " +
                             std::to_string(features.size()) + " features, expected " +
                             std::to_string(in_));
    }
    const std::size_t w1 = 0;
    const std::size_t b1 = hidden_ * in_;
    const std::size_t w2 = b1 + hidden_;
    const std::size_t b2 = w2 + out_ * hidden_;

    std::vector<double> hidden(hidden_);
    for (std::size_t h = 0; h < hidden_; ++h) {
        double acc = params_[b1 + h];
        for (std::size_t i = 0; i < in_; ++i) acc += params_[w1 + h * in_ + i] * features[i];
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> logits(out_);
    for (std::size_t o = 0; o < out_; ++o) {
        double acc = params_[b2 + o];
        for (std::size_t h = 0; h < hidden_; ++h) {
            acc += params_[w2 + o * hidden_ + h] * hidden[h];
        }
        logits[o] = acc;
    }
    return softmax(logits);
}

double scheduler_loss(const ImportanceWeights& pred, const ImportanceWeights& target,
                      LossKind kind) {
    if (pred.size() != target.size()) {
        throw DimensionError("scheduler_loss: pred/target length mismatch");
    }
    require_simplex(target, "scheduler_loss target");
    double loss = 0.0;
    if (kind == LossKind::l1) {
        for (std::size_t i = 0; i < pred.size(); ++i) loss += std::abs(pred[i] - target[i]);
    } else {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (target[i] == 0.0) continue;
            if (pred[i] <= 0.0) {
                throw NumericError("scheduler_loss: kl needs positive predictions");
            }
            loss += target[i] * std::log(target[i] / pred[i]);
        }
    }
    return loss;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ArgumentError("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(std::vector<double> state, ImportanceWeights action) {
    require_simplex(action, "replay action");
    entries_.push_back({std::move(state), std::move(action)});
    if (capacity_ && entries_.size() > *capacity_) entries_.pop_front();
}

std::pair<double, ParamVector> imitation_loss_grad(
    const SchedulerNet& net, const std::vector<const ReplayBuffer::Entry*>& batch,
    LossKind kind) {
    if (batch.empty()) throw ArgumentError("imitation_loss_grad: empty batch");

    const std::size_t in = net.input_dim();
    const std::size_t hid = net.hidden_dim();
    const std::size_t out = net.output_dim();
    const ParamVector& p = net.params();
    const std::size_t w1 = 0;
    const std::size_t b1 = hid * in;
    const std::size_t w2 = b1 + hid;
    const std::size_t b2 = w2 + out * hid;

    double total_loss = 0.0;
    ParamVector grad(p.size(), 0.0);
    std::vector<double> hidden(hid);
    std::vector<double> logits(out);
    std::vector<double> d_logits(out);
    std::vector<double> d_hidden(hid);

    for (const ReplayBuffer::Entry* entry : batch) {
        const std::vector<double>& x = entry->state;
        const ImportanceWeights& target = entry->action;
        if (x.size() != in || target.size() != out) {
            throw DimensionError("imitation_loss_grad: entry shape mismatch");
        }

        for (std::size_t h = 0; h < hid; ++h) {
            double acc = p[b1 + h];
            for (std::size_t i = 0; i < in; ++i) acc += p[w1 + h * in + i] * x[i];
            hidden[h] = acc > 0.0 ? acc : 0.0;
        }
        for (std::size_t o = 0; o < out; ++o) {
            double acc = p[b2 + o];
            for (std::size_t h = 0; h < hid; ++h) acc += p[w2 + o * hid + h] * hidden[h];
            logits[o] = acc;
        }
        const ImportanceWeights pred = softmax(logits);
        total_loss += scheduler_loss(pred, target, kind);

        if (kind == LossKind::kl) {
            // d KL(t||softmax(z)) / dz_o = p_o - t_o
            for (std::size_t o = 0; o < out; ++o) d_logits[o] = pred[o] - target[o];
        } else {
            // L1 through softmax: dL/dz_o = p_o * (g_o - sum_j g_j p_j), g = sign(p - t)
            double g_dot_p = 0.0;
            std::vector<double> g(out);
            for (std::size_t o = 0; o < out; ++o) {
                const double diff = pred[o] - target[o];
                g[o] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                g_dot_p += g[o] * pred[o];
            }
            for (std::size_t o = 0; o < out; ++o) d_logits[o] = pred[o] * (g[o] - g_dot_p);
        }

        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double g = d_logits[o];
            grad[b2 + o] += g;
            for (std::size_t h = 0; h < hid; ++h) {
                grad[w2 + o * hid + h] += g * hidden[h];
                d_hidden[h] += g * p[w2 + o * hid + h];
            }
        }
        for (std::size_t h = 0; h < hid; ++h) {
            if (hidden[h] <= 0.0) continue;  // ReLU gate
            const double g = d_hidden[h];
            grad[b1 + h] += g;
            for (std::size_t i = 0; i < in; ++i) grad[w1 + h * in + i] += g * x[i];
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv_b;
    return {total_loss * inv_b, std::move(grad)};
}

double train_step(SchedulerNet& net, const ReplayBuffer& buffer, std::size_t batch_size,
                  OptimizerState& opt, LossKind kind, Rng& rng) {
    if (buffer.empty()) throw ArgumentError("train_step: empty replay buffer");
    if (batch_size < 1) throw ArgumentError("train_step: batch_size must be >= 1");

    const std::size_t n = buffer.size();
    const std::size_t b = std::min(batch_size, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < b; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<const ReplayBuffer::Entry*> batch;
    batch.reserve(b);
    for (std::size_t i = 0; i < b; ++i) batch.push_back(&buffer[idx[i]]);

    auto [loss, grad] = imitation_loss_grad(net, batch, kind);
    optimizer_step(opt, net.params(), grad);
    return loss;
}

}  // namespace mtlsched
