#include "mtlsched/model.hpp"

#include <cmath>
#include <string>

namespace mtlsched {

namespace {

std::size_t layer_params(std::size_t in_dim, std::size_t out_dim) {
    return out_dim * in_dim + out_dim;
}

}  // namespace

std::size_t MtlShape::param_count() const {
    std::size_t count = 0;
    std::size_t prev = input_dim;
    for (std::size_t h : trunk_hidden) {
        count += layer_params(prev, h);
        prev = h;
    }
    for (const HeadSpec& head : heads) count += layer_params(prev, head.output_dim);
    return count;
}

OptimizerState make_sgd(double lr) {
    OptimizerState st;
    st.kind = OptimizerKind::sgd;
    st.learning_rate = lr;
    return st;
}

OptimizerState make_adam(double lr, double beta1, double beta2, double epsilon) {
    OptimizerState st;
    st.kind = OptimizerKind::adam;
    st.learning_rate = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.epsilon = epsilon;
    return st;
}

void optimizer_step(OptimizerState& state, ParamVector& params, const ParamVector& grad) {
    if (params.size() != grad.size()) {
        throw DimensionError("optimizer_step: grad/params length mismatch");
    }
    if (!all_finite(grad)) throw NumericError("optimizer_step: non-finite gradient");

    if (state.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= state.learning_rate * grad[i];
        }
        state.step_count += 1;
        return;
    }

    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) {
        throw DimensionError("optimizer_step: moment/params length mismatch");
    }
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

MtlModel::MtlModel(MtlShape shape) : shape_(std::move(shape)) {
    if (shape_.input_dim == 0) throw ArgumentError("MtlModel: input_dim must be >= 1");
    if (shape_.heads.empty()) throw ArgumentError("MtlModel: at least one head required");
    if (shape_.activation != "tanh") {
        throw ArgumentError("MtlModel: unsupported activation '" + shape_.activation + "'");
    }
    for (std::size_t h : shape_.trunk_hidden) {
        if (h == 0) throw ArgumentError("MtlModel: zero-width trunk layer");
    }

    std::size_t offset = 0;
    std::size_t prev = shape_.input_dim;
    for (std::size_t h : shape_.trunk_hidden) {
        trunk_.push_back({offset, offset + h * prev, prev, h});
        offset += layer_params(prev, h);
        prev = h;
    }
    for (const HeadSpec& head : shape_.heads) {
        if (head.output_dim == 0) throw ArgumentError("MtlModel: zero-width head");
        if (head.kind == TaskKind::classification && head.output_dim < 2) {
            throw ArgumentError("MtlModel: classification head needs >= 2 outputs");
        }
        heads_.push_back({offset, offset + head.output_dim * prev, prev, head.output_dim});
        offset += layer_params(prev, head.output_dim);
    }
    params_.assign(offset, 0.0);
}

void MtlModel::init_params(Rng& rng) {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& p : params_) p = dist(rng);
}

std::pair<std::size_t, std::size_t> MtlModel::head_span(std::size_t k) const {
    if (k >= heads_.size()) throw ArgumentError("head_span: no such task");
    const Block& blk = heads_[k];
    return {blk.w_offset, blk.b_offset + blk.out_dim};
}

Matrix MtlModel::affine(const Matrix& input, const Block& blk) const {
    Matrix out(input.rows, blk.out_dim);
    for (std::size_t n = 0; n < input.rows; ++n) {
        for (std::size_t o = 0; o < blk.out_dim; ++o) {
            double acc = params_[blk.b_offset + o];
            const std::size_t w_row = blk.w_offset + o * blk.in_dim;
            for (std::size_t i = 0; i < blk.in_dim; ++i) {
                acc += params_[w_row + i] * input(n, i);
            }
            out(n, o) = acc;
        }
    }
    return out;
}

void MtlModel::check_minibatch(const Minibatch& mb) const {
    if (mb.task_id < 0 || static_cast<std::size_t>(mb.task_id) >= heads_.size()) {
        throw DimensionError("minibatch task_id " + std::to_string(mb.task_id) +
                             " out of range");
    }
    if (mb.inputs.rows == 0) throw ArgumentError("minibatch: empty batch");
    if (mb.inputs.cols != shape_.input_dim) {
        throw DimensionError("minibatch: input dim " + std::to_string(mb.inputs.cols) +
                             " != model input dim " + std::to_string(shape_.input_dim));
    }
    const HeadSpec& head = shape_.heads[static_cast<std::size_t>(mb.task_id)];
    if (head.kind == TaskKind::regression) {
        if (mb.targets.rows != mb.inputs.rows || mb.targets.cols != head.output_dim) {
            throw DimensionError("minibatch: regression target shape mismatch");
        }
    } else {
        if (mb.labels.size() != mb.inputs.rows) {
            throw DimensionError("minibatch: label count mismatch");
        }
        for (int label : mb.labels) {
            if (label < 0 || static_cast<std::size_t>(label) >= head.output_dim) {
                throw DimensionError("minibatch: label out of range");
            }
        }
    }
}

namespace {

// dL/d(head output) alongside the loss; shared by the plain and gradient paths.
double loss_and_output_grad(const Matrix& out, const Minibatch& mb, TaskKind kind,
                            Matrix* d_out) {
    const std::size_t n = out.rows;
    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    if (kind == TaskKind::regression) {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t o = 0; o < out.cols; ++o) {
                const double diff = out(r, o) - mb.targets(r, o);
                loss += 0.5 * diff * diff;
                if (d_out) (*d_out)(r, o) = diff * inv_n;
            }
        }
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            double row_max = out(r, 0);
            for (std::size_t o = 1; o < out.cols; ++o) row_max = std::max(row_max, out(r, o));
            double sum = 0.0;
            for (std::size_t o = 0; o < out.cols; ++o) sum += std::exp(out(r, o) - row_max);
            const double lse = row_max + std::log(sum);
            const std::size_t label = static_cast<std::size_t>(mb.labels[r]);
            loss += lse - out(r, label);
            if (d_out) {
                for (std::size_t o = 0; o < out.cols; ++o) {
                    const double p = std::exp(out(r, o) - row_max) / sum;
                    (*d_out)(r, o) = (p - (o == label ? 1.0 : 0.0)) * inv_n;
                }
            }
        }
    }
    return loss * inv_n;
}

}  // namespace

double MtlModel::forward_loss(const Minibatch& mb) const {
    check_minibatch(mb);
    const std::size_t task = static_cast<std::size_t>(mb.task_id);
    Matrix act = mb.inputs;
    for (const Block& layer : trunk_) {
        act = affine(act, layer);
        for (double& z : act.data) z = std::tanh(z);
    }
    const Matrix out = affine(act, heads_[task]);
    const double loss = loss_and_output_grad(out, mb, shape_.heads[task].kind, nullptr);
    if (!std::isfinite(loss)) throw NumericError("forward pass produced a non-finite loss");
    return loss;
}

std::pair<double, ParamVector> MtlModel::backward_grad(const Minibatch& mb) const {
    check_minibatch(mb);
    const std::size_t task = static_cast<std::size_t>(mb.task_id);
    const Block& head = heads_[task];
    const std::size_t n = mb.inputs.rows;

    // forward, caching post-activation values per trunk layer
    std::vector<Matrix> acts;
    acts.reserve(trunk_.size() + 1);
    acts.push_back(mb.inputs);
    for (const Block& layer : trunk_) {
        Matrix a = affine(acts.back(), layer);
        for (double& z : a.data) z = std::tanh(z);
        acts.push_back(std::move(a));
    }
    const Matrix& feat = acts.back();
    const Matrix out = affine(feat, head);

    Matrix d_out(n, head.out_dim);
    const double loss = loss_and_output_grad(out, mb, shape_.heads[task].kind, &d_out);
    if (!std::isfinite(loss)) throw NumericError("forward pass produced a non-finite loss");

    ParamVector grad(params_.size(), 0.0);

    // head block; other heads stay zero
    Matrix d_feat(n, head.in_dim);
    for (std::size_t o = 0; o < head.out_dim; ++o) {
        const std::size_t w_row = head.w_offset + o * head.in_dim;
        double db = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double g = d_out(r, o);
            db += g;
            for (std::size_t i = 0; i < head.in_dim; ++i) {
                grad[w_row + i] += g * feat(r, i);
                d_feat(r, i) += g * params_[w_row + i];
            }
        }
        grad[head.b_offset + o] = db;
    }

    // trunk, reversed
    Matrix d_act = std::move(d_feat);
    for (std::size_t li = trunk_.size(); li-- > 0;) {
        const Block& layer = trunk_[li];
        const Matrix& a = acts[li + 1];
        const Matrix& a_prev = acts[li];
        Matrix d_prev(n, layer.in_dim);
        for (std::size_t o = 0; o < layer.out_dim; ++o) {
            const std::size_t w_row = layer.w_offset + o * layer.in_dim;
            double db = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                // through tanh: dz = da * (1 - a^2)
                const double g = d_act(r, o) * (1.0 - a(r, o) * a(r, o));
                db += g;
                for (std::size_t i = 0; i < layer.in_dim; ++i) {
                    grad[w_row + i] += g * a_prev(r, i);
                    d_prev(r, i) += g * params_[w_row + i];
                }
            }
            grad[layer.b_offset + o] = db;
        }
        d_act = std::move(d_prev);
    }

    return {loss, std::move(grad)};
}

}  // namespace mtlsched
