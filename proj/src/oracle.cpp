#include "mtlsched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtlsched {

std::vector<ParamVector> task_gradients(const MtlModel& model,
                                        const std::vector<Minibatch>& minibatches) {
    if (minibatches.size() != model.num_tasks()) {
        throw DimensionError("task_gradients: got " + std::to_string(minibatches.size()) +
                             " minibatches for " + std::to_string(model.num_tasks()) +
                             " tasks");
    }
    std::vector<ParamVector> grads;
    grads.reserve(minibatches.size());
    for (const Minibatch& mb : minibatches) grads.push_back(model.backward_grad(mb).second);
    return grads;
}

ImportanceWeights oracle_weights(const ParamVector& grad_val,
                                 const std::vector<ParamVector>& grads,
                                 std::size_t main_index) {
    if (grads.empty()) throw ArgumentError("oracle_weights: no task gradients");
    if (main_index >= grads.size()) throw ArgumentError("oracle_weights: bad main_index");
    if (!all_finite(grad_val)) throw NumericError("oracle_weights: non-finite grad_val");

    ImportanceWeights w(grads.size());
    double total = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!all_finite(grads[k])) throw NumericError("oracle_weights: non-finite gradient");
        const double s = dot(grad_val, grads[k]);
        w[k] = s > 0.0 ? s : 0.0;
        total += w[k];
    }
    if (total > 0.0) {
        for (double& x : w) x /= total;
    } else {
        // No task's gradient aligns with the validation gradient; the only
        // safe pick is the main task itself.
        std::fill(w.begin(), w.end(), 0.0);
        w[main_index] = 1.0;
    }
    return w;
}

ImportanceWeights oracle_policy(const MtlModel& model, const OracleQuery& q) {
    const std::vector<ParamVector> grads = task_gradients(model, q.task_minibatches);
    const ParamVector grad_val = model.backward_grad(q.val_minibatch).second;
    return oracle_weights(grad_val, grads, 0);
}

ImportanceWeights brute_force_oracle(const MtlModel& model, const OracleQuery& q,
                                     double eps) {
    if (!(eps > 0.0)) throw ArgumentError("brute_force_oracle: eps must be > 0");
    if (!(q.eta > 0.0)) throw ArgumentError("brute_force_oracle: eta must be > 0");

    const std::vector<ParamVector> grads = task_gradients(model, q.task_minibatches);
    const std::size_t n_tasks = grads.size();

    // Validation loss after the virtual step Θ - η·w_k·grad_k, probing one
    // weight coordinate at a time (the others stay at the w=0 base point).
    MtlModel probe = model;
    const ParamVector& base = model.params();
    const auto val_loss_at = [&](std::size_t k, double w_k) {
        ParamVector p = base;
        axpy(-q.eta * w_k, grads[k], p);
        probe.params() = std::move(p);
        return probe.forward_loss(q.val_minibatch);
    };

    std::vector<double> descent(n_tasks);
    for (std::size_t k = 0; k < n_tasks; ++k) {
        const double up = val_loss_at(k, eps);
        const double down = val_loss_at(k, -eps);
        const double slope = (up - down) / (2.0 * eps);
        if (!std::isfinite(slope)) throw NumericError("brute_force_oracle: non-finite slope");
        descent[k] = -slope;  // want weights on directions that lower the val loss
    }

    ImportanceWeights w(n_tasks);
    double total = 0.0;
    for (std::size_t k = 0; k < n_tasks; ++k) {
        w[k] = descent[k] > 0.0 ? descent[k] : 0.0;
        total += w[k];
    }
    if (total > 0.0) {
        for (double& x : w) x /= total;
    } else {
        std::fill(w.begin(), w.end(), 0.0);
        w[0] = 1.0;
    }
    return w;
}

}  // namespace mtlsched
