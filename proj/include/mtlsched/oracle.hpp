#pragma once

#include <cstddef>
#include <vector>

#include "mtlsched/model.hpp"
#include "mtlsched/numcore.hpp"

namespace mtlsched {

// One oracle decision point: frozen model parameters face one minibatch per
// task plus a validation minibatch.  eta is the virtual SGD step size; the
// inner-product route does not depend on it, the brute-force route keeps it
// explicit to confirm that.
struct OracleQuery {
    std::vector<Minibatch> task_minibatches;  // index = task id
    Minibatch val_minibatch;
    double eta = 0.01;
};

// Element k is backward_grad on minibatch k at the frozen parameters.
std::vector<ParamVector> task_gradients(const MtlModel& model,
                                        const std::vector<Minibatch>& minibatches);

// s_k = dot(grad_val, grads[k]); negatives zeroed; normalized to the simplex.
// If every s_k <= 0, falls back to one-hot on main_index.
ImportanceWeights oracle_weights(const ParamVector& grad_val,
                                 const std::vector<ParamVector>& grads,
                                 std::size_t main_index);

// Inner-product oracle over a query: gradients, alignment, clip, normalize.
ImportanceWeights oracle_policy(const MtlModel& model, const OracleQuery& q);

// Direct route: central-difference d/dw_k of the validation loss through the
// virtual SGD step at w = 0, negated, clipped and normalized with the same
// fallback.  Agrees with oracle_policy up to finite-difference error.
ImportanceWeights brute_force_oracle(const MtlModel& model, const OracleQuery& q, double eps);

}  // namespace mtlsched
