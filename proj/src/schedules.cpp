#include "mtlsched/schedules.hpp"

#include <cmath>
#include <string>

namespace mtlsched {

ScheduleClock::ScheduleClock(std::size_t main_corpus_size) : corpus_size_(main_corpus_size) {
    if (main_corpus_size == 0) throw ArgumentError("ScheduleClock: empty main corpus");
}

void ScheduleClock::advance(std::size_t examples) { processed_ += examples; }

double ScheduleClock::t_frac() const {
    return static_cast<double>(processed_) / static_cast<double>(corpus_size_);
}

ImportanceWeights uniform_weights(std::size_t K) {
    return ImportanceWeights(K + 1, 1.0 / static_cast<double>(K + 1));
}

ImportanceWeights constant_biased_weights(std::size_t K, double alpha) {
    if (K < 1) throw ArgumentError("constant_biased_weights: needs >= 1 auxiliary");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ArgumentError("constant_biased_weights: alpha " + std::to_string(alpha) +
                            " outside [0, 1]");
    }
    ImportanceWeights w(K + 1, (1.0 - alpha) / static_cast<double>(K));
    w[0] = alpha;
    return w;
}

ImportanceWeights exponential_weights(std::size_t K, double alpha, double t_frac) {
    if (K < 1) throw ArgumentError("exponential_weights: needs >= 1 auxiliary");
    if (!(alpha > 0.0)) throw ArgumentError("exponential_weights: alpha must be > 0");
    if (!(t_frac >= 0.0)) throw ArgumentError("exponential_weights: t_frac must be >= 0");
    const double p_main = 1.0 - std::exp(-alpha * t_frac);
    ImportanceWeights w(K + 1, (1.0 - p_main) / static_cast<double>(K));
    w[0] = p_main;
    return w;
}

ImportanceWeights exponential_weights(std::size_t K, double alpha,
                                      const ScheduleClock& clock) {
    return exponential_weights(K, alpha, clock.t_frac());
}

ImportanceWeights mixture_weights(double p_main, const std::vector<double>& aux_dist) {
    if (!(p_main >= 0.0 && p_main <= 1.0)) {
        throw ArgumentError("mixture_weights: p_main outside [0, 1]");
    }
    if (aux_dist.empty()) throw ArgumentError("mixture_weights: empty aux distribution");
    double total = 0.0;
    for (double a : aux_dist) {
        if (a < 0.0) throw ArgumentError("mixture_weights: negative aux entry");
        total += a;
    }
    ImportanceWeights w(aux_dist.size() + 1);
    w[0] = p_main;
    if (total > 0.0) {
        for (std::size_t k = 0; k < aux_dist.size(); ++k) {
            w[k + 1] = (1.0 - p_main) * aux_dist[k] / total;
        }
    } else {
        const double share = (1.0 - p_main) / static_cast<double>(aux_dist.size());
        for (std::size_t k = 0; k < aux_dist.size(); ++k) w[k + 1] = share;
    }
    return w;
}

}  // namespace mtlsched
