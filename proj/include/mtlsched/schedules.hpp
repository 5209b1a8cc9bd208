#pragma once

#include <cstddef>
#include <vector>

#include "mtlsched/numcore.hpp"

namespace mtlsched {

// Fraction of main-task epochs completed: examples consumed / main corpus size.
class ScheduleClock {
  public:
    explicit ScheduleClock(std::size_t main_corpus_size);
    void advance(std::size_t examples);
    double t_frac() const;

  private:
    std::size_t corpus_size_;
    std::size_t processed_ = 0;
};

// Every entry 1/(K+1).
ImportanceWeights uniform_weights(std::size_t K);

// Main task gets alpha; the remaining mass splits uniformly over K auxiliaries.
ImportanceWeights constant_biased_weights(std::size_t K, double alpha);

// Main-task probability 1 - exp(-alpha * t); remainder uniform over auxiliaries.
ImportanceWeights exponential_weights(std::size_t K, double alpha, double t_frac);
ImportanceWeights exponential_weights(std::size_t K, double alpha, const ScheduleClock& clock);

// Main task gets p_main; the rest follows aux_dist renormalized.  A zero
// aux_dist falls back to uniform over the auxiliaries.
ImportanceWeights mixture_weights(double p_main, const std::vector<double>& aux_dist);

}  // namespace mtlsched
