#include "mtlsched/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtlsched {

double dot(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

ImportanceWeights softmax(const std::vector<double>& v) {
    ImportanceWeights out(v.size());
    if (v.empty()) return out;
    const double vmax = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - vmax);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& x, double eps) {
    if (!(eps > 0.0)) throw ArgumentError("finite_diff_grad: eps must be > 0");
    ParamVector grad(x.size());
    ParamVector probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double up = f(probe);
        probe[i] = x[i] - eps;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                               std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool is_simplex(const std::vector<double>& w, double tol) {
    if (w.empty()) return false;
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

void require_simplex(const std::vector<double>& w, const char* what, double tol) {
    if (!is_simplex(w, tol)) {
        throw ArgumentError(std::string(what) + ": not a valid simplex point");
    }
}

void axpy(double s, const ParamVector& b, ParamVector& a) {
    if (a.size() != b.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over seed advanced by the stream index
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(split_seed(seed, stream));
}

}  // namespace mtlsched
