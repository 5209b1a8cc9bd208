#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mtlsched/errors.hpp"

namespace mtlsched {

// Flat 64-bit parameter vector of a model or of the scheduler network.
using ParamVector = std::vector<double>;

// Point on the probability simplex over the K+1 tasks (index 0 = main task).
using ImportanceWeights = std::vector<double>;

using Rng = std::mt19937_64;

// Row-major dense matrix, sized for desk-scale batches.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool operator==(const Matrix&) const = default;
};

// Sum_i a_i * b_i.  Throws DimensionError on length mismatch.
double dot(const ParamVector& a, const ParamVector& b);

// Max-subtracted softmax; entries strictly positive, summing to 1 within 1e-12.
ImportanceWeights softmax(const std::vector<double>& v);

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per coordinate.
// Throws NumericError if any evaluation of f is non-finite, ArgumentError if eps <= 0.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& x, double eps);

bool all_finite(const std::vector<double>& v);

// Nonnegative entries summing to 1 within tol.
bool is_simplex(const std::vector<double>& w, double tol = 1e-9);
void require_simplex(const std::vector<double>& w, const char* what, double tol = 1e-9);

// a += s * b, shape-checked.
void axpy(double s, const ParamVector& b, ParamVector& a);

// Well-mixed seed for a named substream (splitmix64 finalizer).  Used to give
// data generation, sampling, coin flips and initialization independent streams.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace mtlsched
