#ifndef CDC_KMEANS_HPP
#define CDC_KMEANS_HPP

#include <cstddef>
#include <vector>

#include "cdc/matrix.hpp"
#include "cdc/rng.hpp"

namespace cdc {

struct KMeansResult {
    Matrix centers;                       // k x D
    std::vector<std::size_t> assignment;  // per sample, < k
    double inertia = 0.0;                 // sum of squared distances to assigned center
    std::size_t iterations = 0;
};

/// Lloyd's algorithm with K-means++ seeding.
///
/// Iterates until the assignment is stable, relative center movement drops
/// below tol, or max_iters is reached. Empty clusters are repaired by
/// reseeding on the point farthest from its assigned center. Deterministic
/// given the seed. Optional inertia_trace records the inertia after every
/// iteration of the winning run (used by tests for the monotonicity
/// property). With restarts > 1, independent seedings run and the lowest
/// inertia wins (ties keep the earlier run).
KMeansResult kmeans(const Matrix& x, std::size_t k, RngState seed,
                    std::size_t max_iters = 100, double tol = 1e-6,
                    std::vector<double>* inertia_trace = nullptr, std::size_t restarts = 1);

/// Nearest center per sample by squared Euclidean distance, lowest index on ties.
std::vector<std::size_t> assign_nearest(const Matrix& x, const Matrix& centers);

}  // namespace cdc

#endif  // CDC_KMEANS_HPP
