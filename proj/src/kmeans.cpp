#include "cdc/kmeans.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"

namespace cdc {

namespace {

// K-means++: first center uniform, then squared-distance-proportional sampling.
Matrix seed_centers(const Matrix& x, std::size_t k, RngState& rng) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix centers(k, d);
    std::size_t first = rng.uniform_index(n);
    std::memcpy(centers.row(0), x.row(first), d * sizeof(double));

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = kernels::sqdist(x.row(i), centers.row(0), d);

    for (std::size_t c = 1; c < k; ++c) {
        double total = kernels::sum(dist2.data(), n);
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_index(n);  // all points coincide with chosen centers
        } else {
            double r = rng.uniform() * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (r < cum) {
                    pick = i;
                    break;
                }
            }
        }
        std::memcpy(centers.row(c), x.row(pick), d * sizeof(double));
        for (std::size_t i = 0; i < n; ++i) {
            double nd = kernels::sqdist(x.row(i), centers.row(c), d);
            if (nd < dist2[i]) dist2[i] = nd;
        }
    }
    return centers;
}

double compute_inertia(const Matrix& x, const Matrix& centers,
                       const std::vector<std::size_t>& assignment) {
    std::vector<double> terms(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        terms[i] = kernels::sqdist(x.row(i), centers.row(assignment[i]), x.cols);
    return kernels::sum(terms.data(), x.rows);
}

}  // namespace

std::vector<std::size_t> assign_nearest(const Matrix& x, const Matrix& centers) {
    if (centers.rows == 0) throw InvalidInput("assign_nearest: no centers");
    if (centers.cols != x.cols) throw InvalidInput("assign_nearest: dimension mismatch");
    std::vector<std::size_t> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::size_t best = 0;
        double bd = kernels::sqdist(x.row(i), centers.row(0), x.cols);
        for (std::size_t c = 1; c < centers.rows; ++c) {
            double d = kernels::sqdist(x.row(i), centers.row(c), x.cols);
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        out[i] = best;
    }
    return out;
}

namespace {

KMeansResult kmeans_single(const Matrix& x, std::size_t k, RngState rng, std::size_t max_iters,
                           double tol, std::vector<double>* inertia_trace) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix centers = seed_centers(x, k, rng);
    std::vector<std::size_t> assignment = assign_nearest(x, centers);

    std::vector<double> colsum(k * d);
    std::vector<std::size_t> counts(k);
    KMeansResult res;

    std::size_t iter = 0;
    for (; iter < max_iters; ++iter) {
        // Centroid update.
        std::fill(colsum.begin(), colsum.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            kernels::axpy(1.0, x.row(i), colsum.data() + assignment[i] * d, d);
            ++counts[assignment[i]];
        }
        Matrix new_centers(k, d);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // repaired below
            double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < d; ++j) new_centers.at(c, j) = colsum[c * d + j] * inv;
        }

        // Empty-cluster repair: reseed on the point farthest from its center.
        std::vector<std::uint8_t> taken(n, 0);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            double far = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || counts[assignment[i]] <= 1) continue;
                double dist = kernels::sqdist(x.row(i), new_centers.row(assignment[i]), d);
                if (dist > far) {
                    far = dist;
                    far_i = i;
                }
            }
            std::memcpy(new_centers.row(c), x.row(far_i), d * sizeof(double));
            taken[far_i] = 1;
            --counts[assignment[far_i]];
            assignment[far_i] = c;
            counts[c] = 1;
        }

        // Relative center movement.
        double shift2 = 0.0, scale2 = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            shift2 += kernels::sqdist(new_centers.row(c), centers.row(c), d);
            scale2 += kernels::dot(new_centers.row(c), new_centers.row(c), d);
        }
        double movement = std::sqrt(shift2) / (std::sqrt(scale2) + 1e-30);

        centers = std::move(new_centers);
        std::vector<std::size_t> new_assignment = assign_nearest(x, centers);
        bool stable = (new_assignment == assignment);
        assignment = std::move(new_assignment);

        if (inertia_trace) inertia_trace->push_back(compute_inertia(x, centers, assignment));
        if (stable || movement < tol) {
            ++iter;
            break;
        }
    }

    res.centers = std::move(centers);
    res.assignment = std::move(assignment);
    res.iterations = iter;
    res.inertia = compute_inertia(x, res.centers, res.assignment);
    return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, std::size_t k, RngState seed, std::size_t max_iters,
                    double tol, std::vector<double>* inertia_trace, std::size_t restarts) {
    if (k < 1) throw InvalidInput("kmeans: k must be >= 1");
    if (k > x.rows) throw InvalidInput("kmeans: k exceeds sample count");
    if (max_iters < 1) throw InvalidInput("kmeans: max_iters must be >= 1");
    if (restarts < 1) throw InvalidInput("kmeans: restarts must be >= 1");
    if (!x.all_finite()) throw InvalidInput("kmeans: non-finite features");

    RngState master = seed;
    KMeansResult best;
    std::vector<double> best_trace;
    for (std::size_t r = 0; r < restarts; ++r) {
        std::vector<double> trace;
        KMeansResult run = kmeans_single(x, k, master.spawn(), max_iters, tol,
                                         inertia_trace ? &trace : nullptr);
        if (r == 0 || run.inertia < best.inertia) {
            best = std::move(run);
            best_trace = std::move(trace);
        }
    }
    if (inertia_trace) *inertia_trace = std::move(best_trace);
    return best;
}

}  // namespace cdc
