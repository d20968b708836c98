#include "cdc/protoinit.hpp"

#include <cmath>
#include <cstring>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"
#include "cdc/kmeans.hpp"
#include "cdc/numerics.hpp"

namespace cdc {

namespace {

// Prototypes = L2-normalized K-means centers of x. Throws on zero-norm or
// duplicate prototypes, which would leave the layer unable to discriminate.
Matrix prototype_rows(const Matrix& x, std::size_t k, RngState seed, std::size_t restarts) {
    KMeansResult km = kmeans(x, k, seed, 100, 1e-6, nullptr, restarts);
    NormalizedRows norm = l2_normalize_rows(km.centers);
    if (norm.any_degenerate) throw DegenerateInput("prototype with zero norm");
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::memcmp(norm.m.row(i), norm.m.row(j), x.cols * sizeof(double)) == 0)
                throw DegenerateInput("duplicate prototypes");
    return norm.m;
}

}  // namespace

HeadParams init_head(const Matrix& z, std::size_t h_units, std::size_t c, RngState seed,
                     bool orthogonalize, double* alignment_out) {
    if (h_units > z.rows) throw InvalidInput("init_head: h_units exceeds sample count");
    if (c > z.rows) throw InvalidInput("init_head: c exceeds sample count");
    if (h_units < 1 || c < 1) throw InvalidInput("init_head: empty layer");

    NormalizedRows zn = l2_normalize_rows(z);
    RngState rng = seed;
    RngState seed1 = rng.spawn();
    RngState seed2 = rng.spawn();

    HeadParams p = HeadParams::neutral(z.cols, h_units, c);
    p.w1 = prototype_rows(zn.m, h_units, seed1, 1);
    if (alignment_out) *alignment_out = prototype_alignment_rate(zn.m, p.w1);

    // The class-level prototypes decide the initial accuracy; a few
    // restarts avoid merged-cluster local optima.
    ForwardCache cache = head_forward(p, zn.m, Mode::Eval);
    p.w2 = prototype_rows(cache.post_relu, c, seed2, 8);

    if (orthogonalize) {
        OrthogonalizeResult o1 = orthogonalize_rows(p.w1);
        if (!o1.skipped) p.w1 = std::move(o1.m);
        OrthogonalizeResult o2 = orthogonalize_rows(p.w2);
        if (!o2.skipped) p.w2 = std::move(o2.m);
    }
    return p;
}

OrthogonalizeResult orthogonalize_rows(const Matrix& w) {
    OrthogonalizeResult out;
    if (w.rows > w.cols) {
        out.m = w;
        out.skipped = true;
        return out;
    }
    out.m = w;
    Matrix basis(w.rows, w.cols);  // orthonormal rows accumulated so far
    std::size_t basis_count = 0;
    for (std::size_t i = 0; i < w.rows; ++i) {
        std::vector<double> v(w.row(i), w.row(i) + w.cols);
        double orig_norm = std::sqrt(kernels::dot(v.data(), v.data(), w.cols));
        for (std::size_t k = 0; k < basis_count; ++k) {
            double proj = kernels::dot(v.data(), basis.row(k), w.cols);
            kernels::axpy(-proj, basis.row(k), v.data(), w.cols);
        }
        double res_norm = std::sqrt(kernels::dot(v.data(), v.data(), w.cols));
        if (res_norm <= 1e-12 * (orig_norm + 1e-300)) continue;  // dependent row kept as-is
        for (std::size_t j = 0; j < w.cols; ++j) {
            basis.at(basis_count, j) = v[j] / res_norm;
            out.m.at(i, j) = basis.at(basis_count, j) * orig_norm;
        }
        ++basis_count;
    }
    return out;
}

double prototype_alignment_rate(const Matrix& z, const Matrix& w) {
    if (z.cols != w.cols) throw InvalidInput("prototype_alignment_rate: dimension mismatch");
    std::vector<std::size_t> nearest = assign_nearest(z, w);
    std::size_t agree = 0;
    std::vector<double> scores(w.rows);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t r = 0; r < w.rows; ++r)
            scores[r] = kernels::dot(z.row(i), w.row(r), z.cols);
        if (argmax_tiebreak(scores) == nearest[i]) ++agree;
    }
    return z.rows == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(z.rows);
}

}  // namespace cdc
