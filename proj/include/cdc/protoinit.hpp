#ifndef CDC_PROTOINIT_HPP
#define CDC_PROTOINIT_HPP

#include <vector>

#include "cdc/heads.hpp"
#include "cdc/matrix.hpp"
#include "cdc/rng.hpp"

namespace cdc {

// Prototype-based head initialization: layer weights are set to L2-normalized
// K-means centroids of the layer's input features, so the head's argmax
// reproduces the nearest-prototype assignment before any training.

struct InitReport {
    double kmeans_acc_features = 0.0;  // Hungarian ACC of K-means on raw features
    double head_acc_post_init = 0.0;   // Hungarian ACC of the initialized head
    double alignment_rate = 0.0;       // argmax(w1 z) vs nearest-prototype agreement
};

/// Initialize a head from features. w1 rows are the h_units prototypes of the
/// L2-normalized features, w2 rows the c prototypes of the resulting hidden
/// activations, all L2-normalized before install; biases zero, batch norm
/// neutral. With orthogonalize set, both layers get row-orthogonalized after
/// the prototype install (skipped per layer when rows exceed columns).
/// alignment_out, when given, receives the pre-orthogonalization agreement
/// between argmax(w1 z) and the nearest-prototype assignment.
HeadParams init_head(const Matrix& z, std::size_t h_units, std::size_t c, RngState seed,
                     bool orthogonalize, double* alignment_out = nullptr);

struct OrthogonalizeResult {
    Matrix m;
    bool skipped = false;  // rows > cols: input returned unchanged
};

/// Modified Gram-Schmidt with per-row restoration of the input row's norm.
/// Rows that are linearly dependent on earlier rows are left unchanged.
OrthogonalizeResult orthogonalize_rows(const Matrix& w);

/// Fraction of samples whose argmax over w*z equals their nearest-row
/// assignment; exact equality is guaranteed when w rows share a common norm.
double prototype_alignment_rate(const Matrix& z, const Matrix& w);

}  // namespace cdc

#endif  // CDC_PROTOINIT_HPP
