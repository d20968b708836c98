#ifndef CDC_NUMERICS_HPP
#define CDC_NUMERICS_HPP

#include <cstdint>
#include <vector>

#include "cdc/matrix.hpp"

namespace cdc {

/// Row-wise softmax with max-subtraction. Throws InvalidInput on non-finite
/// entries. Each output row is non-negative and sums to 1 within 1e-9.
Matrix softmax_rows(const Matrix& logits);

/// Index of the maximum; ties resolve to the lowest index.
/// Throws InvalidInput on empty or non-finite input.
std::size_t argmax_tiebreak(const double* v, std::size_t n);
std::size_t argmax_tiebreak(const std::vector<double>& v);

struct NormalizedRows {
    Matrix m;
    std::vector<std::uint8_t> degenerate;  // per row: 1 if the row was all-zero
    bool any_degenerate = false;
};

/// L2-normalize each row. Zero rows pass through unchanged and are flagged.
NormalizedRows l2_normalize_rows(const Matrix& m);

}  // namespace cdc

#endif  // CDC_NUMERICS_HPP
