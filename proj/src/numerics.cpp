#include "cdc/numerics.hpp"

#include <cmath>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"

namespace cdc {

Matrix softmax_rows(const Matrix& logits) {
    if (!logits.all_finite()) throw InvalidInput("softmax_rows: non-finite logits");
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* in = logits.row(i);
        double* o = out.row(i);
        double m = kernels::max(in, logits.cols);
        for (std::size_t j = 0; j < logits.cols; ++j) o[j] = std::exp(in[j] - m);
        double s = kernels::sum(o, logits.cols);
        kernels::scale(1.0 / s, o, logits.cols);
    }
    return out;
}

std::size_t argmax_tiebreak(const double* v, std::size_t n) {
    if (n == 0) throw InvalidInput("argmax_tiebreak: empty input");
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) throw InvalidInput("argmax_tiebreak: non-finite value");
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::size_t argmax_tiebreak(const std::vector<double>& v) {
    return argmax_tiebreak(v.data(), v.size());
}

NormalizedRows l2_normalize_rows(const Matrix& m) {
    NormalizedRows r;
    r.m = m;
    r.degenerate.assign(m.rows, 0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = r.m.row(i);
        double norm2 = kernels::dot(row, row, m.cols);
        if (norm2 == 0.0) {
            r.degenerate[i] = 1;
            r.any_degenerate = true;
            continue;
        }
        kernels::scale(1.0 / std::sqrt(norm2), row, m.cols);
    }
    return r;
}

}  // namespace cdc
