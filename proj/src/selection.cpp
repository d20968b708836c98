#include "cdc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdc/calibration.hpp"
#include "cdc/error.hpp"
#include "cdc/kernels.hpp"
#include "cdc/numerics.hpp"

namespace cdc {

namespace {

// Sample indices ordered by descending class-c probability, index ascending on ties.
std::vector<std::size_t> class_ranking(const Matrix& p, std::size_t c) {
    std::vector<std::size_t> order(p.rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p.at(a, c) > p.at(b, c);
    });
    return order;
}

}  // namespace

std::vector<std::size_t> class_budgets(const Matrix& p_w_cal) {
    const std::size_t b = p_w_cal.rows, c = p_w_cal.cols;
    if (b < c) throw InvalidInput("class_budgets: batch smaller than class count");
    if (c < 1) throw InvalidInput("class_budgets: no classes");

    const std::size_t top_n = b / c;
    std::vector<std::size_t> budgets(c, 0);
    for (std::size_t cls = 0; cls < c; ++cls) {
        std::vector<std::size_t> order = class_ranking(p_w_cal, cls);
        double sum = 0.0;
        for (std::size_t r = 0; r < top_n; ++r) sum += p_w_cal.at(order[r], cls);
        budgets[cls] = static_cast<std::size_t>(std::floor(sum));
    }
    return budgets;
}

PseudoLabelSet select_pseudo(const Matrix& p_w_cal, const std::vector<std::size_t>& budgets) {
    const std::size_t b = p_w_cal.rows, c = p_w_cal.cols;
    if (budgets.size() != c) throw InvalidInput("select_pseudo: budget count mismatch");

    PseudoLabelSet s;
    s.budgets = budgets;
    for (std::size_t cls = 0; cls < c; ++cls) {
        std::vector<std::size_t> order = class_ranking(p_w_cal, cls);
        std::size_t take = std::min(budgets[cls], b);
        for (std::size_t r = 0; r < take; ++r) {
            std::size_t i = order[r];
            // Keep the claim only when this class is the row's argmax; a
            // sample whose best class did not claim it is dropped entirely.
            if (argmax_tiebreak(p_w_cal.row(i), c) != cls) continue;
            s.entries.push_back({i, cls, p_w_cal.at(i, cls)});
        }
    }
    std::sort(s.entries.begin(), s.entries.end(),
              [](const PseudoLabelEntry& a, const PseudoLabelEntry& b2) {
                  return a.sample < b2.sample;
              });
    return s;
}

PseudoLabelSet select_fixed_threshold(const Matrix& p_w_cal, double tau) {
    if (tau <= 0.0) throw InvalidInput("select_fixed_threshold: tau must be positive");
    PseudoLabelSet s;
    s.budgets.assign(p_w_cal.cols, 0);
    for (std::size_t i = 0; i < p_w_cal.rows; ++i) {
        std::size_t a = argmax_tiebreak(p_w_cal.row(i), p_w_cal.cols);
        double conf = p_w_cal.at(i, a);
        if (conf >= tau) {
            s.entries.push_back({i, a, conf});
            ++s.budgets[a];
        }
    }
    return s;
}

std::optional<CluLoss> clu_loss(const Matrix& logits_s_clu, const PseudoLabelSet& s) {
    if (s.entries.empty()) return std::nullopt;
    for (const PseudoLabelEntry& e : s.entries) {
        if (e.sample >= logits_s_clu.rows)
            throw InvalidInput("clu_loss: selected sample outside logits");
        if (e.label >= logits_s_clu.cols) throw InvalidInput("clu_loss: label out of range");
    }

    Matrix p = softmax_rows(logits_s_clu);
    CluLoss out;
    out.dlogits = Matrix(logits_s_clu.rows, logits_s_clu.cols);
    const double inv_s = 1.0 / static_cast<double>(s.entries.size());

    for (const PseudoLabelEntry& e : s.entries) {
        const double* pi = p.row(e.sample);
        double py = pi[e.label];
        out.loss -= inv_s * std::log(py + kLogGuard);
        double r = py / (py + kLogGuard);
        for (std::size_t j = 0; j < logits_s_clu.cols; ++j) {
            double ind = (j == e.label) ? 1.0 : 0.0;
            out.dlogits.at(e.sample, j) += inv_s * r * (pi[j] - ind);
        }
    }
    return out;
}

}  // namespace cdc
