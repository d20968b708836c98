#ifndef CDC_SELECTION_HPP
#define CDC_SELECTION_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "cdc/matrix.hpp"

namespace cdc {

// Confidence-aware pseudo-label budgeting and selection, plus the
// cross-entropy loss on the selected set.

struct PseudoLabelEntry {
    std::size_t sample = 0;   // row index into the batch
    std::size_t label = 0;    // equals the argmax of the sample's prediction row
    double confidence = 0.0;  // probability of the stored label
};

struct PseudoLabelSet {
    std::vector<PseudoLabelEntry> entries;  // at most one per sample, sorted by sample
    std::vector<std::size_t> budgets;       // M(c) per class
};

/// Per-class budgets: rank all batch samples by their class-c probability,
/// take the top floor(B/C), and floor the sum of those probabilities.
std::vector<std::size_t> class_budgets(const Matrix& p_w_cal);

/// Select the top-M(c) samples of each class-c ranking. A sample is kept only
/// when the claiming class is the argmax of its row, so stored labels always
/// equal the row argmax and per-class counts never exceed the budgets.
PseudoLabelSet select_pseudo(const Matrix& p_w_cal, const std::vector<std::size_t>& budgets);

/// Fixed-threshold alternative behind the same interface: every sample whose
/// max probability reaches tau is selected with its argmax label.
PseudoLabelSet select_fixed_threshold(const Matrix& p_w_cal, double tau);

struct CluLoss {
    double loss = 0.0;
    Matrix dlogits;  // exact gradient w.r.t. the clustering logits
};

/// Mean cross-entropy of the selected samples against their hard pseudo
/// labels. Empty selection returns nullopt (skip this update), not an error.
std::optional<CluLoss> clu_loss(const Matrix& logits_s_clu, const PseudoLabelSet& s);

}  // namespace cdc

#endif  // CDC_SELECTION_HPP
