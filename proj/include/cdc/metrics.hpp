#ifndef CDC_METRICS_HPP
#define CDC_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cdc/matrix.hpp"

namespace cdc {

struct HungarianAcc {
    double acc = 0.0;
    std::vector<std::size_t> mapping;  // cluster index -> class index
};

/// Clustering accuracy under the optimal one-to-one cluster-to-class mapping
/// (rectangular problems padded with zero-weight dummies).
HungarianAcc hungarian_acc(const std::vector<int>& pred, const std::vector<int>& truth);

/// Mutual information normalized by the arithmetic mean of the two entropies.
/// Returns 0 when either partition has zero entropy.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);

/// Adjusted Rand index from the pair-counting contingency table.
double ari(const std::vector<int>& pred, const std::vector<int>& truth);

struct EceBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double accuracy = 0.0;         // 0 for empty bins
    double mean_confidence = 0.0;  // 0 for empty bins
};

struct EceResult {
    double ece = 0.0;
    std::vector<EceBin> bins;
};

/// Expected calibration error over equal-width confidence bins; the right
/// edge is inclusive only for the last bin.
EceResult ece(const std::vector<double>& confidences, const std::vector<std::uint8_t>& correct,
              std::size_t bins);

/// Probability that a random positive outscores a random negative, ties 1/2.
double auroc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positives);

/// Mean selective risk over all coverage levels, admitting samples in
/// descending score order (ties broken by index).
double aurc(const std::vector<double>& scores, const std::vector<std::uint8_t>& correct);

/// False-positive rate at the highest score threshold admitting >= 95% of
/// correct predictions; a sample is admitted when score >= threshold.
double fpr_at_95_tpr(const std::vector<double>& scores, const std::vector<std::uint8_t>& correct);

struct CalibrationReport {
    std::vector<EceBin> bins;
    double ece = 0.0;
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;  // floored at 0 in the report
    double auroc = 0.0;
    double aurc = 0.0;
    double fpr95 = 0.0;
    std::size_t n = 0;
};

/// Full evaluation of probabilistic predictions against ground truth labels.
/// Confidence is the max softmax probability; correctness is measured after
/// the optimal cluster-to-class mapping. Degenerate failure-rejection inputs
/// (all correct / all incorrect) use the conventions auroc=1, fpr95=0 resp.
/// auroc=0, fpr95=1 so every report field stays within [0,1].
CalibrationReport make_report(const Matrix& probs, const std::vector<int>& truth,
                              std::size_t ece_bins);

/// One row per bin (lower, upper, count, accuracy, mean confidence), then a
/// metric,value section. Doubles printed with round-trip precision.
std::string report_to_csv(const CalibrationReport& report);
CalibrationReport report_from_csv(const std::string& text);

}  // namespace cdc

#endif  // CDC_METRICS_HPP
