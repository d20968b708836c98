#ifndef CDC_CALIBRATION_HPP
#define CDC_CALIBRATION_HPP

#include <cstdint>
#include <vector>

#include "cdc/matrix.hpp"

namespace cdc {

// Calibration-head loss machinery. Targets are the per-mini-cluster mean of
// the clustering head's predictions; samples in mixed (unreliable) regions
// therefore receive softened targets while pure regions keep theirs.

struct MiniClusterPartition {
    std::vector<std::size_t> assignment;  // per sample, < k
    Matrix targets;                       // k x C rows on the simplex
    std::vector<std::size_t> member_counts;
};

enum class RegionTag : std::uint8_t { Reliable, Unreliable };

/// Targets = arithmetic mean of member prediction rows per mini-cluster.
/// Empty mini-clusters are an upstream bug and raise InternalError.
MiniClusterPartition partition_targets(const Matrix& p_clu,
                                       const std::vector<std::size_t>& assignment, std::size_t k);

/// Reliable = all member argmaxes identical.
std::vector<RegionTag> tag_regions(const Matrix& p_clu,
                                   const std::vector<std::size_t>& assignment, std::size_t k);

struct CalibrationLoss {
    double total = 0.0;       // cross-entropy + w_en * balance term
    double cross_entropy = 0.0;
    double entropy_term = 0.0;
    Matrix dlogits;           // exact gradient w.r.t. the calibration logits only
};

/// Per-sample cross-entropy against the sample's mini-cluster target,
/// averaged over the batch, plus w_en times the negative entropy of the
/// batch-mean prediction scaled by 1/C. log arguments are guarded by +1e-12
/// and the gradient is exact for the guarded expression.
CalibrationLoss calibration_loss(const Matrix& p_cal_logits, const MiniClusterPartition& part,
                                 const std::vector<std::size_t>& assignment, double w_en);

inline constexpr double kLogGuard = 1e-12;

}  // namespace cdc

#endif  // CDC_CALIBRATION_HPP
