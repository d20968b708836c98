#include "cdc/calibration.hpp"

#include <cmath>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"
#include "cdc/numerics.hpp"

namespace cdc {

MiniClusterPartition partition_targets(const Matrix& p_clu,
                                       const std::vector<std::size_t>& assignment,
                                       std::size_t k) {
    if (assignment.size() != p_clu.rows) throw InvalidInput("partition_targets: length mismatch");
    if (k < 1) throw InvalidInput("partition_targets: k must be >= 1");
    for (std::size_t a : assignment)
        if (a >= k) throw InvalidInput("partition_targets: assignment index out of range");

    MiniClusterPartition part;
    part.assignment = assignment;
    part.targets = Matrix(k, p_clu.cols);
    part.member_counts.assign(k, 0);
    for (std::size_t i = 0; i < p_clu.rows; ++i) {
        kernels::axpy(1.0, p_clu.row(i), part.targets.row(assignment[i]), p_clu.cols);
        ++part.member_counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (part.member_counts[c] == 0)
            throw InternalError("partition_targets: empty mini-cluster (upstream repair missing)");
        // True division: the shared-argmax equality between target max and
        // mean member confidence then holds bit-exactly.
        double* t = part.targets.row(c);
        auto m = static_cast<double>(part.member_counts[c]);
        for (std::size_t j = 0; j < p_clu.cols; ++j) t[j] /= m;
    }
    return part;
}

std::vector<RegionTag> tag_regions(const Matrix& p_clu,
                                   const std::vector<std::size_t>& assignment, std::size_t k) {
    std::vector<std::size_t> first_argmax(k, p_clu.cols);
    std::vector<RegionTag> tags(k, RegionTag::Reliable);
    for (std::size_t i = 0; i < p_clu.rows; ++i) {
        std::size_t a = argmax_tiebreak(p_clu.row(i), p_clu.cols);
        std::size_t& seen = first_argmax[assignment[i]];
        if (seen == p_clu.cols)
            seen = a;
        else if (seen != a)
            tags[assignment[i]] = RegionTag::Unreliable;
    }
    return tags;
}

CalibrationLoss calibration_loss(const Matrix& p_cal_logits, const MiniClusterPartition& part,
                                 const std::vector<std::size_t>& assignment, double w_en) {
    const std::size_t b = p_cal_logits.rows, c = p_cal_logits.cols;
    if (b < 1) throw InvalidInput("calibration_loss: empty batch");
    if (w_en < 0.0) throw InvalidInput("calibration_loss: w_en must be >= 0");
    if (assignment.size() != b) throw InvalidInput("calibration_loss: assignment length mismatch");
    if (part.targets.cols != c) throw InvalidInput("calibration_loss: class count mismatch");
    for (std::size_t a : assignment)
        if (a >= part.targets.rows)
            throw InvalidInput("calibration_loss: assignment index out of range");

    Matrix p = softmax_rows(p_cal_logits);
    const double inv_b = 1.0 / static_cast<double>(b);

    CalibrationLoss out;
    out.dlogits = Matrix(b, c);

    // Cross-entropy against mini-cluster targets.
    for (std::size_t i = 0; i < b; ++i) {
        const double* t = part.targets.row(assignment[i]);
        const double* pi = p.row(i);
        double dot_tr = 0.0;  // sum_j t_j * p_j / (p_j + guard)
        for (std::size_t j = 0; j < c; ++j) {
            out.cross_entropy -= inv_b * t[j] * std::log(pi[j] + kLogGuard);
            dot_tr += t[j] * pi[j] / (pi[j] + kLogGuard);
        }
        for (std::size_t j = 0; j < c; ++j) {
            double r = pi[j] / (pi[j] + kLogGuard);
            out.dlogits.at(i, j) = -inv_b * (t[j] * r - pi[j] * dot_tr);
        }
    }

    // Negative entropy of the batch-mean prediction, scaled by 1/C. Minimized
    // by a uniform mean, which keeps the predicted class distribution from
    // collapsing onto one cluster.
    std::vector<double> mean(c, 0.0);
    for (std::size_t i = 0; i < b; ++i) kernels::axpy(inv_b, p.row(i), mean.data(), c);
    std::vector<double> gmean(c);
    const double inv_c = 1.0 / static_cast<double>(c);
    for (std::size_t j = 0; j < c; ++j) {
        out.entropy_term += inv_c * mean[j] * std::log(mean[j] + kLogGuard);
        gmean[j] = inv_c * (std::log(mean[j] + kLogGuard) + mean[j] / (mean[j] + kLogGuard));
    }
    if (w_en != 0.0) {
        for (std::size_t i = 0; i < b; ++i) {
            const double* pi = p.row(i);
            double dot_gp = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot_gp += gmean[j] * pi[j];
            for (std::size_t j = 0; j < c; ++j)
                out.dlogits.at(i, j) += w_en * inv_b * pi[j] * (gmean[j] - dot_gp);
        }
    }

    out.total = out.cross_entropy + w_en * out.entropy_term;
    return out;
}

}  // namespace cdc
