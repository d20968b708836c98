#ifndef CDC_TRAINER_HPP
#define CDC_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cdc/heads.hpp"
#include "cdc/matrix.hpp"
#include "cdc/metrics.hpp"
#include "cdc/rng.hpp"

namespace cdc {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch = 250;         // B
    std::size_t sub_batch = 64;      // B_s, keeps four sub-iterations per batch
    std::size_t mini_clusters = 125; // K = B/2
    std::size_t classes = 10;        // C
    std::size_t hidden = 512;        // H
    EncoderMode encoder_mode = EncoderMode::Adapter;
    double lr_encoder = 5e-5;
    double lr_head = 1.5e-4;
    double w_en = 1.0;
    double weak_noise = 0.05;    // sigma_w
    double strong_noise = 0.2;   // sigma_s
    double strong_dropout = 0.1; // p_d
    std::uint64_t seed = 42;
    std::size_t ece_bins = 15;

    // Ablation switches.
    bool single_head = false;      // selection driven by the clustering head
    bool no_init = false;          // random head init instead of prototypes
    std::optional<double> fixed_threshold;  // replace dynamic budgets
    bool no_stop_gradient = false; // calibration loss also updates the encoder
    bool no_cal_update = false;    // skip calibration-head updates entirely

    void validate(std::size_t n_samples) const;
    std::uint64_t digest() const;
    std::string serialize() const;  // canonical key=value lines
};

enum class AugmentKind { None, Weak, Strong };

/// Feature-space augmentation: weak adds isotropic Gaussian noise, strong
/// adds stronger noise plus coordinate dropout with 1/(1-p) rescaling.
Matrix augment(const Matrix& x, AugmentKind kind, RngState& rng, const TrainConfig& cfg);

struct TrainState {
    EncoderParams encoder;
    AdamState encoder_opt;
    HeadParams clu;
    AdamState clu_opt;
    HeadParams cal;
    AdamState cal_opt;
    RngState rng;
    std::uint64_t epoch = 0;
};

struct Checkpoint {
    TrainState state;
    std::uint64_t config_digest = 0;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double acc_cal = 0.0, ece_cal = 0.0;
    double acc_clu = 0.0, ece_clu = 0.0;
    double nmi_cal = 0.0, ari_cal = 0.0;
    double auroc_cal = 0.0, aurc_cal = 0.0, fpr95_cal = 0.0;
    double selected_fraction = 0.0;  // pseudo-labels selected / samples seen
};

/// Initialize encoder, both heads (prototype-based unless cfg.no_init) and
/// optimizer states. Deterministic given cfg.seed. alignment_out, when given,
/// receives the calibration head's pre-orthogonalization prototype alignment
/// (0 under no_init).
TrainState init_state(const Matrix& features, const TrainConfig& cfg,
                      double* alignment_out = nullptr);

struct StepStats {
    std::size_t selected = 0;  // pseudo-labels selected in this batch
};

/// One batch iteration: no-grad selection snapshot, pseudo-label set,
/// no-grad embedding/prediction snapshot, mini-cluster partition and targets,
/// then per sub-batch a clustering update (encoder + clustering head) on the
/// strong augmentation followed by a calibration update (calibration head
/// only, unless no_stop_gradient) on the unaugmented sub-batch.
StepStats train_step(TrainState& st, const Matrix& features,
                     std::span<const std::size_t> batch_indices, const TrainConfig& cfg);

/// Full training: epoch loop over shuffled batches of size B (floor(N/B)
/// batches per epoch). Emits per-epoch metrics when labels are supplied.
Checkpoint train(const Matrix& features, const TrainConfig& cfg,
                 const std::vector<int>* labels = nullptr,
                 std::vector<EpochMetrics>* log = nullptr, std::ostream* progress = nullptr);

/// Eval-mode calibration-head probabilities; rows on the simplex.
Matrix predict(const TrainState& st, const Matrix& x);
Matrix predict(const Checkpoint& ckpt, const Matrix& x);

/// Eval-mode clustering-head probabilities (for head comparisons).
Matrix predict_clustering(const TrainState& st, const Matrix& x);

}  // namespace cdc

#endif  // CDC_TRAINER_HPP
