#include "cdc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdc/calibration.hpp"
#include "cdc/error.hpp"
#include "cdc/kmeans.hpp"
#include "cdc/numerics.hpp"
#include "cdc/protoinit.hpp"
#include "cdc/selection.hpp"

namespace cdc {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), x.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(x.row(idx[i]), x.row(idx[i]) + x.cols, out.row(i));
    return out;
}

// Eval-mode forward through encoder + head; params stay untouched.
Matrix eval_probs(const EncoderParams& enc, const HeadParams& head, const Matrix& x) {
    Matrix z = encoder_forward(enc, x);
    HeadParams copy = head;  // eval forward does not mutate, copy keeps the API const
    ForwardCache cache = head_forward(copy, z, Mode::Eval);
    return softmax_rows(cache.logits);
}

}  // namespace

void TrainConfig::validate(std::size_t n_samples) const {
    if (classes < 2) throw InvalidInput("config: classes must be >= 2");
    if (batch > n_samples) throw InvalidInput("config: batch exceeds sample count");
    if (sub_batch < 1 || sub_batch > batch) throw InvalidInput("config: sub_batch must be in [1, batch]");
    if (mini_clusters < 1 || mini_clusters > batch)
        throw InvalidInput("config: mini_clusters must be in [1, batch]");
    if (hidden < 1) throw InvalidInput("config: hidden must be >= 1");
    if (w_en < 0 || weak_noise < 0 || strong_noise < 0 || strong_dropout < 0)
        throw InvalidInput("config: rates must be >= 0");
    if (strong_dropout >= 1.0) throw InvalidInput("config: strong_dropout must be < 1");
    if (lr_encoder < 0 || lr_head < 0) throw InvalidInput("config: learning rates must be >= 0");
    if (fixed_threshold && *fixed_threshold <= 0.0)
        throw InvalidInput("config: fixed_threshold must be positive");
}

std::string TrainConfig::serialize() const {
    std::ostringstream out;
    out.precision(17);
    out << "batch = " << batch << "\n"
        << "classes = " << classes << "\n"
        << "ece_bins = " << ece_bins << "\n"
        << "encoder_mode = " << (encoder_mode == EncoderMode::Adapter ? "adapter" : "identity") << "\n"
        << "epochs = " << epochs << "\n"
        << "fixed_threshold = " << (fixed_threshold ? std::to_string(*fixed_threshold) : "none") << "\n"
        << "hidden = " << hidden << "\n"
        << "lr_encoder = " << lr_encoder << "\n"
        << "lr_head = " << lr_head << "\n"
        << "mini_clusters = " << mini_clusters << "\n"
        << "no_cal_update = " << no_cal_update << "\n"
        << "no_init = " << no_init << "\n"
        << "no_stop_gradient = " << no_stop_gradient << "\n"
        << "seed = " << seed << "\n"
        << "single_head = " << single_head << "\n"
        << "strong_dropout = " << strong_dropout << "\n"
        << "strong_noise = " << strong_noise << "\n"
        << "sub_batch = " << sub_batch << "\n"
        << "w_en = " << w_en << "\n"
        << "weak_noise = " << weak_noise << "\n";
    return out.str();
}

std::uint64_t TrainConfig::digest() const { return fnv1a(serialize()); }

Matrix augment(const Matrix& x, AugmentKind kind, RngState& rng, const TrainConfig& cfg) {
    if (kind == AugmentKind::None) return x;
    Matrix out = x;
    double sigma = (kind == AugmentKind::Weak) ? cfg.weak_noise : cfg.strong_noise;
    if (sigma > 0.0)
        for (double& v : out.data) v += sigma * rng.normal();
    if (kind == AugmentKind::Strong && cfg.strong_dropout > 0.0) {
        double keep_scale = 1.0 / (1.0 - cfg.strong_dropout);
        for (double& v : out.data) v = (rng.uniform() < cfg.strong_dropout) ? 0.0 : v * keep_scale;
    }
    return out;
}

TrainState init_state(const Matrix& features, const TrainConfig& cfg, double* alignment_out) {
    TrainState st;
    st.rng = RngState(cfg.seed);
    st.encoder = (cfg.encoder_mode == EncoderMode::Adapter) ? EncoderParams::adapter(features.cols)
                                                            : EncoderParams::identity();
    st.encoder_opt = AdamState::for_params(
        static_cast<const EncoderParams&>(st.encoder).tensors(), cfg.lr_encoder);

    Matrix z = encoder_forward(st.encoder, features);
    RngState clu_seed = st.rng.spawn();
    RngState cal_seed = st.rng.spawn();
    if (alignment_out) *alignment_out = 0.0;
    if (cfg.no_init) {
        st.clu = HeadParams::random_init(z.cols, cfg.hidden, cfg.classes, clu_seed);
        st.cal = HeadParams::random_init(z.cols, cfg.hidden, cfg.classes, cal_seed);
    } else {
        st.clu = init_head(z, cfg.hidden, cfg.classes, clu_seed, /*orthogonalize=*/true);
        st.cal = init_head(z, cfg.hidden, cfg.classes, cal_seed, /*orthogonalize=*/true,
                           alignment_out);
    }
    st.clu_opt = AdamState::for_params(static_cast<const HeadParams&>(st.clu).tensors(), cfg.lr_head);
    st.cal_opt = AdamState::for_params(static_cast<const HeadParams&>(st.cal).tensors(), cfg.lr_head);
    st.epoch = 0;
    return st;
}

StepStats train_step(TrainState& st, const Matrix& features,
                     std::span<const std::size_t> batch_indices, const TrainConfig& cfg) {
    const std::size_t b = batch_indices.size();
    if (cfg.mini_clusters > b) throw InvalidInput("train_step: mini_clusters exceeds batch size");
    if (b == 0) throw InvalidInput("train_step: empty batch");

    Matrix x_batch = gather_rows(features, batch_indices);

    // Selection snapshot on the weak augmentation, no gradients.
    Matrix x_weak = augment(x_batch, AugmentKind::Weak, st.rng, cfg);
    Matrix p_w_sel = cfg.single_head ? eval_probs(st.encoder, st.clu, x_weak)
                                     : eval_probs(st.encoder, st.cal, x_weak);

    PseudoLabelSet selected = cfg.fixed_threshold
                                  ? select_fixed_threshold(p_w_sel, *cfg.fixed_threshold)
                                  : select_pseudo(p_w_sel, class_budgets(p_w_sel));

    // Embedding + clustering-prediction snapshot on unaugmented inputs.
    Matrix z = encoder_forward(st.encoder, x_batch);
    Matrix p_clu = eval_probs(st.encoder, st.clu, x_batch);

    // Mini-cluster partition and targets, fixed for every sub-batch below.
    KMeansResult km = kmeans(z, cfg.mini_clusters, st.rng.spawn());
    MiniClusterPartition part = partition_targets(p_clu, km.assignment, cfg.mini_clusters);

    // Sub-batches cover the whole batch; a trailing chunk of size 1 is merged
    // into its predecessor so train-mode batch norm always sees >= 2 rows.
    std::vector<std::pair<std::size_t, std::size_t>> chunks;
    for (std::size_t start = 0; start < b; start += cfg.sub_batch) {
        std::size_t end = std::min(start + cfg.sub_batch, b);
        if (end - start == 1 && !chunks.empty())
            chunks.back().second = end;
        else
            chunks.emplace_back(start, end);
    }

    for (auto [start, end] : chunks) {
        std::vector<std::size_t> local(end - start);
        for (std::size_t i = start; i < end; ++i) local[i - start] = batch_indices[i];
        Matrix x_sub = gather_rows(features, std::span<const std::size_t>(local));

        // Clustering update on the strong augmentation, restricted to the
        // selected members of this sub-batch.
        PseudoLabelSet sub_sel;
        for (const PseudoLabelEntry& e : selected.entries)
            if (e.sample >= start && e.sample < end)
                sub_sel.entries.push_back({e.sample - start, e.label, e.confidence});
        sub_sel.budgets = selected.budgets;

        Matrix x_strong = augment(x_sub, AugmentKind::Strong, st.rng, cfg);
        if (!sub_sel.entries.empty() && x_strong.rows >= 2) {
            Matrix z_strong = encoder_forward(st.encoder, x_strong);
            ForwardCache cache = head_forward(st.clu, z_strong, Mode::Train);
            if (auto loss = clu_loss(cache.logits, sub_sel)) {
                HeadGrads hg = head_backward(st.clu, cache, loss->dlogits);
                adam_step(st.clu.tensors(), static_cast<const HeadGrads&>(hg).tensors(), st.clu_opt);
                if (st.encoder.mode == EncoderMode::Adapter) {
                    EncoderGrads eg = encoder_backward(st.encoder, x_strong, hg.input);
                    adam_step(st.encoder.tensors(),
                              static_cast<const EncoderGrads&>(eg).tensors(), st.encoder_opt);
                }
            }
        }

        // Calibration update on the unaugmented sub-batch. Only the
        // calibration head changes unless no_stop_gradient is set.
        if (!cfg.no_cal_update && x_sub.rows >= 2) {
            std::vector<std::size_t> sub_assign(end - start);
            for (std::size_t i = start; i < end; ++i) sub_assign[i - start] = km.assignment[i];

            Matrix z_sub = encoder_forward(st.encoder, x_sub);
            ForwardCache cache = head_forward(st.cal, z_sub, Mode::Train);
            CalibrationLoss loss = calibration_loss(cache.logits, part, sub_assign, cfg.w_en);
            HeadGrads hg = head_backward(st.cal, cache, loss.dlogits);
            adam_step(st.cal.tensors(), static_cast<const HeadGrads&>(hg).tensors(), st.cal_opt);
            if (cfg.no_stop_gradient && st.encoder.mode == EncoderMode::Adapter) {
                EncoderGrads eg = encoder_backward(st.encoder, x_sub, hg.input);
                adam_step(st.encoder.tensors(), static_cast<const EncoderGrads&>(eg).tensors(),
                          st.encoder_opt);
            }
        }
    }

    return StepStats{selected.entries.size()};
}

Checkpoint train(const Matrix& features, const TrainConfig& cfg, const std::vector<int>* labels,
                 std::vector<EpochMetrics>* log, std::ostream* progress) {
    cfg.validate(features.rows);
    if (!features.all_finite()) throw InvalidInput("train: non-finite features");
    if (labels && labels->size() != features.rows)
        throw InvalidInput("train: label count mismatch");

    TrainState st = init_state(features, cfg);
    const std::size_t n = features.rows;
    const std::size_t batches = n / cfg.batch;

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        st.rng.shuffle(perm);
        std::size_t selected_total = 0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            std::span<const std::size_t> batch(perm.data() + bi * cfg.batch, cfg.batch);
            StepStats stats = train_step(st, features, batch, cfg);
            selected_total += stats.selected;
        }
        st.epoch = epoch;

        if (labels && log) {
            EpochMetrics em;
            em.epoch = epoch;
            Matrix p_cal = predict(st, features);
            Matrix p_clu = predict_clustering(st, features);
            CalibrationReport rc = make_report(p_cal, *labels, cfg.ece_bins);
            CalibrationReport ru = make_report(p_clu, *labels, cfg.ece_bins);
            em.acc_cal = rc.acc;
            em.ece_cal = rc.ece;
            em.nmi_cal = rc.nmi;
            em.ari_cal = rc.ari;
            em.auroc_cal = rc.auroc;
            em.aurc_cal = rc.aurc;
            em.fpr95_cal = rc.fpr95;
            em.acc_clu = ru.acc;
            em.ece_clu = ru.ece;
            em.selected_fraction =
                batches == 0 ? 0.0
                             : static_cast<double>(selected_total) /
                                   static_cast<double>(batches * cfg.batch);
            log->push_back(em);
            if (progress)
                *progress << "epoch " << epoch << ": acc_cal=" << em.acc_cal
                          << " ece_cal=" << em.ece_cal << " acc_clu=" << em.acc_clu
                          << " ece_clu=" << em.ece_clu << " selected=" << em.selected_fraction
                          << "\n";
        } else if (progress) {
            *progress << "epoch " << epoch << " done\n";
        }
    }

    return Checkpoint{std::move(st), cfg.digest()};
}

Matrix predict(const TrainState& st, const Matrix& x) {
    if (x.cols != (st.encoder.mode == EncoderMode::Adapter ? st.encoder.w.cols : st.cal.in_dim()))
        throw InvalidInput("predict: dimension mismatch");
    return eval_probs(st.encoder, st.cal, x);
}

Matrix predict(const Checkpoint& ckpt, const Matrix& x) { return predict(ckpt.state, x); }

Matrix predict_clustering(const TrainState& st, const Matrix& x) {
    return eval_probs(st.encoder, st.clu, x);
}

}  // namespace cdc
