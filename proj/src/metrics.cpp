#include "cdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "cdc/error.hpp"
#include "cdc/numerics.hpp"

namespace cdc {

namespace {

void check_labels(const std::vector<int>& pred, const std::vector<int>& truth,
                  const char* who, std::size_t min_len) {
    if (pred.size() != truth.size()) throw InvalidInput(std::string(who) + ": length mismatch");
    if (pred.size() < min_len) throw InvalidInput(std::string(who) + ": too few samples");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] < 0 || truth[i] < 0) throw InvalidInput(std::string(who) + ": negative label");
}

// Contingency counts n[pred][truth] plus marginals. Small label spaces use
// stack storage; metric evaluation sits in per-epoch and test hot loops.
struct Contingency {
    std::size_t r = 0, s = 0;
    const std::int64_t* cells = nullptr;  // r*s
    const std::int64_t* a = nullptr;      // row (pred) sums
    const std::int64_t* b = nullptr;      // column (truth) sums
    std::int64_t n = 0;

    std::int64_t cell(std::size_t i, std::size_t j) const { return cells[i * s + j]; }
};

constexpr std::size_t kSmallLabels = 16;

struct ContStorage {
    std::int64_t small_cells[kSmallLabels * kSmallLabels];
    std::int64_t small_a[kSmallLabels];
    std::int64_t small_b[kSmallLabels];
    std::vector<std::int64_t> big_cells, big_a, big_b;
};

Contingency contingency(const std::vector<int>& pred, const std::vector<int>& truth,
                        ContStorage& st) {
    Contingency t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        t.r = std::max(t.r, static_cast<std::size_t>(pred[i]) + 1);
        t.s = std::max(t.s, static_cast<std::size_t>(truth[i]) + 1);
    }
    std::int64_t *cells, *a, *b;
    if (t.r <= kSmallLabels && t.s <= kSmallLabels) {
        cells = st.small_cells;
        a = st.small_a;
        b = st.small_b;
        std::fill(cells, cells + t.r * t.s, 0);
        std::fill(a, a + t.r, 0);
        std::fill(b, b + t.s, 0);
    } else {
        st.big_cells.assign(t.r * t.s, 0);
        st.big_a.assign(t.r, 0);
        st.big_b.assign(t.s, 0);
        cells = st.big_cells.data();
        a = st.big_a.data();
        b = st.big_b.data();
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++cells[static_cast<std::size_t>(pred[i]) * t.s + static_cast<std::size_t>(truth[i])];
        ++a[static_cast<std::size_t>(pred[i])];
        ++b[static_cast<std::size_t>(truth[i])];
    }
    t.cells = cells;
    t.a = a;
    t.b = b;
    t.n = static_cast<std::int64_t>(pred.size());
    return t;
}

// Hungarian algorithm (shortest augmenting paths with potentials) for a
// square min-cost assignment over a flat row-major cost array. Small
// problems run entirely on the stack; metric evaluation sits in per-epoch
// and exhaustive-test hot loops.
void hungarian_min(const std::int64_t* cost, std::size_t n, std::size_t* row_to_col) {
    const std::int64_t inf = std::numeric_limits<std::int64_t>::max();
    constexpr std::size_t kSmall = 32;
    std::int64_t u_s[kSmall + 1], v_s[kSmall + 1], minv_s[kSmall + 1];
    std::size_t p_s[kSmall + 1], way_s[kSmall + 1];
    char used_s[kSmall + 1];
    std::vector<std::int64_t> u_h, v_h, minv_h;
    std::vector<std::size_t> p_h, way_h;
    std::vector<char> used_h;
    std::int64_t *u = u_s, *v = v_s, *minv = minv_s;
    std::size_t *p = p_s, *way = way_s;
    char* used = used_s;
    if (n > kSmall) {
        u_h.resize(n + 1);
        v_h.resize(n + 1);
        minv_h.resize(n + 1);
        p_h.resize(n + 1);
        way_h.resize(n + 1);
        used_h.resize(n + 1);
        u = u_h.data();
        v = v_h.data();
        minv = minv_h.data();
        p = p_h.data();
        way = way_h.data();
        used = used_h.data();
    }
    std::fill(u, u + n + 1, std::int64_t{0});
    std::fill(v, v + n + 1, std::int64_t{0});
    std::fill(p, p + n + 1, std::size_t{0});
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv, minv + n + 1, inf);
        std::fill(used, used + n + 1, char{0});
        do {
            used[j0] = 1;
            std::size_t i0 = p[j0], j1 = 0;
            std::int64_t delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                std::int64_t cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] >= 1) row_to_col[p[j] - 1] = j - 1;
}

std::int64_t choose2(std::int64_t x) { return x * (x - 1) / 2; }

double round_trip(double v) { return v; }

void append_double(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", round_trip(v));
    out += buf;
}

}  // namespace

HungarianAcc hungarian_acc(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_labels(pred, truth, "hungarian_acc", 1);
    ContStorage st;
    Contingency t = contingency(pred, truth, st);
    std::size_t n = std::max(t.r, t.s);

    constexpr std::size_t kSmall = 32;
    std::int64_t cost_s[kSmall * kSmall];
    std::size_t map_s[kSmall];
    std::vector<std::int64_t> cost_h;
    std::vector<std::size_t> map_h;
    std::int64_t* cost = cost_s;
    std::size_t* map = map_s;
    if (n > kSmall) {
        cost_h.resize(n * n);
        map_h.resize(n);
        cost = cost_h.data();
        map = map_h.data();
    }
    std::fill(cost, cost + n * n, std::int64_t{0});
    for (std::size_t i = 0; i < t.r; ++i)
        for (std::size_t j = 0; j < t.s; ++j) cost[i * n + j] = -t.cell(i, j);
    hungarian_min(cost, n, map);

    std::int64_t matched = 0;
    for (std::size_t i = 0; i < t.r; ++i)
        if (map[i] < t.s) matched += t.cell(i, map[i]);

    HungarianAcc out;
    out.acc = static_cast<double>(matched) / static_cast<double>(t.n);
    out.mapping.assign(map, map + t.r);
    return out;
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_labels(pred, truth, "nmi", 1);
    ContStorage st;
    Contingency t = contingency(pred, truth, st);
    const double n = static_cast<double>(t.n);

    double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
    for (std::size_t i = 0; i < t.r; ++i)
        if (t.a[i] > 0) h_pred -= (t.a[i] / n) * std::log(t.a[i] / n);
    for (std::size_t j = 0; j < t.s; ++j)
        if (t.b[j] > 0) h_truth -= (t.b[j] / n) * std::log(t.b[j] / n);
    for (std::size_t i = 0; i < t.r; ++i)
        for (std::size_t j = 0; j < t.s; ++j) {
            std::int64_t c = t.cell(i, j);
            if (c == 0) continue;
            mi += (c / n) *
                  std::log((c * n) / (static_cast<double>(t.a[i]) * static_cast<double>(t.b[j])));
        }

    double denom = 0.5 * (h_pred + h_truth);
    if (denom <= 0.0) return 0.0;
    return mi / denom;
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    check_labels(pred, truth, "ari", 2);
    ContStorage st;
    Contingency t = contingency(pred, truth, st);

    std::int64_t index = 0, sum_a = 0, sum_b = 0;
    for (std::size_t i = 0; i < t.r * t.s; ++i) index += choose2(t.cells[i]);
    for (std::size_t i = 0; i < t.r; ++i) sum_a += choose2(t.a[i]);
    for (std::size_t j = 0; j < t.s; ++j) sum_b += choose2(t.b[j]);
    std::int64_t total = choose2(t.n);

    double expected = static_cast<double>(static_cast<__int128>(sum_a) * sum_b % total) /
                          static_cast<double>(total) +
                      static_cast<double>(static_cast<__int128>(sum_a) * sum_b / total);
    double max_index = 0.5 * (static_cast<double>(sum_a) + static_cast<double>(sum_b));
    double denom = max_index - expected;
    if (denom == 0.0) return 1.0;  // both partitions trivial and identical in pair structure
    return (static_cast<double>(index) - expected) / denom;
}

EceResult ece(const std::vector<double>& confidences, const std::vector<std::uint8_t>& correct,
              std::size_t bins) {
    if (confidences.size() != correct.size()) throw InvalidInput("ece: length mismatch");
    if (bins < 1) throw InvalidInput("ece: bins must be >= 1");
    for (double c : confidences)
        if (!(c >= 0.0 && c <= 1.0)) throw InvalidInput("ece: confidence outside [0,1]");

    EceResult r;
    r.bins.resize(bins);
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<std::size_t> hit(bins, 0);
    for (std::size_t b = 0; b < bins; ++b) {
        r.bins[b].lower = static_cast<double>(b) / static_cast<double>(bins);
        r.bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(bins);
    }
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        auto b = static_cast<std::size_t>(confidences[i] * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;  // confidence 1.0 falls in the last bin
        ++r.bins[b].count;
        conf_sum[b] += confidences[i];
        hit[b] += correct[i];
    }
    const double n = static_cast<double>(confidences.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (r.bins[b].count == 0) continue;
        r.bins[b].accuracy = static_cast<double>(hit[b]) / static_cast<double>(r.bins[b].count);
        r.bins[b].mean_confidence = conf_sum[b] / static_cast<double>(r.bins[b].count);
        r.ece += (static_cast<double>(r.bins[b].count) / n) *
                 std::fabs(r.bins[b].accuracy - r.bins[b].mean_confidence);
    }
    return r;
}

double auroc(const std::vector<double>& scores, const std::vector<std::uint8_t>& positives) {
    if (scores.size() != positives.size()) throw InvalidInput("auroc: length mismatch");
    std::size_t p = 0;
    for (auto f : positives) p += (f != 0);
    std::size_t q = scores.size() - p;
    if (p == 0 || q == 0) throw UndefinedMetric("auroc: needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups; ranks are 1-based.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double mean_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (positives[order[k]]) rank_sum_pos += mean_rank;
        i = j;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(p) * static_cast<double>(p + 1);
    return u / (static_cast<double>(p) * static_cast<double>(q));
}

double aurc(const std::vector<double>& scores, const std::vector<std::uint8_t>& correct) {
    if (scores.size() != correct.size()) throw InvalidInput("aurc: length mismatch");
    if (scores.empty()) throw InvalidInput("aurc: empty input");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double risk_sum = 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        errors += (correct[order[i]] == 0);
        risk_sum += static_cast<double>(errors) / static_cast<double>(i + 1);
    }
    return risk_sum / static_cast<double>(scores.size());
}

double fpr_at_95_tpr(const std::vector<double>& scores, const std::vector<std::uint8_t>& correct) {
    if (scores.size() != correct.size()) throw InvalidInput("fpr_at_95_tpr: length mismatch");
    std::size_t p = 0;
    for (auto f : correct) p += (f != 0);
    std::size_t q = scores.size() - p;
    if (p == 0 || q == 0) throw UndefinedMetric("fpr_at_95_tpr: needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Walk score values from high to low; the first threshold whose
    // "score >= threshold" set reaches TPR >= 0.95 is the highest admissible.
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            tp += (correct[order[k]] != 0);
            fp += (correct[order[k]] == 0);
        }
        double tpr = static_cast<double>(tp) / static_cast<double>(p);
        if (tpr >= 0.95) return static_cast<double>(fp) / static_cast<double>(q);
        i = j;
    }
    return 1.0;  // unreachable: threshold = min score always has TPR = 1
}

CalibrationReport make_report(const Matrix& probs, const std::vector<int>& truth,
                              std::size_t ece_bins) {
    if (probs.rows != truth.size()) throw InvalidInput("make_report: length mismatch");
    if (probs.rows == 0) throw InvalidInput("make_report: empty input");

    std::vector<int> pred(probs.rows);
    std::vector<double> conf(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        std::size_t a = argmax_tiebreak(probs.row(i), probs.cols);
        pred[i] = static_cast<int>(a);
        conf[i] = std::min(1.0, probs.at(i, a));
    }

    CalibrationReport rep;
    rep.n = probs.rows;
    HungarianAcc h = hungarian_acc(pred, truth);
    rep.acc = h.acc;
    rep.nmi = nmi(pred, truth);
    rep.ari = std::max(0.0, ari(pred, truth));

    std::vector<std::uint8_t> correct(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        std::size_t mapped = h.mapping[static_cast<std::size_t>(pred[i])];
        correct[i] = (mapped == static_cast<std::size_t>(truth[i])) ? 1 : 0;
    }

    EceResult e = ece(conf, correct, ece_bins);
    rep.ece = e.ece;
    rep.bins = std::move(e.bins);

    std::size_t hits = 0;
    for (auto c : correct) hits += c;
    if (hits == probs.rows) {
        rep.auroc = 1.0;
        rep.aurc = 0.0;
        rep.fpr95 = 0.0;
    } else if (hits == 0) {
        rep.auroc = 0.0;
        rep.aurc = 1.0;
        rep.fpr95 = 1.0;
    } else {
        rep.auroc = auroc(conf, correct);
        rep.aurc = aurc(conf, correct);
        rep.fpr95 = fpr_at_95_tpr(conf, correct);
    }
    return rep;
}

std::string report_to_csv(const CalibrationReport& report) {
    std::string out = "lower,upper,count,accuracy,mean_confidence\n";
    for (const EceBin& b : report.bins) {
        append_double(out, b.lower);
        out += ',';
        append_double(out, b.upper);
        out += ',';
        out += std::to_string(b.count);
        out += ',';
        append_double(out, b.accuracy);
        out += ',';
        append_double(out, b.mean_confidence);
        out += '\n';
    }
    out += "\nmetric,value\n";
    auto metric = [&out](const char* name, double v) {
        out += name;
        out += ',';
        append_double(out, v);
        out += '\n';
    };
    out += "n,";
    out += std::to_string(report.n);
    out += '\n';
    metric("acc", report.acc);
    metric("nmi", report.nmi);
    metric("ari", report.ari);
    metric("ece", report.ece);
    metric("auroc", report.auroc);
    metric("aurc", report.aurc);
    metric("fpr95", report.fpr95);
    return out;
}

CalibrationReport report_from_csv(const std::string& text) {
    CalibrationReport rep;
    std::istringstream in(text);
    std::string line;
    bool in_bins = false, in_metrics = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "lower,upper,count,accuracy,mean_confidence") {
            in_bins = true;
            in_metrics = false;
            continue;
        }
        if (line == "metric,value") {
            in_bins = false;
            in_metrics = true;
            continue;
        }
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (in_bins) {
            if (fields.size() != 5) throw FormatError("report csv: bad bin row: " + line);
            EceBin b;
            b.lower = std::stod(fields[0]);
            b.upper = std::stod(fields[1]);
            b.count = static_cast<std::size_t>(std::stoull(fields[2]));
            b.accuracy = std::stod(fields[3]);
            b.mean_confidence = std::stod(fields[4]);
            rep.bins.push_back(b);
        } else if (in_metrics) {
            if (fields.size() != 2) throw FormatError("report csv: bad metric row: " + line);
            const std::string& k = fields[0];
            if (k == "n")
                rep.n = static_cast<std::size_t>(std::stoull(fields[1]));
            else if (k == "acc")
                rep.acc = std::stod(fields[1]);
            else if (k == "nmi")
                rep.nmi = std::stod(fields[1]);
            else if (k == "ari")
                rep.ari = std::stod(fields[1]);
            else if (k == "ece")
                rep.ece = std::stod(fields[1]);
            else if (k == "auroc")
                rep.auroc = std::stod(fields[1]);
            else if (k == "aurc")
                rep.aurc = std::stod(fields[1]);
            else if (k == "fpr95")
                rep.fpr95 = std::stod(fields[1]);
            else
                throw FormatError("report csv: unknown metric: " + k);
        } else {
            throw FormatError("report csv: unexpected line: " + line);
        }
    }
    if (rep.bins.empty()) throw FormatError("report csv: no bin rows");
    return rep;
}

}  // namespace cdc
