#include "cdc/dataio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cdc/error.hpp"
#include "cdc/kernels.hpp"
#include "cdc/kmeans.hpp"

namespace cdc {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

// Sequential reader that reports the byte offset of any failure.
class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::size_t offset() const { return pos_; }

    void expect_magic(const char* magic) {
        if (bytes_.size() < pos_ + 4 || std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
            throw FormatError(path_ + ": bad magic at byte " + std::to_string(pos_) +
                              " (expected \"" + magic + "\")");
        pos_ += 4;
    }

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

    void need(std::size_t n, const char* what) {
        if (bytes_.size() < pos_ + n)
            throw FormatError(path_ + ": truncated at byte " + std::to_string(pos_) + " reading " +
                              what + " (expected " + std::to_string(pos_ + n) + " bytes, file has " +
                              std::to_string(bytes_.size()) + ")");
    }

    void expect_end() {
        if (pos_ != bytes_.size())
            throw FormatError(path_ + ": trailing bytes after offset " + std::to_string(pos_));
    }

private:
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(path + ": write failed");
}

void put_vec(std::string& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    for (double x : v) put_f64(out, x);
}

std::vector<double> get_vec(Reader& r) {
    std::uint64_t n = r.u64();
    std::vector<double> v(n);
    for (auto& x : v) x = r.f64();
    return v;
}

void put_matrix(std::string& out, const Matrix& m) {
    put_u64(out, m.rows);
    put_u64(out, m.cols);
    for (double x : m.data) put_f64(out, x);
}

Matrix get_matrix(Reader& r) {
    std::uint64_t rows = r.u64();
    std::uint64_t cols = r.u64();
    Matrix m(rows, cols);
    for (auto& x : m.data) x = r.f64();
    return m;
}

void put_adam(std::string& out, const AdamState& s) {
    put_u64(out, s.step);
    put_f64(out, s.lr);
    put_f64(out, s.beta1);
    put_f64(out, s.beta2);
    put_f64(out, s.eps);
    put_vec(out, s.m);
    put_vec(out, s.v);
}

AdamState get_adam(Reader& r) {
    AdamState s;
    s.step = r.u64();
    s.lr = r.f64();
    s.beta1 = r.f64();
    s.beta2 = r.f64();
    s.eps = r.f64();
    s.m = get_vec(r);
    s.v = get_vec(r);
    return s;
}

void put_head(std::string& out, const HeadParams& h) {
    put_matrix(out, h.w1);
    put_vec(out, h.b1);
    put_vec(out, h.bn_gamma);
    put_vec(out, h.bn_beta);
    put_vec(out, h.bn_running_mean);
    put_vec(out, h.bn_running_var);
    put_matrix(out, h.w2);
    put_vec(out, h.b2);
}

HeadParams get_head(Reader& r) {
    HeadParams h;
    h.w1 = get_matrix(r);
    h.b1 = get_vec(r);
    h.bn_gamma = get_vec(r);
    h.bn_beta = get_vec(r);
    h.bn_running_mean = get_vec(r);
    h.bn_running_var = get_vec(r);
    h.w2 = get_matrix(r);
    h.b2 = get_vec(r);
    return h;
}

constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void write_features(const std::string& path, const Matrix& m) {
    if (!m.all_finite()) throw InvalidInput("write_features: non-finite matrix");
    std::string out;
    out.reserve(24 + m.data.size() * 4);
    out += "CDCF";
    put_u32(out, kFeatureVersion);
    put_u64(out, m.rows);
    put_u64(out, m.cols);
    for (double v : m.data) put_f32(out, static_cast<float>(v));
    spill(path, out);
}

Matrix read_features(const std::string& path) {
    Reader r(slurp(path), path);
    r.expect_magic("CDCF");
    std::uint32_t version = r.u32();
    if (version != kFeatureVersion)
        throw FormatError(path + ": unsupported feature version " + std::to_string(version));
    std::uint64_t n = r.u64();
    std::uint64_t d = r.u64();
    if (n > (1ULL << 40) || d > (1ULL << 24))
        throw FormatError(path + ": implausible dimensions " + std::to_string(n) + "x" +
                          std::to_string(d));
    r.need(n * d * 4, "feature payload");
    Matrix m(n, d);
    for (auto& v : m.data) v = static_cast<double>(r.f32());
    r.expect_end();
    return m;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::string out;
    out.reserve(12 + labels.size() * 4);
    out += "CDCL";
    put_u64(out, labels.size());
    for (int v : labels) put_i32(out, v);
    spill(path, out);
}

std::vector<int> read_labels(const std::string& path) {
    Reader r(slurp(path), path);
    r.expect_magic("CDCL");
    std::uint64_t n = r.u64();
    if (n > (1ULL << 40)) throw FormatError(path + ": implausible label count " + std::to_string(n));
    r.need(n * 4, "label payload");
    std::vector<int> labels(n);
    for (auto& v : labels) v = r.i32();
    r.expect_end();
    return labels;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string out;
    out += "CDCK";
    put_u32(out, kCheckpointVersion);
    put_u64(out, ckpt.config_digest);
    put_u64(out, ckpt.state.epoch);
    put_u64(out, ckpt.state.rng.seed);
    put_u64(out, ckpt.state.rng.counter);
    put_u64(out, ckpt.state.encoder.mode == EncoderMode::Adapter ? 1 : 0);
    if (ckpt.state.encoder.mode == EncoderMode::Adapter) {
        put_matrix(out, ckpt.state.encoder.w);
        put_vec(out, ckpt.state.encoder.b);
        put_adam(out, ckpt.state.encoder_opt);
    }
    put_head(out, ckpt.state.clu);
    put_adam(out, ckpt.state.clu_opt);
    put_head(out, ckpt.state.cal);
    put_adam(out, ckpt.state.cal_opt);
    spill(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(slurp(path), path);
    r.expect_magic("CDCK");
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.config_digest = r.u64();
    ckpt.state.epoch = r.u64();
    ckpt.state.rng.seed = r.u64();
    ckpt.state.rng.counter = r.u64();
    std::uint64_t mode = r.u64();
    if (mode == 1) {
        ckpt.state.encoder.mode = EncoderMode::Adapter;
        ckpt.state.encoder.w = get_matrix(r);
        ckpt.state.encoder.b = get_vec(r);
        ckpt.state.encoder_opt = get_adam(r);
    } else {
        ckpt.state.encoder.mode = EncoderMode::Identity;
    }
    ckpt.state.clu = get_head(r);
    ckpt.state.clu_opt = get_adam(r);
    ckpt.state.cal = get_head(r);
    ckpt.state.cal_opt = get_adam(r);
    r.expect_end();
    return ckpt;
}

std::pair<Matrix, std::vector<int>> read_csv_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path + ": cannot open");
    std::string header;
    if (!std::getline(in, header)) throw FormatError(path + ": empty file");

    std::vector<std::string> cols;
    {
        std::istringstream hs(header);
        std::string field;
        while (std::getline(hs, field, ',')) cols.push_back(field);
    }
    bool has_label = !cols.empty() && cols.back() == "label";
    std::size_t d = has_label ? cols.size() - 1 : cols.size();
    for (std::size_t j = 0; j < d; ++j)
        if (cols[j] != "d" + std::to_string(j))
            throw FormatError(path + ": expected header column d" + std::to_string(j) + ", got " +
                              cols[j]);
    if (d == 0) throw FormatError(path + ": no feature columns");

    std::vector<double> values;
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::size_t got = 0;
        while (std::getline(ls, field, ',')) {
            try {
                if (got < d)
                    values.push_back(std::stod(field));
                else if (has_label && got == d)
                    labels.push_back(std::stoi(field));
            } catch (const std::exception&) {
                throw FormatError(path + ": line " + std::to_string(lineno) +
                                  ": cannot parse value \"" + field + "\"");
            }
            ++got;
        }
        if (got != cols.size())
            throw FormatError(path + ": line " + std::to_string(lineno) + " has " +
                              std::to_string(got) + " fields, expected " +
                              std::to_string(cols.size()));
    }
    Matrix m(values.size() / d, d);
    m.data = std::move(values);
    return {std::move(m), std::move(labels)};
}

namespace {

// c orthonormal direction vectors in R^d (random unit vectors if c > d,
// where mutual distances are only approximate).
Matrix mixture_directions(std::size_t c, std::size_t d, RngState& rng) {
    Matrix dirs(c, d);
    for (double& v : dirs.data) v = rng.normal();
    if (c <= d) {
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t k = 0; k < i; ++k) {
                double proj = kernels::dot(dirs.row(i), dirs.row(k), d);
                kernels::axpy(-proj, dirs.row(k), dirs.row(i), d);
            }
            double norm = std::sqrt(kernels::dot(dirs.row(i), dirs.row(i), d));
            if (norm < 1e-12) {  // resample a degenerate draw
                for (std::size_t j = 0; j < d; ++j) dirs.at(i, j) = rng.normal();
                --i;
                continue;
            }
            kernels::scale(1.0 / norm, dirs.row(i), d);
        }
    } else {
        for (std::size_t i = 0; i < c; ++i) {
            double norm = std::sqrt(kernels::dot(dirs.row(i), dirs.row(i), d));
            kernels::scale(1.0 / norm, dirs.row(i), d);
        }
    }
    return dirs;
}

Matrix mixture_centers(const MixtureSpec& spec, RngState& rng) {
    Matrix dirs = mixture_directions(spec.c, spec.d, rng);
    // Orthonormal directions sit at mutual distance sqrt(2); rescale so
    // centers are `separation` apart.
    kernels::scale(spec.separation / std::sqrt(2.0), dirs.data.data(), dirs.data.size());
    return dirs;
}

}  // namespace

std::pair<Matrix, std::vector<int>> gen_mixture(const MixtureSpec& spec) {
    if (spec.c < 2 || spec.n < spec.c) throw InvalidInput("gen_mixture: need n >= c >= 2");
    if (spec.d < 1) throw InvalidInput("gen_mixture: need d >= 1");
    if (spec.separation < 0) throw InvalidInput("gen_mixture: separation must be >= 0");

    RngState rng(spec.seed);
    Matrix centers = mixture_centers(spec, rng);

    // Balanced class counts within one sample.
    std::vector<int> labels(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) labels[i] = static_cast<int>(i % spec.c);
    rng.shuffle(labels);

    Matrix x(spec.n, spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double* mu = centers.row(static_cast<std::size_t>(labels[i]));
        double* row = x.row(i);
        for (std::size_t j = 0; j < spec.d; ++j) row[j] = mu[j] + rng.normal();
    }
    return {std::move(x), std::move(labels)};
}

double mixture_bayes_accuracy(const MixtureSpec& spec, std::size_t mc_samples) {
    RngState rng(spec.seed);
    Matrix centers = mixture_centers(spec, rng);

    RngState mc(spec.seed ^ 0x6D6F6E7465636172ULL);
    std::size_t hit = 0;
    std::vector<double> row(spec.d);
    for (std::size_t i = 0; i < mc_samples; ++i) {
        auto cls = static_cast<std::size_t>(i % spec.c);
        for (std::size_t j = 0; j < spec.d; ++j) row[j] = centers.at(cls, j) + mc.normal();
        std::size_t best = 0;
        double bd = kernels::sqdist(row.data(), centers.row(0), spec.d);
        for (std::size_t k = 1; k < spec.c; ++k) {
            double dist = kernels::sqdist(row.data(), centers.row(k), spec.d);
            if (dist < bd) {
                bd = dist;
                best = k;
            }
        }
        hit += (best == cls);
    }
    return static_cast<double>(hit) / static_cast<double>(mc_samples);
}

}  // namespace cdc
