#ifndef CDC_DATAIO_HPP
#define CDC_DATAIO_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cdc/matrix.hpp"
#include "cdc/rng.hpp"
#include "cdc/trainer.hpp"

namespace cdc {

// Binary file formats, all multi-byte values little-endian:
//   features  "CDCF": magic, u32 version, u64 N, u64 D, N*D f32 row-major
//   labels    "CDCL": magic, u64 N, N i32
//   checkpoint "CDCK": magic, u32 version, u64 config digest, then all
//              parameter/optimizer/RNG payloads as 64-bit reals and integers.

/// Features are stored in single precision and promoted to double on read.
void write_features(const std::string& path, const Matrix& m);
Matrix read_features(const std::string& path);

void write_labels(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels(const std::string& path);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// CSV import: header d0,...,dD-1[,label]; the label column is optional.
std::pair<Matrix, std::vector<int>> read_csv_features(const std::string& path);

struct MixtureSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t c = 0;
    double separation = 0.0;  // inter-center distance in within-component std units
    std::uint64_t seed = 0;
};

/// Synthetic Gaussian mixture: c centers at mutual distance separation along
/// random orthonormal directions, unit-variance isotropic samples, class
/// sizes balanced within one sample, order shuffled. Deterministic per seed.
std::pair<Matrix, std::vector<int>> gen_mixture(const MixtureSpec& spec);

/// Accuracy of the Bayes-optimal (nearest true center) classifier on a fresh
/// Monte-Carlo draw from the same mixture; the oracle for separability.
double mixture_bayes_accuracy(const MixtureSpec& spec, std::size_t mc_samples = 20000);

}  // namespace cdc

#endif  // CDC_DATAIO_HPP
