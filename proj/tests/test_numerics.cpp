#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cdc/error.hpp"
#include "cdc/numerics.hpp"
#include "cdc/rng.hpp"

using namespace cdc;

namespace {

Matrix row_matrix(std::initializer_list<double> vals) {
    Matrix m(1, vals.size());
    std::size_t j = 0;
    for (double v : vals) m.at(0, j++) = v;
    return m;
}

}  // namespace

TEST_CASE("softmax of a constant row is uniform") {
    Matrix out = softmax_rows(row_matrix({0.0, 0.0, 0.0}));
    for (std::size_t j = 0; j < 3; ++j) CHECK(out.at(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax [0, ln 2] gives [1/3, 2/3]") {
    Matrix out = softmax_rows(row_matrix({0.0, std::log(2.0)}));
    CHECK(out.at(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(out.at(0, 1) == doctest::Approx(2.0 / 3).epsilon(1e-14));
}

TEST_CASE("softmax is exactly shift invariant for representable shifts") {
    // Rows [1,2] and [101,102]: the +100 additions are exact in binary.
    Matrix a = row_matrix({1.0, 2.0});
    Matrix b = row_matrix({101.0, 102.0});
    CHECK(softmax_rows(a).data == softmax_rows(b).data);

    // Fuzz with dyadic values so x + c stays exactly representable.
    RngState rng(3);
    for (int t = 0; t < 2000; ++t) {
        Matrix x(1, 5);
        double c = static_cast<double>(static_cast<int>(rng.uniform() * 1024) - 512) / 16.0;
        Matrix xc(1, 5);
        for (std::size_t j = 0; j < 5; ++j) {
            x.at(0, j) = static_cast<double>(static_cast<int>(rng.uniform() * 8192) - 4096) / 256.0;
            xc.at(0, j) = x.at(0, j) + c;
        }
        CHECK(softmax_rows(x).data == softmax_rows(xc).data);
    }
}

TEST_CASE("softmax rows sum to one under fuzzing") {
    RngState rng(11);
    Matrix x(10000, 7);
    for (double& v : x.data) v = (rng.uniform() - 0.5) * 40.0;
    Matrix p = softmax_rows(x);
    for (std::size_t i = 0; i < p.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.cols; ++j) {
            CHECK(p.at(i, j) >= 0.0);
            s += p.at(i, j);
        }
        CHECK(std::fabs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("softmax rejects non-finite input") {
    Matrix bad = row_matrix({1.0, std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(softmax_rows(bad), InvalidInput);
}

TEST_CASE("argmax with tie-break to the lowest index") {
    CHECK(argmax_tiebreak({0.2, 0.5, 0.3}) == 1);
    CHECK(argmax_tiebreak({0.5, 0.5}) == 0);
    CHECK(argmax_tiebreak({-1.0, -1.0, -0.5}) == 2);
    CHECK_THROWS_AS(argmax_tiebreak(std::vector<double>{}), InvalidInput);
}

TEST_CASE("l2 normalization") {
    NormalizedRows r = l2_normalize_rows(row_matrix({3.0, 4.0}));
    CHECK(r.m.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(r.m.at(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_FALSE(r.any_degenerate);

    NormalizedRows z = l2_normalize_rows(row_matrix({0.0, 0.0}));
    CHECK(z.m.at(0, 0) == 0.0);
    CHECK(z.any_degenerate);
    CHECK(z.degenerate[0] == 1);

    NormalizedRows u = l2_normalize_rows(row_matrix({1.0, 0.0}));
    CHECK(u.m.at(0, 0) == 1.0);
    CHECK(u.m.at(0, 1) == 0.0);
}

TEST_CASE("l2 normalization is idempotent within 1e-12") {
    RngState rng(5);
    Matrix x(200, 9);
    for (double& v : x.data) v = rng.normal() * 10.0;
    Matrix once = l2_normalize_rows(x).m;
    Matrix twice = l2_normalize_rows(once).m;
    for (std::size_t i = 0; i < once.data.size(); ++i)
        CHECK(std::fabs(once.data[i] - twice.data[i]) < 1e-12);
}
