#include <doctest.h>

#include <random>

#include "rich/discrete_pdf.hpp"
#include "rich/errors.hpp"
#include "test_util.hpp"

using rich::DiscretePdf;

TEST_CASE("point mass") {
    auto p = DiscretePdf::point_mass(7);
    CHECK(p.at(7) == 1.0);
    CHECK(p.mean() == 7.0);
    CHECK(p.max_value() == 7);
    CHECK(p.ccdf(7) == 1.0);
    CHECK(p.ccdf(8) == 0.0);
}

TEST_CASE("from_pairs accumulates duplicates") {
    std::vector<std::pair<int, double>> vp{{2, 0.25}, {5, 0.5}, {2, 0.25}};
    auto p = DiscretePdf::from_pairs(vp);
    CHECK(p.at(2) == doctest::Approx(0.5));
    CHECK(p.at(5) == doctest::Approx(0.5));
}

TEST_CASE("from_samples bins by floor") {
    std::vector<double> xs{0.2, 0.9, 1.1, 3.7};
    auto p = DiscretePdf::from_samples(xs, 1.0);
    CHECK(p.at(0) == doctest::Approx(0.5));
    CHECK(p.at(1) == doctest::Approx(0.25));
    CHECK(p.at(3) == doctest::Approx(0.25));

    auto wide = DiscretePdf::from_samples(xs, 2.0);
    CHECK(wide.at(0) == doctest::Approx(0.75));
    CHECK(wide.at(1) == doctest::Approx(0.25));
}

TEST_CASE("validation rejects bad input") {
    CHECK_THROWS_AS(DiscretePdf(std::vector<double>{0.5, 0.4}), rich::DataError);
    CHECK_THROWS_AS(DiscretePdf(std::vector<double>{1.2, -0.2}), rich::DataError);
    CHECK_THROWS_AS(DiscretePdf(std::vector<double>{}), rich::DataError);
}

TEST_CASE("ccdf table is a consistent suffix sum") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 20; ++it) {
        auto p = testutil::random_pdf(rng, 30);
        auto table = p.ccdf_table();
        CHECK(table[0] == doctest::Approx(1.0).epsilon(1e-12));
        for (int v = 0; v <= p.max_value(); ++v) {
            CHECK(table[static_cast<std::size_t>(v)] ==
                  doctest::Approx(p.ccdf(v)).epsilon(1e-12));
        }
    }
}

TEST_CASE("convolution matches direct double sum") {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 20; ++it) {
        auto a = testutil::random_pdf(rng, 12);
        auto b = testutil::random_pdf(rng, 9);
        auto c = a.convolve(b);
        for (int s = 0; s <= a.max_value() + b.max_value(); ++s) {
            double expect = 0.0;
            for (int v = 0; v <= s; ++v) expect += a.at(v) * b.at(s - v);
            CHECK(c.at(s) == doctest::Approx(expect).epsilon(1e-12));
        }
        CHECK(c.mass() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(c.mean() == doctest::Approx(a.mean() + b.mean()).epsilon(1e-9));
    }
}

TEST_CASE("truncation: inactive when capacity covers the support") {
    auto p = testutil::triangular_mean10();
    auto t = p.truncated(19);
    CHECK(t.max_value() == p.max_value());
    for (int v = 0; v <= p.max_value(); ++v) CHECK(t.at(v) == p.at(v));
}

TEST_CASE("truncation: capacity 0 collapses to a point mass at 0") {
    auto t = testutil::triangular_mean10().truncated(0);
    CHECK(t.max_value() == 0);
    CHECK(t.at(0) == doctest::Approx(1.0));
}

TEST_CASE("truncation: tail mass lands on the cap (triangular, M=15)") {
    auto p = testutil::triangular_mean10();
    auto t = p.truncated(15);
    double tail = 0.0;  // independent suffix oracle
    for (int v = 15; v <= p.max_value(); ++v) tail += p.at(v);
    CHECK(t.at(15) == doctest::Approx(tail).epsilon(1e-15));
    for (int v = 0; v < 15; ++v) CHECK(t.at(v) == p.at(v));
    CHECK(t.at(16) == 0.0);
}

TEST_CASE("truncation preserves mass and never increases the mean") {
    std::mt19937_64 rng(13);
    for (int it = 0; it < 50; ++it) {
        auto p = testutil::random_pdf(rng, 40);
        const int cap = static_cast<int>(rng() % 45);
        auto t = p.truncated(cap);
        CHECK(t.mass() == doctest::Approx(p.mass()).epsilon(1e-12));
        CHECK(t.mean() <= p.mean() + 1e-12);
        CHECK(t.max_value() <= cap);
    }
}

TEST_CASE("map_values merges equal images") {
    auto p = testutil::triangular_mean10();
    auto halved = p.map_values([](int v) { return static_cast<long long>(v / 2); });
    CHECK(halved.mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(halved.at(5) == doctest::Approx(p.at(10) + p.at(11)).epsilon(1e-12));
}

TEST_CASE("quantile inverts the cdf") {
    auto p = DiscretePdf::from_pairs(
        std::vector<std::pair<int, double>>{{1, 0.25}, {4, 0.5}, {9, 0.25}});
    CHECK(p.quantile(0.0) == 1);
    CHECK(p.quantile(0.24) == 1);
    CHECK(p.quantile(0.26) == 4);
    CHECK(p.quantile(0.74) == 4);
    CHECK(p.quantile(0.76) == 9);
    CHECK(p.quantile(0.999) == 9);
}
