#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fed/params.hpp"

using namespace fed;

namespace {

ParameterVector pv(std::vector<double> v) {
    return ParameterVector(std::move(v));
}

} // namespace

TEST_CASE("construction rejects non-finite elements") {
    CHECK_THROWS_AS(pv({1.0, std::nan("")}), NonFiniteValue);
    CHECK_THROWS_AS(pv({std::numeric_limits<double>::infinity()}), NonFiniteValue);
    CHECK_NOTHROW(pv({0.0, -1e308, 1e308}));
}

TEST_CASE("vec_combine elementwise arithmetic") {
    CHECK(vec_combine(pv({1, 2}), pv({3, 4}), VecOp::Add) == pv({4, 6}));
    CHECK(vec_combine(pv({5, 5}), pv({5, 5}), VecOp::Sub) == pv({0, 0}));
    CHECK(vec_combine(pv({2, 3}), pv({4, 5}), VecOp::Mul) == pv({8, 15}));
    CHECK(vec_combine(pv({8, 9}), pv({2, 3}), VecOp::Div) == pv({4, 3}));
    CHECK_THROWS_AS(vec_combine(pv({1, 2, 3}), pv({1, 2}), VecOp::Add), DimensionMismatch);
    CHECK_THROWS_AS(vec_combine(pv({1, 2}), pv({1, 0}), VecOp::Div), DivisionByZero);
}

TEST_CASE("vec_scale") {
    CHECK(vec_scale(pv({1, 2}), 0.0) == pv({0, 0}));
    CHECK(vec_scale(pv({1, 2}), 1.0) == pv({1, 2}));
    CHECK(vec_scale(pv({2, -4}), 0.5) == pv({1, -2}));
    CHECK_THROWS_AS(vec_scale(pv({1}), std::nan("")), NonFiniteScalar);
}

TEST_CASE("weighted_mean examples") {
    CHECK(weighted_mean({{pv({1, 2}), 1.0}, {pv({3, 4}), 1.0}}) == pv({2, 3}));
    CHECK(weighted_mean({{pv({0}), 1.0}, {pv({4}), 3.0}}) == pv({3}));  // (1*0+3*4)/4
    CHECK(weighted_mean({{pv({7, 7}), 5.0}}) == pv({7, 7}));
    CHECK_THROWS_AS(weighted_mean({}), EmptyInput);
    CHECK_THROWS_AS(weighted_mean({{pv({1}), 1.0}, {pv({1, 2}), 1.0}}), DimensionMismatch);
}

TEST_CASE("addition commutes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(5), b(5);
        for (auto& x : a) x = dist(rng);
        for (auto& x : b) x = dist(rng);
        CHECK(vec_combine(pv(a), pv(b), VecOp::Add) == vec_combine(pv(b), pv(a), VecOp::Add));
    }
}

TEST_CASE("weighted_mean of identical vectors is that vector") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    std::uniform_real_distribution<double> wdist(0.1, 50.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(4);
        for (auto& x : v) x = dist(rng);
        std::vector<std::pair<ParameterVector, double>> entries;
        for (int i = 0; i < 5; ++i) entries.emplace_back(pv(v), wdist(rng));
        const auto mean = weighted_mean(entries);
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(mean[j] == doctest::Approx(v[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted_mean invariant under uniform weight scaling") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    std::uniform_real_distribution<double> wdist(0.1, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<ParameterVector, double>> entries, scaled;
        const double k = wdist(rng);
        for (int i = 0; i < 4; ++i) {
            std::vector<double> v(3);
            for (auto& x : v) x = dist(rng);
            const double w = wdist(rng);
            entries.emplace_back(pv(v), w);
            scaled.emplace_back(pv(v), k * w);
        }
        const auto a = weighted_mean(entries);
        const auto b = weighted_mean(scaled);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(a[j] - b[j]) < 1e-12);
        }
    }
}

TEST_CASE("weighted_mean stays inside the coordinate-wise hull") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::uniform_real_distribution<double> wdist(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::pair<ParameterVector, double>> entries;
        for (int i = 0; i < 6; ++i) {
            std::vector<double> v(3);
            for (auto& x : v) x = dist(rng);
            entries.emplace_back(pv(v), wdist(rng));
        }
        const auto mean = weighted_mean(entries);
        for (std::size_t j = 0; j < 3; ++j) {
            double lo = 1e300, hi = -1e300;
            for (const auto& [vec, w] : entries) {
                lo = std::min(lo, vec[j]);
                hi = std::max(hi, vec[j]);
            }
            CHECK(mean[j] >= lo - 1e-12);
            CHECK(mean[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("ClientUpdate::make computes the pseudo-gradient") {
    const auto u = ClientUpdate::make("c1", 2, 10, pv({1.0, 2.0}), pv({0.5, 2.5}));
    CHECK(u.pseudo_gradient == pv({0.5, -0.5}));
    CHECK(u.weights == pv({0.5, 2.5}));
    CHECK(u.round == 2);
    CHECK_THROWS_AS(ClientUpdate::make("c1", 0, 1, pv({1.0}), pv({1.0, 2.0})), DimensionMismatch);
}
