#include "iqra/vst.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace iqra;

TEST(Vst, ForwardExamples) {
    EXPECT_EQ(vst_forward(0.0, 0.5), 0.0);
    EXPECT_EQ(vst_forward(0.0, 0.0), 0.0);
    EXPECT_NEAR(vst_forward(3.0, 0.5), 2.0, 1e-15);
    EXPECT_NEAR(vst_forward(-3.0, 0.5), -2.0, 1e-15);
}

TEST(Vst, InverseExamples) {
    EXPECT_NEAR(vst_inverse(2.0, 0.5), 3.0, 1e-14);
    EXPECT_EQ(vst_inverse(0.0, 0.5), 0.0);
    EXPECT_THROW(vst_forward(1.0, -0.1), DataError);
}

TEST(Vst, RoundTrip) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-500.0, 4000.0);
    for (double lambda : {0.0, 0.25, 0.5, 1.0, 2.0}) {
        for (int i = 0; i < 1000; ++i) {
            const double p = u(rng);
            EXPECT_NEAR(vst_inverse(vst_forward(p, lambda), lambda), p, 1e-12 * std::max(1.0, std::abs(p)));
        }
    }
}

TEST(Vst, RoundTripWideRange) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (double lambda : {0.0, 0.5}) {
        for (int i = 0; i < 1000; ++i) {
            const double p = u(rng);
            EXPECT_NEAR(vst_inverse(vst_forward(p, lambda), lambda), p, 1e-12 * std::max(1.0, std::abs(p)));
        }
    }
}

TEST(Vst, OddAndIncreasing) {
    for (double lambda : {0.0, 0.1, 0.5, 1.0, 3.0}) {
        double prev = -std::numeric_limits<double>::infinity();
        for (double p = -1000.0; p <= 1000.0; p += 0.37) {
            const double f = vst_forward(p, lambda);
            EXPECT_GT(f, prev);
            EXPECT_EQ(vst_forward(-p, lambda), -f);
            prev = f;
        }
    }
}

TEST(Vst, ContinuityAtZeroExponent) {
    for (double p : {-50.0, -1.0, 0.3, 2.0, 900.0}) {
        const double a = vst_forward(p, 1e-8), b = vst_forward(p, 0.0);
        EXPECT_NEAR(a, b, 1e-6 * std::abs(b));
    }
}

TEST(Standardize, ConstantPlusOutlier) {
    const std::vector<double> w{5, 5, 5, 5, 100};
    EXPECT_EQ(median(w), 5.0);
    EXPECT_EQ(median_abs_deviation(w, 5.0), 0.0);
    EXPECT_THROW(standardize(w), DataError);
    const auto s = standardize(std::vector<double>{5, 5, 5, 6, 4, 100});
    EXPECT_EQ(s.params.a, 5.0);
    EXPECT_EQ(s.params.b, 0.5);
}

TEST(Standardize, SymmetricWindowCentersAtZero) {
    const auto s = standardize(std::vector<double>{-4, -1, 0, 1, 4});
    EXPECT_EQ(s.params.a, 0.0);
    EXPECT_EQ(s.params.b, 1.0);
}

TEST(Standardize, RoundTrip) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(40.0, 25.0);
    std::vector<double> w(364);
    for (auto& v : w) v = n(rng);
    const auto s = standardize(w);
    const auto back = destandardize(s.params, s.values);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(back[i], w[i], 1e-10);
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW(median({}), DataError);
}
