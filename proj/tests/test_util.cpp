#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <vector>

#include "multilink/csv.hpp"
#include "multilink/rng.hpp"
#include "multilink/util.hpp"
#include "test_helpers.hpp"

using namespace multilink;

TEST_CASE("log_add matches a long-double oracle and handles -inf") {
    // Oracle: direct evaluation in extended precision where exp() is safe.
    auto oracle = [](double a, double b) {
        long double s = std::exp((long double)a) + std::exp((long double)b);
        return (double)std::log(s);
    };
    const double vals[] = {-3.5, -1.0, 0.0, 0.25, 2.0, 10.0, -20.0};
    for (double a : vals)
        for (double b : vals)
            CHECK(log_add(a, b) == doctest::Approx(oracle(a, b)).epsilon(1e-13));

    CHECK(log_add(kNegInf, 1.5) == 1.5);
    CHECK(log_add(1.5, kNegInf) == 1.5);
    CHECK(log_add(kNegInf, kNegInf) == kNegInf);
    // No overflow for operands far outside exp() range.
    CHECK(log_add(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(log_add(-1000.0, -1000.0) ==
          doctest::Approx(-1000.0 + std::log(2.0)));
}

TEST_CASE("log_sum_exp matches pairwise log_add folding") {
    std::vector<double> xs = {-2.0, 0.5, 3.25, -700.0, 1.75};
    double folded = kNegInf;
    for (double x : xs) folded = log_add(folded, x);
    CHECK(log_sum_exp(xs) == doctest::Approx(folded).epsilon(1e-13));

    std::vector<double> empty;
    CHECK(log_sum_exp(empty) == kNegInf);
    std::vector<double> allneg = {kNegInf, kNegInf};
    CHECK(log_sum_exp(allneg) == kNegInf);
    std::vector<double> shifted = {900.0, 901.0, 899.0};
    std::vector<double> centered = {0.0, 1.0, -1.0};
    CHECK(log_sum_exp(shifted) ==
          doctest::Approx(900.0 + log_sum_exp(centered)).epsilon(1e-13));
}

TEST_CASE("log_factorial equals the exact product up to 20!") {
    long double prod = 1.0L;
    CHECK(log_factorial(0) == doctest::Approx(0.0));
    for (int n = 1; n <= 20; ++n) {
        prod *= n;
        CHECK(log_factorial(n) ==
              doctest::Approx((double)std::log(prod)).epsilon(1e-13));
    }
}

TEST_CASE("fnv1a64 reproduces the published 64-bit test vectors") {
    CHECK(fnv1a64(std::string("")) == 0xcbf29ce484222325ull);
    CHECK(fnv1a64(std::string("a")) == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64(std::string("foobar")) == 0x85944171f73967e8ull);
    // Chaining a string in two pieces equals hashing it whole.
    std::uint64_t h = fnv1a64("foo", 3);
    CHECK(fnv1a64("bar", 3, h) == fnv1a64(std::string("foobar")));
}

TEST_CASE("hash_file_bytes hashes exactly the file contents") {
    testutil::ScratchDir tmp("hash");
    std::string content = "line1\nline2,with\"quote\n";
    write_text_file(tmp.file("x.bin"), content);
    CHECK(hash_file_bytes(tmp.file("x.bin")) == fnv1a64(content));
    CHECK_THROWS_AS((void)hash_file_bytes(tmp.file("missing.bin")), DataError);
}

TEST_CASE("error types carry messages and derive from runtime_error") {
    CHECK_THROWS_WITH_AS(throw ConfigError("bad knob"), "bad knob",
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(throw DataError("bad cell"), "bad cell",
                         std::runtime_error);
}

// ------------------------------------------------------------------- rng ---

TEST_CASE("derive_seed separates roles and indices") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t master : {0ull, 1ull, 0x12345678ull})
        for (const char* role : {"truth", "distort", "chain", "replicate"})
            for (std::uint64_t idx = 0; idx < 8; ++idx)
                seen.insert(derive_seed(master, role, idx));
    CHECK(seen.size() == 3 * 4 * 8);  // no collisions across the grid
    CHECK(derive_seed(7, "chain", 2) == derive_seed(7, "chain", 2));
    CHECK(derive_seed(7, "chain") == derive_seed(7, "chain", 0));
}

TEST_CASE("Rng streams are deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff = any_diff || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform01 lies in [0,1) with the right first two moments") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    // se(mean) = sqrt(1/12/n) ~ 6.5e-4; allow 5 se.
    CHECK(std::abs(mean - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(var - 1.0 / 12) < 5 * std::sqrt(1.0 / 180.0 / n));
}

TEST_CASE("uniform_below is unbiased across residue classes") {
    Rng rng(7);
    const std::uint64_t k = 7;
    std::vector<long long> counts(k, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_below(k)];
    CHECK(testutil::gof_pvalue(counts, std::vector<double>(k, 1.0 / k)) >
          0.001);
    CHECK_THROWS(rng.uniform_below(0));
}

TEST_CASE("shuffle produces uniformly distributed permutations of 3") {
    Rng rng(11);
    std::map<std::vector<int>, long long> freq;
    for (int i = 0; i < 60000; ++i) {
        std::vector<int> v = {0, 1, 2};
        rng.shuffle(v);
        ++freq[v];
    }
    CHECK(freq.size() == 6);
    std::vector<long long> counts;
    for (auto& [perm, c] : freq) counts.push_back(c);
    CHECK(testutil::gof_pvalue(counts, std::vector<double>(6, 1.0 / 6)) >
          0.001);
}

TEST_CASE("normal and gamma draws match their moments") {
    Rng rng(99);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt((double)n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));

    for (double shape : {0.5, 2.5}) {
        double g = 0, g2 = 0;
        for (int i = 0; i < n; ++i) {
            double x = rng.gamma(shape);
            CHECK(x > 0.0);
            g += x;
            g2 += x * x;
        }
        double mean = g / n;
        double var = g2 / n - mean * mean;
        // Gamma(shape,1): mean = var = shape; se(mean) = sqrt(shape/n).
        CHECK(std::abs(mean - shape) < 6 * std::sqrt(shape / n));
        // var(sample var) ~ (mu4 - var^2)/n with mu4 = 3s^2 + 6s for gamma.
        double mu4 = 3 * shape * shape + 6 * shape;
        CHECK(std::abs(var - shape) < 6 * std::sqrt(mu4 / n));
    }
    CHECK_THROWS(rng.gamma(0.0));
}

TEST_CASE("dirichlet draws sum to one with mean alpha_i / alpha_0") {
    Rng rng(5);
    std::vector<double> alpha = {1.0, 2.0, 5.0};
    double a0 = 8.0;
    const int n = 50000;
    std::vector<double> mean(3, 0.0);
    for (int i = 0; i < n; ++i) {
        auto x = rng.dirichlet(alpha);
        double tot = x[0] + x[1] + x[2];
        CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 0; j < 3; ++j) mean[j] += x[j];
    }
    for (int j = 0; j < 3; ++j) {
        double m = alpha[j] / a0;
        double se = std::sqrt(m * (1 - m) / (a0 + 1) / n);
        CHECK(std::abs(mean[j] / n - m) < 6 * se);
    }
}

TEST_CASE("categorical follows the weight vector; log version agrees") {
    Rng rng(31);
    std::vector<double> w = {1.0, 3.0, 0.0, 6.0};
    std::vector<long long> counts(4, 0);
    for (int i = 0; i < 100000; ++i) ++counts[rng.categorical(w)];
    CHECK(counts[2] == 0);
    CHECK(testutil::gof_pvalue(counts, {0.1, 0.3, 0.0, 0.6}) > 0.001);

    std::vector<double> logw = {std::log(1.0), std::log(3.0), kNegInf,
                                std::log(6.0)};
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < 100000; ++i) ++counts[rng.categorical_log(logw)];
    CHECK(counts[2] == 0);
    CHECK(testutil::gof_pvalue(counts, {0.1, 0.3, 0.0, 0.6}) > 0.001);

    std::vector<double> none = {kNegInf, kNegInf};
    CHECK_THROWS(rng.categorical_log(none));
    std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS(rng.categorical(zero));
}

TEST_CASE("categorical_log pruning drops entries far below the max") {
    Rng rng(8);
    // Second entry is 60 nats below the max; with the default prune depth of
    // 50 nats it must never be drawn even over many trials.
    std::vector<double> logw = {0.0, -60.0};
    for (int i = 0; i < 20000; ++i) CHECK(rng.categorical_log(logw) == 0);
}
