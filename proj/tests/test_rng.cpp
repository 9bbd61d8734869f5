#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include <qsmc/rng.hpp>

using namespace qsmc;

// Reference vectors for Philox4x32-10 from the algorithm's published
// known-answer tests: all-zero input, all-ones input, and the pi-digits
// counter/key pair.
TEST_CASE("philox4x32-10 known-answer vectors") {
    {
        const uint32_t ctr[4] = {0, 0, 0, 0};
        const uint32_t key[2] = {0, 0};
        const auto out = detail::philox4x32_10(ctr, key);
        CHECK(out.v[0] == 0x6627e8d5u);
        CHECK(out.v[1] == 0xe169c58du);
        CHECK(out.v[2] == 0xbc57ac4cu);
        CHECK(out.v[3] == 0x9b00dbd8u);
    }
    {
        const uint32_t ctr[4] = {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
        const uint32_t key[2] = {0xffffffffu, 0xffffffffu};
        const auto out = detail::philox4x32_10(ctr, key);
        CHECK(out.v[0] == 0x408f276du);
        CHECK(out.v[1] == 0x41c83b0eu);
        CHECK(out.v[2] == 0xa20bc7c6u);
        CHECK(out.v[3] == 0x6d5451fdu);
    }
    {
        const uint32_t ctr[4] = {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u};
        const uint32_t key[2] = {0xa4093822u, 0x299f31d0u};
        const auto out = detail::philox4x32_10(ctr, key);
        CHECK(out.v[0] == 0xd16cfe09u);
        CHECK(out.v[1] == 0x94fdccebu);
        CHECK(out.v[2] == 0x5001e420u);
        CHECK(out.v[3] == 0x24126ea1u);
    }
}

TEST_CASE("stream words come straight from the philox block") {
    RngStream s(0);
    const uint32_t ctr[4] = {0, 0, 0, 0};
    const uint32_t key[2] = {0, 0};
    const auto block0 = detail::philox4x32_10(ctr, key);
    for (int i = 0; i < 4; ++i) CHECK(s.next_u32() == block0.v[i]);

    const uint32_t ctr1[4] = {1, 0, 0, 0};
    const auto block1 = detail::philox4x32_10(ctr1, key);
    CHECK(s.next_u32() == block1.v[0]);
}

TEST_CASE("identical (seed, substream, purpose) reproduces the sequence") {
    RngStream a(0x0123456789abcdefULL, 42, stream_purpose::path);
    RngStream b(0x0123456789abcdefULL, 42, stream_purpose::path);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u32() == b.next_u32());
    // and the derived transforms too
    RngStream c(0x0123456789abcdefULL, 42, stream_purpose::path);
    RngStream d(0x0123456789abcdefULL, 42, stream_purpose::path);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(c.normal() == d.normal());
        REQUIRE(c.uniform() == d.uniform());
        REQUIRE(c.exponential(2.0) == d.exponential(2.0));
    }
}

TEST_CASE("substreams and purposes decorrelate the first block") {
    RngStream base(7, 0, stream_purpose::path);
    RngStream next_replica(7, 1, stream_purpose::path);
    RngStream other_purpose(7, 0, stream_purpose::kill);
    const uint32_t w = base.next_u32();
    CHECK(w != next_replica.next_u32());
    CHECK(other_purpose.next_u32() != w);
}

TEST_CASE("derived streams are fresh and independent of consumption") {
    RngStream a(99, 5, stream_purpose::path);
    // Consume an odd amount before deriving: the derived stream must not care.
    for (int i = 0; i < 37; ++i) a.next_u32();
    RngStream k1 = a.derived(stream_purpose::kill);
    RngStream k2 = RngStream(99, 5, stream_purpose::kill);
    for (int i = 0; i < 64; ++i) REQUIRE(k1.next_u32() == k2.next_u32());
}

TEST_CASE("uniform lies strictly inside (0,1) and has the right moments") {
    RngStream s(2024);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // SE(mean) = sqrt(1/12n); SE(var) ~ sqrt((E u^4 - (1/12)^2)/n) ~ 0.0745/sqrt(n)
    CHECK(std::fabs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::fabs(var - 1.0 / 12.0) < 4.0 * 0.0745 / std::sqrt(double(n)));
}

TEST_CASE("normal has standard moments") {
    RngStream s(77);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
        sum4 += z * z * z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    const double kurt = sum4 / n;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(double(n)));             // SE = 1/sqrt(n)
    CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));          // SE = sqrt(2/n)
    CHECK(std::fabs(kurt - 3.0) < 4.0 * std::sqrt(96.0 / n));        // Var(z^4) = 96
}

TEST_CASE("exponential moments and parameter validation") {
    RngStream s(31337);
    const int n = 200000;
    const double rate = 2.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += s.exponential(rate);
    const double mean = sum / n;
    // Exp(2): mean 1/2, sd 1/2
    CHECK(std::fabs(mean - 0.5) < 4.0 * 0.5 / std::sqrt(double(n)));

    CHECK_THROWS_AS(s.exponential(0.0), contract_violation);
    CHECK_THROWS_AS(s.exponential(-1.0), contract_violation);
}

TEST_CASE("adjacent substreams are uncorrelated") {
    const int n = 100000;
    double cross = 0.0;
    RngStream a(555, 0, stream_purpose::path);
    RngStream b(555, 1, stream_purpose::path);
    for (int i = 0; i < n; ++i) cross += a.normal() * b.normal();
    // Under independence, cross/n ~ N(0, 1/n).
    CHECK(std::fabs(cross / n) < 4.0 / std::sqrt(double(n)));
}
