#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "adahi/errors.hpp"
#include "adahi/quantizer.hpp"
#include "adahi/rng.hpp"

using namespace adahi;

namespace {

// Two stages living in orthogonal axis-aligned subspaces of a 2-D latent,
// identity decoder. Greedy and exhaustive encoding provably agree here.
CodebookSet orthogonal_fixture() {
    std::vector<double> s1 = {0.0, 0.0, 1.0, 0.0, 2.0, 0.0};  // x axis
    std::vector<double> s2 = {0.0, 0.0, 0.0, 1.0, 0.0, 2.0};  // y axis
    Mat w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    return CodebookSet::from_parts({s1, s2}, 3, 2, w, Vec{0.0, 0.0});
}

double norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("decode is the affine sum of selected entries") {
    // e1 = (1,0), e2 = (0,1), identity decoder, zero bias -> (1,1)
    std::vector<double> s1 = {0.0, 0.0, 1.0, 0.0};
    std::vector<double> s2 = {0.0, 0.0, 0.0, 1.0};
    Mat w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    auto cb = CodebookSet::from_parts({s1, s2}, 2, 2, w, Vec{0.0, 0.0});

    Vec a = cb.decode(CodeTuple{{1, 1}});
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(1.0).epsilon(1e-15));

    // All-zero selection with zero bias decodes to zero.
    Vec z = cb.decode(CodeTuple{{0, 0}});
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
}

TEST_CASE("decode matches independent arithmetic on a random set") {
    QuantizerConfig cfg;
    cfg.num_stages = 3;
    cfg.entries = 8;
    cfg.action_dim = 4;
    auto cb = CodebookSet::build(cfg, 42);

    RngStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        CodeTuple t;
        for (std::size_t l = 0; l < cb.num_stages(); ++l)
            t.indices.push_back(uint32_t(rng.next_u64() % cb.entries_per_stage()));

        // Straight-line re-computation of W * (sum of entries) + c.
        Vec latent(cb.latent_dim(), 0.0);
        for (std::size_t l = 0; l < cb.num_stages(); ++l) {
            auto e = cb.entry(l, t.indices[l]);
            for (std::size_t i = 0; i < latent.size(); ++i) latent[i] += e[i];
        }
        const Mat& w = cb.decoder_w();
        Vec want(cb.action_dim(), 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            double acc = cb.decoder_c()[r];
            for (std::size_t c = 0; c < w.cols; ++c) acc += w(r, c) * latent[c];
            want[r] = acc;
        }

        Vec got = cb.decode(t);
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(std::abs(got[i] - want[i]) < 1e-12);
    }
}

TEST_CASE("nearest neighbor and tie breaking") {
    // 1-D latent, entries {0, 1}; 0.4 is nearer to entry 0.
    std::vector<double> s1 = {0.0, 1.0};
    Mat w(1, 1);
    w(0, 0) = 1.0;
    auto cb = CodebookSet::from_parts({s1}, 2, 1, w, Vec{0.0});
    Vec a{0.4};
    CHECK(cb.encode_residual(a).indices[0] == 0);
    a[0] = 0.6;
    CHECK(cb.encode_residual(a).indices[0] == 1);
    a[0] = 0.5;  // exact tie resolves to the lowest index
    CHECK(cb.encode_residual(a).indices[0] == 0);
}

TEST_CASE("round trip on lattice points of the orthogonal fixture") {
    auto cb = orthogonal_fixture();
    for (uint32_t i = 0; i < 3; ++i) {
        for (uint32_t j = 0; j < 3; ++j) {
            CodeTuple t{{i, j}};
            CHECK(cb.encode_residual(cb.decode(t)) == t);
        }
    }
}

TEST_CASE("greedy encoding equals exhaustive search on the orthogonal fixture") {
    auto cb = orthogonal_fixture();
    RngStream rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Vec a{3.0 * rng.uniform() - 0.4, 3.0 * rng.uniform() - 0.4};
        CodeTuple greedy = cb.encode_residual(a);

        Vec lifted = cb.lift(a);
        double best = 1e300;
        CodeTuple best_t;
        for (uint32_t i = 0; i < 3; ++i) {
            for (uint32_t j = 0; j < 3; ++j) {
                Vec sum = cb.latent_sum(CodeTuple{{i, j}});
                double d = 0.0;
                for (std::size_t c = 0; c < sum.size(); ++c) {
                    double diff = lifted[c] - sum[c];
                    d += diff * diff;
                }
                if (d < best) {
                    best = d;
                    best_t = CodeTuple{{i, j}};
                }
            }
        }
        CHECK(greedy == best_t);
    }
}

TEST_CASE("residual norm is non-increasing across stages with a zero entry") {
    QuantizerConfig cfg;
    cfg.num_stages = 4;
    cfg.entries = 16;
    cfg.action_dim = 3;
    auto cb = CodebookSet::build(cfg, 9);
    REQUIRE(cfg.include_zero_entry);

    RngStream rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Vec a{rng.normal(), rng.normal(), rng.normal()};
        Vec r = cb.lift(a);
        double prev = norm(r);
        for (std::size_t l = 0; l < cb.num_stages(); ++l) {
            uint32_t k = cb.nearest(l, r);
            auto e = cb.entry(l, k);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= e[i];
            double cur = norm(r);
            // Entry 0 is the zero vector, so the chosen entry can never
            // increase the residual.
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("build is deterministic and stage norms decay geometrically") {
    QuantizerConfig cfg;
    cfg.num_stages = 2;
    cfg.entries = 64;
    cfg.action_dim = 8;
    cfg.scale = 1.0;
    cfg.decay = 0.5;
    auto cb1 = CodebookSet::build(cfg, 77);
    auto cb2 = CodebookSet::build(cfg, 77);
    CHECK(cb1.checksum() == cb2.checksum());
    CHECK(cb1.stage_entries(0) == cb2.stage_entries(0));
    CHECK(cb1.stage_entries(1) == cb2.stage_entries(1));

    auto mean_norm = [&](std::size_t stage) {
        double acc = 0.0;
        std::size_t nonzero = 0;
        for (std::size_t k = 1; k < cb1.entries_per_stage(); ++k) {
            auto e = cb1.entry(stage, k);
            double s = 0.0;
            for (double x : e) s += x * x;
            acc += std::sqrt(s);
            ++nonzero;
        }
        return acc / double(nonzero);
    };
    double ratio = mean_norm(1) / mean_norm(0);
    CHECK(ratio > 0.4);  // 0.5 within 20%
    CHECK(ratio < 0.6);
}

TEST_CASE("build rejects invalid configs") {
    QuantizerConfig cfg;
    cfg.num_stages = 0;
    CHECK_THROWS_AS(CodebookSet::build(cfg, 1), ConfigError);
    cfg.num_stages = 2;
    cfg.entries = 1;
    CHECK_THROWS_AS(CodebookSet::build(cfg, 1), ConfigError);
    cfg.entries = 16;
    cfg.scale = -1.0;
    CHECK_THROWS_AS(CodebookSet::build(cfg, 1), ConfigError);
}

TEST_CASE("tuple validation") {
    QuantizerConfig cfg;
    auto cb = CodebookSet::build(cfg, 1);
    CHECK_THROWS_AS(cb.validate_tuple(CodeTuple{{0}}), ContractError);  // wrong n
    CHECK_THROWS_AS(cb.validate_tuple(CodeTuple{{0, 16}}), ContractError);
    CHECK_NOTHROW(cb.validate_tuple(CodeTuple{{0, 15}}));
    CHECK_THROWS_AS(cb.decode(CodeTuple{{0, 99}}), ContractError);
}

TEST_CASE("save/load round trips bit-identically") {
    QuantizerConfig cfg;
    cfg.num_stages = 3;
    cfg.entries = 8;
    cfg.action_dim = 5;
    auto cb = CodebookSet::build(cfg, 1234);

    auto path = std::filesystem::temp_directory_path() / "adahi_cb_test.bin";
    cb.save(path);
    auto loaded = CodebookSet::load(path);
    std::filesystem::remove(path);

    CHECK(loaded.checksum() == cb.checksum());
    CHECK(loaded.num_stages() == cb.num_stages());
    CHECK(loaded.stage_entries(2) == cb.stage_entries(2));
    CHECK(loaded.decoder_c() == cb.decoder_c());
    // Lift must be rebuilt identically: same encodings.
    RngStream rng(2);
    for (int t = 0; t < 20; ++t) {
        Vec a(5);
        for (auto& x : a) x = rng.normal();
        CHECK(loaded.encode_residual(a) == cb.encode_residual(a));
    }
}
