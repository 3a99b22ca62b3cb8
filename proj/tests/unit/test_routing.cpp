#include <doctest.h>

#include <random>

#include "acc/error.hpp"
#include "acc/routing.hpp"
#include "test_support.hpp"

TEST_CASE("token groups tile the sequence") {
    auto g = acc::token_groups(10, 4);
    CHECK(g == std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {2, 5}, {5, 7}, {7, 10}});
    CHECK(acc::token_groups(7, 7).back() == std::pair<std::size_t, std::size_t>{6, 7});
    CHECK_THROWS_AS(acc::token_groups(3, 4), acc::Error);
    CHECK_THROWS_AS(acc::token_groups(3, 0), acc::Error);
}

TEST_CASE("frequencies sum to k and match a pooled count") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<std::uint32_t> T(8, 90), E(2, 24), n(1, 4);
        const std::uint32_t experts = E(rng);
        const std::uint32_t k = std::uniform_int_distribution<std::uint32_t>(1, experts)(rng);
        std::vector<acc::RouterDump> dumps;
        for (std::uint32_t s = 0, count = n(rng); s < count; ++s)
            dumps.push_back(acc_test::random_router_dump(rng, 2, T(rng), experts, k));
        const std::size_t G = 8;
        auto agg = acc::aggregate_expert_frequencies(dumps, G);
        auto pooled = acc_test::pooled_frequencies(dumps, G);
        REQUIRE(agg.freq.size() == pooled.size());
        for (std::size_t i = 0; i < pooled.size(); ++i) CHECK(agg.freq[i] == doctest::Approx(pooled[i]).epsilon(1e-9));
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t g = 0; g < G; ++g) {
                double sum = 0.0;
                std::uint64_t hits = 0;
                for (std::size_t e = 0; e < experts; ++e) {
                    sum += agg.f(l, e, g);
                    hits += agg.hits[agg.index(l, e, g)];
                }
                CHECK(sum == doctest::Approx(k).epsilon(1e-12));
                CHECK(hits == k * agg.group_tokens[g]);
            }
    }
}

TEST_CASE("router dump validation") {
    acc::RouterDump d{1, 2, 4, 2, {0, 1, 2, 3}};
    CHECK_NOTHROW(acc::validate_router_dump(d));
    auto dup = d;
    dup.experts[1] = 0;
    CHECK_THROWS_AS(acc::validate_router_dump(dup), acc::Error);
    auto range = d;
    range.experts[3] = 4;
    CHECK_THROWS_AS(acc::validate_router_dump(range), acc::Error);
    auto shape = d;
    shape.experts.pop_back();
    CHECK_THROWS_AS(acc::validate_router_dump(shape), acc::Error);
}

TEST_CASE("router dump file round-trip") {
    std::mt19937_64 rng(5);
    auto d = acc_test::random_router_dump(rng, 3, 40, 16, 4);
    auto path = (acc_test::scratch_dir("rtrf") / "r.rtrf").string();
    acc::write_router_dump(path, d);
    auto back = acc::read_router_dump(path);
    CHECK(back.experts == d.experts);
    CHECK(back.n_experts == 16);
    CHECK(back.top_k == 4);
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out << "xx";
    }
    CHECK_THROWS_AS(acc::read_router_dump(path), acc::Error);
}

TEST_CASE("expert deltas rank by mean absolute change") {
    // Base routes token t to expert t % 4; the fine-tuned model moves the
    // second half of every sequence onto expert 3.
    acc::RouterDump base{2, 8, 4, 1, {}}, sft{2, 8, 4, 1, {}};
    for (std::uint16_t l = 0; l < 2; ++l)
        for (std::uint16_t t = 0; t < 8; ++t) {
            base.experts.push_back(t % 4);
            sft.experts.push_back(t < 4 ? t % 4 : 3);
        }
    auto fb = acc::expert_frequencies(base, 2), fs = acc::expert_frequencies(sft, 2);
    auto table = acc::expert_delta(fb, fs, {0, 1}, 3);
    REQUIRE(table.experts.size() == 3);
    CHECK(table.experts[0] == 3);
    CHECK(table.delta[1] == doctest::Approx(0.75));
    CHECK(table.delta[0] == doctest::Approx(0.0));
    CHECK(table.experts[1] == 0);
    CHECK(table.mean_abs_delta[1] == doctest::Approx(0.125));
    CHECK(acc::expert_delta_csv(table).starts_with("expert,group,delta\n3,0,0\n3,1,0.75\n"));

    CHECK_THROWS_AS(acc::expert_delta(fb, fs, {}, 3), acc::Error);
    CHECK_THROWS_AS(acc::expert_delta(fb, fs, {2}, 3), acc::Error);
    auto other = acc::expert_frequencies(base, 4);
    CHECK_THROWS_AS(acc::expert_delta(fb, other, {0}, 3), acc::Error);
    CHECK(acc::rank_routing_layers(fb, fs).size() == 2);
}
