#include <doctest.h>

#include <cstdint>
#include <vector>

#include <pulsar/chain_select.hpp>
#include <pulsar/rng.hpp>
#include <pulsar/selection.hpp>

#include "chain_fixture.hpp"
#include "oracles.hpp"

using namespace pulsar;
using testenv::Env;

namespace {

SelectionParams params_with(const char* alpha) { return SelectionParams::with_alpha(parse_fixed_decimal(alpha)); }

// random strictly-increasing slot list of the given block count
std::vector<uint64_t> random_slots(Rng& rng, size_t blocks, uint64_t max_gap) {
    std::vector<uint64_t> slots;
    uint64_t cur = 0;
    for (size_t i = 0; i < blocks; ++i) {
        cur += 1 + rng.next_below(max_gap);
        slots.push_back(cur);
    }
    return slots;
}

} // namespace

TEST_CASE("gap_penalty closed-form points") {
    const auto p = params_with("0.025");
    CHECK(gap_penalty(p, 0) == 0);

    // alpha = 0 removes the penalty entirely
    const auto flat = params_with("0");
    for (uint64_t t : {1ull, 10ull, 100'000ull})
        CHECK(gap_penalty(flat, t) == 0);

    // alpha = ln 2, t = 1: penalty is half a block up to one trust ulp
    const auto half = SelectionParams::with_alpha(parse_fixed_decimal("0.6931471805599453"));
    const trust_t got_half = gap_penalty(half, 1);
    const trust_t mid = kTrustOne / 2;
    CHECK((got_half > mid ? got_half - mid : mid - got_half) <= 1);

    // strictly below one block of trust for any run length
    for (uint64_t t : {1ull, 5ull, 120ull, 10000ull, 18446744073709551615ull})
        CHECK(gap_penalty(p, t) < kTrustOne);
}

TEST_CASE("gap_penalty matches the arbitrary-precision oracle") {
    Rng rng(0x6a61);
    for (int i = 0; i < 3000; ++i) {
        const fixed128 alpha = fixed128::from_raw(rng.next_u64()); // alpha < 1
        SelectionParams p = SelectionParams::with_alpha(alpha);
        const uint64_t t = 1 + rng.next_below(2000);
        const trust_t got = gap_penalty(p, t);
        const trust_t want = oracles::gap_penalty_oracle(alpha, t);
        const trust_t diff = got > want ? got - want : want - got;
        CHECK(diff <= 1);
    }
}

TEST_CASE("chain trust: dense chains score their block count") {
    const auto p = params_with("0.025");
    for (size_t n : {1, 5, 64}) {
        std::vector<uint64_t> slots;
        for (size_t i = 1; i <= n; ++i)
            slots.push_back(i);
        CHECK(chain_trust_from_slots(p, slots).value == n * kTrustOne);
    }
}

TEST_CASE("chain trust against the brute-force oracle on random strings") {
    Rng rng(0x0c0de);
    const char* alphas[] = {"0", "0.003", "0.025", "0.5", "3", "50"};
    for (int i = 0; i < 2000; ++i) {
        const auto p = params_with(alphas[i % 6]);
        const auto slots = random_slots(rng, 1 + rng.next_below(64), 40);
        const trust_t got = chain_trust_from_slots(p, slots).value;
        const trust_t want = oracles::chain_trust_oracle(p, slots);
        const trust_t diff = got > want ? got - want : want - got;
        CHECK(diff <= 1);
    }
}

TEST_CASE("chain trust is never negative and never exceeds block count") {
    Rng rng(0xfeed);
    const auto p = params_with("0.8");
    for (int i = 0; i < 2000; ++i) {
        const size_t blocks = 1 + rng.next_below(40);
        const auto slots = random_slots(rng, blocks, 500); // long empty prefixes included
        const trust_t v = chain_trust_from_slots(p, slots).value;
        CHECK(v <= blocks * kTrustOne);
        // each of the <= blocks gaps deducts strictly under one block, so
        // at least one raw unit per block always survives
        CHECK(v >= blocks);
    }
    CHECK(chain_trust_from_slots(p, {}).value == 0);
}

TEST_CASE("appending a block never lowers chain trust") {
    Rng rng(0x9a1);
    const auto p = params_with("0.1");
    for (int i = 0; i < 500; ++i) {
        auto slots = random_slots(rng, 30, 30);
        trust_t prev = 0;
        std::vector<uint64_t> prefix;
        for (uint64_t s : slots) {
            prefix.push_back(s);
            const trust_t cur = chain_trust_from_slots(p, prefix).value;
            CHECK(cur > prev); // each block adds 1 and deducts < 1
            prev = cur;
        }
    }
}

TEST_CASE("alpha = 0 reduces selection to block counting") {
    Rng rng(0xa0);
    const auto p = params_with("0");
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_slots(rng, 1 + rng.next_below(50), 20);
        const auto b = random_slots(rng, 1 + rng.next_below(50), 20);
        const trust_t ta = chain_trust_from_slots(p, a).value;
        const trust_t tb = chain_trust_from_slots(p, b).value;
        CHECK((ta > tb) == (a.size() > b.size()));
        CHECK((ta == tb) == (a.size() == b.size()));
    }
}

TEST_CASE("alpha = 50 acts as the filled/gap density comparator") {
    Rng rng(0xa50);
    const auto p = params_with("50");
    auto density_score = [](const std::vector<uint64_t>& slots) {
        // +1 per block, -1 per maximal empty run
        long long score = static_cast<long long>(slots.size());
        uint64_t prev = 0;
        for (uint64_t s : slots) {
            if (s > prev + 1)
                --score;
            prev = s;
        }
        return score;
    };
    int agree = 0, total = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_slots(rng, 1 + rng.next_below(50), 8);
        const auto b = random_slots(rng, 1 + rng.next_below(50), 8);
        const long long da = density_score(a), db = density_score(b);
        if (da == db)
            continue; // comparator ties carry no ordering claim
        const trust_t ta = chain_trust_from_slots(p, a).value;
        const trust_t tb = chain_trust_from_slots(p, b).value;
        ++total;
        if ((ta > tb) == (da > db))
            ++agree;
    }
    CHECK(total > 500);
    CHECK(agree == total); // e^-50 underflows, so agreement is exact here
}

TEST_CASE("figure 1: denser chain beats a longer sparse one") {
    Env env({1, 2});
    const auto p = params_with("0.025");
    ChainState chain = env.fresh_chain();

    // A: six blocks in consecutive slots
    digest256 a = env.genesis.id;
    for (uint64_t slot = 1; slot <= 6; ++slot) {
        const Block blk = env.make_block(chain, a, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        a = blk.id;
    }
    // B: seven blocks spread forty slots apart
    digest256 b = env.genesis.id;
    for (uint64_t slot = 40; slot <= 280; slot += 40) {
        const Block blk = env.make_block(chain, b, slot, 2);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        b = blk.id;
    }

    CHECK(select_chain(chain, p) == a);

    // under alpha = 0 the longer chain B would win instead
    Env env2({1, 2});
    const auto p0 = params_with("0");
    ChainState chain0 = env2.fresh_chain();
    digest256 a0 = env2.genesis.id;
    for (uint64_t slot = 1; slot <= 6; ++slot) {
        const Block blk = env2.make_block(chain0, a0, slot, 1);
        REQUIRE(chain0.connect_block(blk, p0, 120, false).ok());
        a0 = blk.id;
    }
    digest256 b0 = env2.genesis.id;
    for (uint64_t slot = 40; slot <= 280; slot += 40) {
        const Block blk = env2.make_block(chain0, b0, slot, 2);
        REQUIRE(chain0.connect_block(blk, p0, 120, false).ok());
        b0 = blk.id;
    }
    CHECK(select_chain(chain0, p0) == b0);
}

TEST_CASE("figure 2: checkpointed fork, one extra block flips selection") {
    Env env({1, 2});
    auto p = params_with("0.025");
    ChainState chain = env.fresh_chain();

    // common prefix through the checkpoint at height 2
    digest256 tip = env.genesis.id;
    std::vector<digest256> prefix{env.genesis.id};
    for (uint64_t slot = 1; slot <= 2; ++slot) {
        const Block blk = env.make_block(chain, tip, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        tip = blk.id;
        prefix.push_back(tip);
    }
    p.checkpoints[2] = prefix[2];

    // A: dense continuation; B: sparser continuation, both obeying the checkpoint
    digest256 a = tip;
    for (uint64_t slot : {3ull, 4ull, 5ull}) {
        const Block blk = env.make_block(chain, a, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        a = blk.id;
    }
    digest256 b = tip;
    for (uint64_t slot : {4ull, 6ull, 8ull}) {
        const Block blk = env.make_block(chain, b, slot, 2);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        b = blk.id;
    }
    CHECK(select_chain(chain, p) == a);

    // one more block in an empty slot turns B into the canonical chain
    const Block extra = env.make_block(chain, b, 9, 2);
    REQUIRE(chain.connect_block(extra, p, 120, false).ok());
    CHECK(select_chain(chain, p) == extra.id);
}

TEST_CASE("figure 3: a denser chain ignoring the checkpoint cannot win") {
    Env env({1, 2});
    auto p = params_with("0.025");
    ChainState chain = env.fresh_chain();

    // honest prefix: blocks at heights 1..2; checkpoint pins height 2
    digest256 tip = env.genesis.id;
    std::vector<digest256> prefix{env.genesis.id};
    for (uint64_t slot : {5ull, 9ull}) {
        const Block blk = env.make_block(chain, tip, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        tip = blk.id;
        prefix.push_back(tip);
    }
    p.checkpoints[2] = prefix[2];

    // A continues from the checkpointed block, somewhat sparse
    digest256 a = tip;
    for (uint64_t slot : {20ull, 40ull}) {
        const Block blk = env.make_block(chain, a, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        a = blk.id;
    }
    // B forks from height 1, below the checkpoint, and is much denser
    digest256 b = prefix[1];
    for (uint64_t slot = 10; slot <= 17; ++slot) {
        const Block blk = env.make_block(chain, b, slot, 2);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        b = blk.id;
    }

    // B has the higher raw trust yet is not selectable
    CHECK(chain.entry(b).cum_trust > chain.entry(a).cum_trust);
    SelectionTrace trace;
    CHECK(select_chain(chain, p, &trace) == a);
    bool b_excluded = false;
    for (const auto& t : trace.tips)
        if (t.id == b && !t.eligible)
            b_excluded = true;
    CHECK(b_excluded);
}

TEST_CASE("selection falls back to the current canonical tip when every tip violates") {
    Env env;
    auto p = params_with("0.025");
    ChainState chain = env.fresh_chain();
    digest256 tip = env.genesis.id;
    for (uint64_t slot = 1; slot <= 3; ++slot) {
        const Block blk = env.make_block(chain, tip, slot, 1);
        REQUIRE(chain.connect_block(blk, p, 120, false).ok());
        tip = blk.id;
    }
    chain.set_canonical_tip(tip);
    // a checkpoint no chain contains
    p.checkpoints[2] = hash_tagged("missing", {});
    SelectionTrace trace;
    CHECK(select_chain(chain, p, &trace) == tip);
    CHECK(trace.all_tips_violating);
}

TEST_CASE("single tip selects itself; exact ties go to the first-seen tip") {
    Env env({1, 2});
    const auto p = params_with("0.025");
    ChainState chain = env.fresh_chain();
    const Block only = env.make_block(chain, env.genesis.id, 4, 1);
    REQUIRE(chain.connect_block(only, p, 120, false).ok());
    CHECK(select_chain(chain, p) == only.id);

    // sibling at the same slot has identical trust; first-seen keeps winning
    const Block rival = env.make_block(chain, env.genesis.id, 4, 2);
    REQUIRE(chain.connect_block(rival, p, 120, false).ok());
    CHECK(chain.entry(only.id).cum_trust == chain.entry(rival.id).cum_trust);
    CHECK(select_chain(chain, p) == only.id);
}

TEST_CASE("checkpoints above a tip's height do not disqualify it") {
    Env env;
    auto p = params_with("0.025");
    p.checkpoints[50] = hash_tagged("far-future", {});
    ChainState chain = env.fresh_chain();
    const Block blk = env.make_block(chain, env.genesis.id, 1, 1);
    REQUIRE(chain.connect_block(blk, p, 120, false).ok());
    CHECK(select_chain(chain, p) == blk.id);
}
