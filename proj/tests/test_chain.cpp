#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include <pulsar/block.hpp>
#include <pulsar/chain_select.hpp>
#include <pulsar/chain_state.hpp>
#include <pulsar/rng.hpp>
#include <pulsar/validation.hpp>

#include "chain_fixture.hpp"

using namespace pulsar;
using testenv::Env;

namespace {
const SelectionParams kParams = SelectionParams::with_alpha(parse_fixed_decimal("0.025"));
}

TEST_CASE("header serialization round-trips and ids are recomputable") {
    Env env;
    auto chain = env.fresh_chain();
    const Block blk = env.make_block(chain, env.genesis.id, 3, 1, {0xde, 0xad});

    const auto bytes = serialize_header(blk.header);
    const BlockHeader parsed = parse_header(bytes);
    CHECK(serialize_header(parsed) == bytes);
    CHECK(header_id(parsed) == blk.id);

    const auto body_bytes = serialize_body(blk.body);
    const BlockBody body = parse_body(body_bytes);
    CHECK(body.payload == blk.body.payload);
    CHECK(body.reward == blk.body.reward);

    // a parsed-then-revalidated header gets the same verdict
    const auto ctx = env.ctx_for(chain, env.genesis.id);
    const auto v1 = validate_header(blk.header, env.genesis.header, ctx);
    const auto v2 = validate_header(parsed, env.genesis.header, ctx);
    CHECK(v1.code == v2.code);
    CHECK(v1.ok());
}

TEST_CASE("header serialization golden vectors") {
    std::ifstream in(std::string(PULSAR_TEST_VECTOR_DIR) + "/header.txt");
    REQUIRE(in.good());
    std::string field, hex;
    size_t checked = 0;
    Env env;
    auto chain = env.fresh_chain();
    const Block blk = env.make_block(chain, env.genesis.id, 7, 1);
    while (in >> field >> hex) {
        if (field == "genesis_id") {
            CHECK(to_hex(env.genesis.id) == hex);
        } else if (field == "block_id") {
            CHECK(to_hex(blk.id) == hex);
        } else if (field == "header_hex") {
            std::string got;
            for (uint8_t b : serialize_header(blk.header)) {
                static const char* digits = "0123456789abcdef";
                got.push_back(digits[b >> 4]);
                got.push_back(digits[b & 0xf]);
            }
            CHECK(got == hex);
        }
        ++checked;
    }
    CHECK(checked == 3);
}

TEST_CASE("validate_header rejections are categorized") {
    Env env;
    auto chain = env.fresh_chain();
    const auto ctx = env.ctx_for(chain, env.genesis.id);
    const Block good = env.make_block(chain, env.genesis.id, 5);
    CHECK(validate_header(good.header, env.genesis.header, ctx).ok());

    SUBCASE("wrong parent") {
        Block other = env.make_block(chain, env.genesis.id, 9);
        BlockHeader h = good.header;
        h.prev_id = other.id;
        CHECK(validate_header(h, env.genesis.header, ctx).code == Verdict::BadParent);
    }
    SUBCASE("timestamp not after parent") {
        Block b = env.make_block(chain, env.genesis.id, 5);
        b.header.timestamp = env.genesis.header.timestamp; // equal, not greater
        b.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(b.header));
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::TimestampOrder);
    }
    SUBCASE("slot not after parent") {
        Block b = env.make_block(chain, env.genesis.id, 5);
        b.header.slot = 0;
        b.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(b.header));
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::TimestampOrder);
    }
    SUBCASE("unknown pool is a signature failure") {
        Block b = env.make_block(chain, env.genesis.id, 5);
        b.header.pool_id = 404;
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::BadSignature);
    }
    SUBCASE("tampered signature") {
        Block b = good;
        b.header.signature.mac.w[0] ^= 1;
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::BadSignature);
    }
    SUBCASE("target snapshot mismatch") {
        Block b = env.make_block(chain, env.genesis.id, 5);
        b.header.target = fadd(b.header.target, fixed128::from_ratio(1, 7));
        b.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(b.header));
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::BadTarget);
    }
    SUBCASE("vrf output at or above threshold") {
        auto tight = ctx;
        tight.expected_target = fixed128::from_raw(1); // threshold ~ 2^-64
        Block b = env.make_block(chain, env.genesis.id, 5);
        b.header.target = tight.expected_target;
        b.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(b.header));
        const auto v = validate_header(b.header, env.genesis.header, tight);
        CHECK(v.code == Verdict::BadVRF);
    }
    SUBCASE("forged vrf proof") {
        Block b = good;
        b.header.vrf_proof.w[1] ^= 1;
        b.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(b.header));
        CHECK(validate_header(b.header, env.genesis.header, ctx).code == Verdict::BadVRF);
    }
    SUBCASE("attachment below finality") {
        auto deep = ctx;
        deep.finalized_height = 5;
        deep.parent_height = 3;
        CHECK(validate_header(good.header, env.genesis.header, deep).code == Verdict::ReorgTooDeep);
    }
    SUBCASE("determinism: re-validation gives the same verdict") {
        const auto v1 = validate_header(good.header, env.genesis.header, ctx);
        const auto v2 = validate_header(good.header, env.genesis.header, ctx);
        CHECK(v1.code == v2.code);
    }
}

TEST_CASE("validate_block body checks") {
    Env env;
    auto chain = env.fresh_chain();
    const auto ctx = env.ctx_for(chain, env.genesis.id);

    SUBCASE("empty body with correct roots accepts") {
        const Block b = env.make_block(chain, env.genesis.id, 2);
        CHECK(validate_block(b, ctx).ok());
    }
    SUBCASE("oversize body rejects") {
        Env big;
        auto c2 = big.fresh_chain();
        Block b = big.make_block(c2, big.genesis.id, 2, 1, std::vector<uint8_t>(1'000'001, 0x5a));
        auto ctx2 = big.ctx_for(c2, big.genesis.id);
        CHECK(validate_block(b, ctx2).code == Verdict::TooLarge);
        // exactly at the bound (body carries an 8-byte reward record)
        Block ok = big.make_block(c2, big.genesis.id, 3, 1, std::vector<uint8_t>(1'000'000 - 8, 0x5a));
        CHECK(validate_block(ok, ctx2).ok());
    }
    SUBCASE("merkle root mismatch rejects") {
        Block b = env.make_block(chain, env.genesis.id, 2, 1, {1, 2, 3});
        b.body.payload.push_back(4); // body no longer matches the committed root
        CHECK(validate_block(b, ctx).code == Verdict::BadMerkle);
    }
    SUBCASE("witness root mismatch rejects") {
        Block b = env.make_block(chain, env.genesis.id, 2, 1, {1, 2, 3});
        b.header.witness_merkle_root.w[0] ^= 1;
        CHECK(validate_block(b, ctx).code == Verdict::BadMerkle);
    }
    SUBCASE("excess reward rejects") {
        Block b = env.make_block(chain, env.genesis.id, 2);
        b.body.reward = env.reward + 1;
        b.header.merkle_root = body_merkle_root(b.body);
        b.header.witness_merkle_root = body_witness_root(b.body);
        CHECK(validate_block(b, ctx).code == Verdict::BadReward);
        b.body.reward = env.reward; // at the scheduled value is fine
        b.header.merkle_root = body_merkle_root(b.body);
        b.header.witness_merkle_root = body_witness_root(b.body);
        CHECK(validate_block(b, ctx).ok());
    }
}

TEST_CASE("connect_block maintains tips and trust") {
    Env env({1, 2});
    auto chain = env.fresh_chain();

    const Block b1 = env.make_block(chain, env.genesis.id, 1, 1);
    CHECK(env.validate_and_connect(chain, b1, kParams).ok());
    CHECK(chain.tips() == std::vector<digest256>{b1.id});

    // competing same-parent block from another pool: two tips
    const Block b2 = env.make_block(chain, env.genesis.id, 1, 2);
    CHECK(env.validate_and_connect(chain, b2, kParams).ok());
    CHECK(chain.tips().size() == 2);

    // missing parent
    Block strayParent = env.make_block(chain, b1.id, 7, 1);
    Block stray = env.make_block(chain, b1.id, 9, 1);
    stray.header.prev_id = strayParent.id;
    stray.header.signature.mac = sign(env.sig_keys.at(1).sk, header_signing_bytes(stray.header));
    stray.id = header_id(stray.header);
    CHECK(chain.connect_block(stray, kParams, 120, false).code == Verdict::BadParent);

    // idempotent reconnect
    CHECK(chain.connect_block(b1, kParams, 120, false).ok());
    CHECK(chain.tips().size() == 2);
}

TEST_CASE("connect_block is permutation-insensitive for tips and trust") {
    Env env({1, 2});
    auto base = env.fresh_chain();

    // build a small tree: genesis -> a1 -> a2 -> a3, fork b2 on a1, b3 on b2
    const Block a1 = env.make_block(base, env.genesis.id, 1, 1);
    base.connect_block(a1, kParams, 120, false);
    const Block a2 = env.make_block(base, a1.id, 2, 1);
    base.connect_block(a2, kParams, 120, false);
    const Block a3 = env.make_block(base, a2.id, 3, 1);
    const Block b2 = env.make_block(base, a1.id, 4, 2);
    base.connect_block(b2, kParams, 120, false);
    const Block b3 = env.make_block(base, b2.id, 6, 2);

    std::vector<Block> blocks = {a1, a2, a3, b2, b3};
    std::vector<size_t> order = {0, 1, 2, 3, 4};

    auto run_order = [&](const std::vector<size_t>& idx) {
        ChainState st = env.fresh_chain();
        // repeatedly sweep until all connect (parents may come later)
        std::vector<bool> done(blocks.size(), false);
        for (int pass = 0; pass < 8; ++pass)
            for (size_t i : idx)
                if (!done[i] && st.connect_block(blocks[i], kParams, 120, false).ok())
                    done[i] = true;
        std::vector<std::pair<digest256, trust_t>> tips;
        for (const auto& t : st.tips())
            tips.emplace_back(t, st.entry(t).cum_trust);
        std::sort(tips.begin(), tips.end());
        return tips;
    };

    const auto reference = run_order(order);
    Rng rng(0x9e77);
    for (int trial = 0; trial < 20; ++trial) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);
        CHECK(run_order(order) == reference);
    }
    CHECK(reference.size() == 2);
}

TEST_CASE("timestamps and slots are strictly increasing along any stored chain") {
    Env env;
    auto chain = env.fresh_chain();
    digest256 tip = env.genesis.id;
    for (uint64_t slot : {2ull, 3ull, 7ull, 8ull, 20ull})
        tip = [&] {
            const Block b = env.make_block(chain, tip, slot);
            REQUIRE(env.validate_and_connect(chain, b, kParams).ok());
            return b.id;
        }();
    const auto slots = chain.path_slots(tip);
    for (size_t i = 1; i < slots.size(); ++i)
        CHECK(slots[i] > slots[i - 1]);
}

TEST_CASE("finality: attachment below finalized height rejects") {
    Env env;
    SelectionParams params = kParams;
    params.max_reorg_depth = 10;
    auto chain = env.fresh_chain();
    std::vector<digest256> path{env.genesis.id};
    digest256 tip = env.genesis.id;
    for (uint64_t h = 1; h <= 11; ++h) {
        const Block b = env.make_block(chain, tip, h);
        REQUIRE(env.validate_and_connect(chain, b, params).ok());
        tip = b.id;
        path.push_back(tip);
    }
    chain.set_canonical_tip(tip);
    prune_finalized(chain, params);
    CHECK(chain.finalized_height() == 1); // 11 - 10

    // extending height 0 (the genesis) now forks below finality
    const Block late = env.make_block(chain, env.genesis.id, 30);
    CHECK(chain.connect_block(late, params, 120, false).code == Verdict::ReorgTooDeep);

    // extending the finalized block itself is still allowed
    const Block ok = env.make_block(chain, path[1], 31);
    CHECK(chain.connect_block(ok, params, 120, false).ok());
}

TEST_CASE("prune_finalized drops branches rooted below the horizon") {
    Env env({1, 2});
    SelectionParams params = kParams;
    params.max_reorg_depth = 3;
    auto chain = env.fresh_chain();

    digest256 tip = env.genesis.id;
    std::vector<digest256> path{tip};
    for (uint64_t h = 1; h <= 8; ++h) {
        const Block b = env.make_block(chain, tip, h);
        REQUIRE(chain.connect_block(b, params, 120, false).ok());
        tip = b.id;
        path.push_back(tip);
    }
    // fork rooted at height 2 (below the eventual finalized height 5)
    const Block forked = env.make_block(chain, path[2], 40, 2);
    REQUIRE(chain.connect_block(forked, params, 120, false).ok());
    CHECK(chain.tips().size() == 2);

    chain.set_canonical_tip(tip);
    prune_finalized(chain, params);
    CHECK(chain.finalized_height() == 5);
    CHECK_FALSE(chain.contains(forked.id));
    CHECK(chain.tips().size() == 1);

    // finalized height never decreases
    CHECK_THROWS_AS(chain.set_finalized_height(1), std::logic_error);
}

TEST_CASE("no change below the reorg depth leaves finality untouched") {
    Env env;
    SelectionParams params = kParams;
    params.max_reorg_depth = 1000;
    auto chain = env.fresh_chain();
    digest256 tip = env.genesis.id;
    for (uint64_t h = 1; h <= 5; ++h) {
        const Block b = env.make_block(chain, tip, h);
        REQUIRE(chain.connect_block(b, params, 120, false).ok());
        tip = b.id;
    }
    chain.set_canonical_tip(tip);
    prune_finalized(chain, params);
    CHECK(chain.finalized_height() == 0);
}
