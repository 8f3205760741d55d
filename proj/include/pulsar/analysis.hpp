// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_ANALYSIS_HPP
#define PULSAR_ANALYSIS_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "block.hpp"
#include "chain_select.hpp"
#include "chain_state.hpp"
#include "crypto.hpp"
#include "fixed_point.hpp"
#include "rng.hpp"

namespace pulsar {

// Exact signed rational on int64 terms with 128-bit intermediates. The
// worked utility examples must come out exact, which doubles rule out.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}
    Rational(long long n, long long d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0)
            throw std::domain_error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    static Rational from_i128(__int128 n, __int128 d) {
        if (d == 0)
            throw std::domain_error("rational with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n;
        __int128 b = d;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            n /= a;
            d /= a;
        }
        constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
        if (n > lim || n < -lim || d > lim)
            throw std::overflow_error("rational overflow");
        Rational r;
        r.num = static_cast<long long>(n);
        r.den = static_cast<long long>(d);
        return r;
    }

    friend Rational operator+(Rational a, Rational b) {
        return from_i128(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                         static_cast<__int128>(a.den) * b.den);
    }
    friend Rational operator-(Rational a, Rational b) {
        return from_i128(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                         static_cast<__int128>(a.den) * b.den);
    }
    friend Rational operator*(Rational a, Rational b) {
        return from_i128(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
    }
    friend Rational operator/(Rational a, Rational b) {
        if (b.num == 0)
            throw std::domain_error("rational division by zero");
        return from_i128(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
    }
    friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
    friend bool operator<(Rational a, Rational b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator>(Rational a, Rational b) { return b < a; }
    friend bool operator<=(Rational a, Rational b) { return !(b < a); }
    friend bool operator>=(Rational a, Rational b) { return !(a < b); }

    bool negative() const { return num < 0; }
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    std::string str() const {
        std::ostringstream s;
        s << num;
        if (den != 1)
            s << "/" << den;
        return s.str();
    }
};

// Inputs of the closed-form utility calculators.
struct UtilityParams {
    Rational phi_h;  // honest relative stake
    Rational phi_m;  // malicious relative stake
    Rational r;      // block reward units
    Rational beta;   // discount factor in (0,1)
    Rational r_max;  // per-slot maximum extractable revenue
    Rational stake;  // leader's current stake

    void check() const {
        if ((phi_h + phi_m) > Rational(1))
            throw std::invalid_argument("phi_h + phi_m exceeds one");
        if (!(Rational(0) < beta && beta < Rational(1)))
            throw std::invalid_argument("beta must lie in (0,1)");
    }
};

inline Rational honest_utility(const UtilityParams& p) { return p.phi_h * p.r; }

struct MaliciousUtilities {
    Rational one_block;      // forking with a single block never pays
    Rational two_block;      // phi_m^2 * 2r
    Rational honest_option;  // phi_m * r
};

inline MaliciousUtilities malicious_utilities(const UtilityParams& p) {
    MaliciousUtilities u;
    u.one_block = Rational(0);
    u.two_block = p.phi_m * p.phi_m * Rational(2) * p.r;
    u.honest_option = p.phi_m * p.r;
    return u;
}

// Sign of (phi_h - 1)(2 phi_h - 1): honest play dominates the two-block
// deviation exactly when the product is <= 0, i.e. phi_h in [1/2, 1].
struct NashVerdict {
    Rational phi_h;
    Rational ne_expression; // (phi_h - 1)(2 phi_h - 1)
    bool honest_dominates = false;
    std::vector<double> n_block_deviation; // phi_m^n * n * r for n = 1..horizon
};

// The horizon for the n-block generalization defaults to the finality
// depth; the verdict itself stays exact rational arithmetic while the
// reported deviation utilities, which vanish geometrically, are doubles.
inline NashVerdict nash_point_check(Rational phi_h, Rational r, uint32_t horizon = 1000) {
    NashVerdict v;
    v.phi_h = phi_h;
    v.ne_expression = (phi_h - Rational(1)) * (Rational(2) * phi_h - Rational(1));
    v.honest_dominates = v.ne_expression <= Rational(0);
    const double phi_m = (Rational(1) - phi_h).to_double();
    double power = 1.0;
    for (uint32_t n = 1; n <= horizon; ++n) {
        power *= phi_m;
        v.n_block_deviation.push_back(power * static_cast<double>(n) * r.to_double());
    }
    return v;
}

inline std::vector<NashVerdict> nash_boundary_check(const std::vector<Rational>& phi_h_grid, Rational r,
                                                    uint32_t horizon = 1000) {
    std::vector<NashVerdict> out;
    out.reserve(phi_h_grid.size());
    for (const auto& phi : phi_h_grid)
        out.push_back(nash_point_check(phi, r, horizon));
    return out;
}

// Equivocation-with-slashing utility: losing the stake and the discounted
// future income stream always swamps one slot's extractable revenue.
struct SlashingBreakdown {
    Rational u_future;
    Rational s_slash;
    Rational u_eq;
};

inline SlashingBreakdown slashing_utility(const UtilityParams& p) {
    if (!(p.beta < Rational(1)) || !(Rational(0) < p.beta))
        throw std::invalid_argument("slashing_utility: beta outside (0,1) diverges");
    SlashingBreakdown b;
    b.u_future = (p.r + p.r_max) / (Rational(1) - p.beta);
    b.s_slash = p.stake + b.u_future;
    b.u_eq = p.r_max - b.s_slash;
    return b;
}

// ---------------------------------------------------------------------------
// Empirical Nash-boundary experiment
//
// The closed forms assume zero latency and a constant block production
// cadence, so slots here are production opportunities: every slot yields
// exactly one block event, won by the pool whose weight-normalized VRF
// draw is smallest (a share of exactly phi). Both strategies replay the
// same leadership draws, and the fork outcome is decided by actually
// building the candidate chains and running the fork choice on them.

struct NePointResult {
    Rational phi_m;
    double honest_mean = 0;   // malicious agent's mean utility playing honestly
    double fork_mean = 0;     // same agent running the two-block private fork
    double honest_se = 0;
    double fork_se = 0;
    double closed_honest = 0; // phi_m * r
    double closed_fork = 0;   // phi_m^2 * 2r
    uint64_t rounds = 0;
    bool ordering_matches_closed = false;
};

namespace nedetail {

struct RoundChain {
    ChainState chain;
    SelectionParams params;
    uint64_t t_target;

    explicit RoundChain(const Block& genesis, fixed128 tau, SelectionParams p, uint64_t t_tgt)
        : chain(ChainState::with_genesis(genesis, tau)), params(p), t_target(t_tgt) {}

    digest256 add(const digest256& parent, uint64_t slot, uint64_t pool_id, uint64_t vrf_out) {
        Block blk;
        blk.header.pool_id = pool_id;
        blk.header.vrf_output = vrf_out;
        blk.header.prev_id = parent;
        blk.header.slot = slot;
        blk.header.timestamp = slot;
        blk.header.target = chain.entry(parent).tau_next;
        blk.header.merkle_root = body_merkle_root(blk.body);
        blk.header.witness_merkle_root = body_witness_root(blk.body);
        blk.id = header_id(blk.header);
        const auto v = chain.connect_block(blk, params, t_target, false);
        if (!v.ok())
            throw std::logic_error("round chain connect failed: " + v.detail);
        return blk.id;
    }
};

} // namespace nedetail

inline NePointResult ne_paired_point(Rational phi_m, uint64_t reward, uint64_t rounds, uint64_t seed,
                                     fixed128 alpha) {
    NePointResult res;
    res.phi_m = phi_m;
    res.rounds = rounds;
    res.closed_honest = (phi_m * Rational(static_cast<long long>(reward))).to_double();
    res.closed_fork =
        (phi_m * phi_m * Rational(2) * Rational(static_cast<long long>(reward))).to_double();

    // weights proportional to stakes; exact leadership shares by
    // cross-multiplied comparison of weight-normalized draws
    const uint64_t w_m = static_cast<uint64_t>(phi_m.num) * 1000ull;
    const uint64_t w_h = static_cast<uint64_t>(phi_m.den - phi_m.num) * 1000ull;

    const KeyPair vrf_m = keypair_from_seed(0x4d31 ^ seed);
    const KeyPair vrf_h = keypair_from_seed(0x4832 ^ seed);

    SelectionParams params = SelectionParams::with_alpha(alpha);
    Block genesis;
    genesis.header.merkle_root = body_merkle_root(genesis.body);
    genesis.header.witness_merkle_root = body_witness_root(genesis.body);
    genesis.id = header_id(genesis.header);
    const fixed128 tau = fixed128::from_ratio(1, 2);

    double honest_sum = 0, honest_sq = 0;
    double fork_sum = 0, fork_sq = 0;

    for (uint64_t round = 0; round < rounds; ++round) {
        const digest256 rand = Hasher{}.update("pulsar.ne.round").update_u64(seed).update_u64(round).finish();
        // event k: one block opportunity. Both pools' VRF draws feed one
        // uniform lottery; the malicious side wins a share of exactly
        // w_m / (w_m + w_h), the constant-cadence reading of the race.
        const auto event_winner = [&](uint64_t k) {
            const digest256 in_m = vrf_input_encoding(rand, k, 1);
            const digest256 in_h = vrf_input_encoding(rand, k, 2);
            const uint64_t out_m = vrf_eval(vrf_m.sk, in_m).output;
            const uint64_t out_h = vrf_eval(vrf_h.sk, in_h).output;
            const uint64_t lottery =
                Hasher{}.update("pulsar.ne.event").update_u64(out_m).update_u64(out_h).finish().w[0];
            const u128 threshold = (static_cast<u128>(w_m) << 64) / (w_m + w_h);
            return static_cast<u128>(lottery) < threshold;
        };
        const bool m1 = event_winner(1);
        const bool m2 = event_winner(2);

        // environment block b at slot 1 sits on the canonical chain
        nedetail::RoundChain rc(genesis, tau, params, 120);
        const digest256 b = rc.add(genesis.id, 1, 99, 0);

        double fork_utility = 0;
        if (m1) {
            // attack: fork from genesis, private block at slot 2
            const digest256 p1 = rc.add(genesis.id, 2, 1, 0);
            if (m2) {
                const digest256 p2 = rc.add(p1, 3, 1, 0);
                const digest256 winner = select_chain(rc.chain, params);
                if (winner == p2)
                    fork_utility = 2.0 * static_cast<double>(reward);
                else
                    throw std::logic_error("two-block private fork failed to win the fork choice");
            } else {
                // honest extends b; the lone private block must lose
                rc.add(b, 3, 2, 0);
                const digest256 winner = select_chain(rc.chain, params);
                if (rc.chain.entry(winner).block.header.pool_id == 1)
                    throw std::logic_error("single-block private fork unexpectedly won");
            }
        }
        const double honest_utility_m = m1 ? static_cast<double>(reward) : 0.0;

        honest_sum += honest_utility_m;
        honest_sq += honest_utility_m * honest_utility_m;
        fork_sum += fork_utility;
        fork_sq += fork_utility * fork_utility;
    }

    const double n = static_cast<double>(rounds);
    res.honest_mean = honest_sum / n;
    res.fork_mean = fork_sum / n;
    res.honest_se = std::sqrt(std::max(0.0, honest_sq / n - res.honest_mean * res.honest_mean) / n);
    res.fork_se = std::sqrt(std::max(0.0, fork_sq / n - res.fork_mean * res.fork_mean) / n);

    const bool closed_says_honest = res.closed_honest >= res.closed_fork;
    const bool empirical_says_honest = res.honest_mean >= res.fork_mean;
    res.ordering_matches_closed = closed_says_honest == empirical_says_honest;
    return res;
}

struct NeReport {
    std::vector<NePointResult> points;
    bool all_orderings_match = true;
    bool all_within_3se = true;

    std::string table() const {
        std::ostringstream out;
        out << "phi_m    honest_mc  fork_mc    honest_cf  fork_cf    ordering\n";
        for (const auto& p : points) {
            out.setf(std::ios::fixed);
            out.precision(4);
            out << p.phi_m.to_double() << "   " << p.honest_mean << "     " << p.fork_mean << "     "
                << p.closed_honest << "     " << p.closed_fork << "     "
                << (p.ordering_matches_closed ? "ok" : "MISMATCH") << "\n";
        }
        return out.str();
    }
};

inline NeReport empirical_ne_validation(const std::vector<Rational>& phi_m_grid, uint64_t reward,
                                        uint64_t rounds_per_point, uint64_t seed, fixed128 alpha) {
    NeReport report;
    for (const auto& phi : phi_m_grid) {
        auto point = ne_paired_point(phi, reward, rounds_per_point, seed, alpha);
        if (!point.ordering_matches_closed)
            report.all_orderings_match = false;
        if (std::abs(point.honest_mean - point.closed_honest) > 3 * point.honest_se + 1e-12 ||
            std::abs(point.fork_mean - point.closed_fork) > 3 * point.fork_se + 1e-12)
            report.all_within_3se = false;
        report.points.push_back(std::move(point));
    }
    return report;
}

} // namespace pulsar

#endif // PULSAR_ANALYSIS_HPP
