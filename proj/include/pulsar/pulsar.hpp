// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_PULSAR_HPP
#define PULSAR_PULSAR_HPP

#include "analysis.hpp"
#include "block.hpp"
#include "bytes.hpp"
#include "chain_select.hpp"
#include "chain_state.hpp"
#include "crypto.hpp"
#include "digest.hpp"
#include "fixed_point.hpp"
#include "hash.hpp"
#include "leader.hpp"
#include "rng.hpp"
#include "runner.hpp"
#include "scenario.hpp"
#include "selection.hpp"
#include "sim.hpp"
#include "staking.hpp"
#include "threshold.hpp"
#include "validation.hpp"
#include "wide_int.hpp"

#endif // PULSAR_PULSAR_HPP
