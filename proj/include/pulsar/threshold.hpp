// Copyright (c) 2026 The Pulsar Sim developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#ifndef PULSAR_THRESHOLD_HPP
#define PULSAR_THRESHOLD_HPP

#include <stdexcept>

#include "fixed_point.hpp"

namespace pulsar {

// Per-block threshold retarget: scale by the realized/target interval
// ratio, then clamp the swing to tau_prev/1000 so the loop acts as a
// low-pass filter.
inline fixed128 adjust_threshold(fixed128 tau_prev, fixed128 t_actual, fixed128 t_target) {
    if (tau_prev.is_zero())
        throw std::invalid_argument("adjust_threshold: tau_prev must be positive");
    if (t_actual.is_zero() || t_target.is_zero())
        throw std::invalid_argument("adjust_threshold: intervals must be positive");

    const u128 d = tau_prev.raw / 1000;
    fixed128 tau_new = fdiv(fmul(tau_prev, t_actual), t_target);
    if (tau_new.raw < tau_prev.raw - d)
        tau_new.raw = tau_prev.raw - d;
    else if (tau_new.raw > tau_prev.raw + d)
        tau_new.raw = tau_prev.raw + d;
    return tau_new;
}

} // namespace pulsar

#endif // PULSAR_THRESHOLD_HPP
