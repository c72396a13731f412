#pragma once

// Battery dynamics: Bernoulli charging against a hard cap, unit-cost
// transmission, up-front training cost, and the cumulative energy ledger.
//
// Within a slot the engine first applies action deductions and then charging,
// so for a transmitting client the two steps compose to
//   battery' = max(battery - 1, 0) + charge,
// and a training client that stays busy for `train_cost` slots ends up at
//   battery' = max(battery - train_cost, 0) + sum of charges,
// with every charge individually truncated at the cap.

#include <cstdint>

#include "ehfl/rng.hpp"
#include "ehfl/types.hpp"

namespace ehfl {

/// Cumulative energy accounting for one run. At every slot boundary the
/// conservation identity holds exactly:
///   sum of batteries = N*init_battery + harvested - consumed_tx - consumed_train.
/// Units wasted at a full battery never enter any battery.
struct EnergyLedger {
    std::int64_t consumed_tx = 0;
    std::int64_t consumed_train = 0;
    std::int64_t harvested = 0;
    std::int64_t wasted = 0;
};

/// One Bernoulli draw per client per slot; consumes exactly one draw from the
/// stream regardless of outcome.
inline bool sample_charge(RandomStream& rng, double charge_prob) {
    return rng.next_canonical() < charge_prob;
}

/// Applies one charge event against the cap and records it in the ledger.
inline std::int64_t apply_charge(std::int64_t battery, std::int64_t cap, bool charged,
                                 EnergyLedger& ledger) {
    if (!charged) return battery;
    ledger.harvested += 1;
    if (battery >= cap) {
        ledger.wasted += 1;
        return cap;
    }
    return battery + 1;
}

/// One battery unit per transmission. Throws InsufficientEnergy at battery 0;
/// the action must be declined.
inline std::int64_t apply_transmit(std::int64_t battery) {
    if (battery < 1) throw InsufficientEnergy("transmit declined: battery empty");
    return battery - 1;
}

/// Deducts the full training cost at the start slot. Charging during the busy
/// window is applied per slot by apply_charge.
inline std::int64_t start_training(std::int64_t battery, std::int64_t train_cost) {
    if (battery < train_cost)
        throw InsufficientEnergy("training declined: battery below training cost");
    return battery - train_cost;
}

/// Idling costs nothing.
inline std::int64_t apply_idle(std::int64_t battery) { return battery; }

}  // namespace ehfl
