#pragma once

// Per-slot decision policies and group/hub assignment.
//
// All three policies are pure functions of (client, time, config): identical
// inputs always yield the same action, and no policy returns an action the
// client cannot pay for.

#include <cstdint>
#include <vector>

#include "ehfl/rng.hpp"
#include "ehfl/types.hpp"

namespace ehfl {

/// Mathematical modulus (result in [0, m) for m > 0).
inline std::int64_t math_mod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

/// True iff a training started at `slot` finishes inside `group`'s active
/// window: g*R <= (slot + train_cost) mod S < (g+1)*R - 1. The upper bound is
/// strict, which keeps the window's final slot free for the upload itself.
bool in_deadline_window(std::int64_t slot, std::int64_t group, const SimConfig& config);

/// True iff `slot` is the aggregation slot of `group`: the last slot of the
/// group's window within the epoch. Never true in slack slots.
bool is_aggregation_slot(std::int64_t slot, std::int64_t group, const SimConfig& config);

/// Battery-aware policy: upload at the group's aggregation slot, and start
/// training only when (1) the battery covers a full training, (2) no update is
/// waiting for upload, and (3) the training finishes inside the group's
/// window. Condition (3) makes clients start as late as possible.
Action fedbacys_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config);

/// Greedy baseline: upload any held update at the last slot of the epoch,
/// otherwise retrain whenever the battery allows (a fresh result overwrites an
/// undelivered one).
Action fedavg_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config);

/// Sequential baseline: group-windowed uploads like fedbacys_decide, but
/// training is greedy; only an undelivered result from the current epoch
/// blocks retraining, and there is no deadline condition.
Action fedseq_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config);

/// Dispatch on the configured scheme.
Action decide(Scheme scheme, const ClientState& client, const TimeIndex& time,
              const SimConfig& config);

/// Uniformly random balanced partition of clients into groups; sizes differ by
/// at most one. Hubs are left empty. Throws ConfigError on invalid sizes.
GroupAssignment assign_groups(std::int64_t n_clients, std::int64_t n_groups, RandomStream& rng);

/// One uniformly chosen member per group. Callers re-draw at every epoch
/// boundary from the same sequential stream.
std::vector<std::int64_t> elect_hubs(const GroupAssignment& assignment, RandomStream& rng);

}  // namespace ehfl
