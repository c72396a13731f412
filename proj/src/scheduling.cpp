#include "ehfl/scheduling.hpp"

#include <algorithm>
#include <numeric>

namespace ehfl {

bool in_deadline_window(std::int64_t slot, std::int64_t group, const SimConfig& config) {
    const std::int64_t r = config.group_round();
    // Where a training started now would land, in epoch-offset coordinates.
    const std::int64_t completion = math_mod(slot + config.train_cost, config.slots_per_epoch);
    return group * r <= completion && completion < (group + 1) * r - 1;
}

bool is_aggregation_slot(std::int64_t slot, std::int64_t group, const SimConfig& config) {
    const std::int64_t r = config.group_round();
    return math_mod(slot, config.slots_per_epoch) == (group + 1) * r - 1;
}

Action fedbacys_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config) {
    if (client.busy(time.slot)) {
        return Action::Idle;
    }
    // Delivery first: a held result goes out at the group's aggregation slot.
    if (client.pending_update && client.battery >= 1 &&
        is_aggregation_slot(time.slot, client.group, config)) {
        return Action::Transmit;
    }
    // Train only when all three conditions hold: enough charge for the whole
    // training, nothing still waiting for upload, and a finish that lands
    // inside the group's window. Starting in another group's turn (or in
    // slack) is fine; only the completion slot is constrained.
    if (!client.pending_update && client.battery >= config.train_cost &&
        in_deadline_window(time.slot, client.group, config)) {
        return Action::StartTraining;
    }
    return Action::Idle;
}

Action fedavg_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config) {
    if (client.busy(time.slot)) {
        return Action::Idle;
    }
    const std::int64_t offset = math_mod(time.slot, config.slots_per_epoch);
    if (client.pending_update && client.battery >= 1 && offset == config.slots_per_epoch - 1) {
        return Action::Transmit;
    }
    // Greedy: retrain whenever the battery allows, even on top of an
    // undelivered result (the newer one replaces it). This is where the
    // baseline burns energy that never reaches the server.
    if (client.battery >= config.train_cost) {
        return Action::StartTraining;
    }
    return Action::Idle;
}

Action fedseq_decide(const ClientState& client, const TimeIndex& time, const SimConfig& config) {
    if (client.busy(time.slot)) {
        return Action::Idle;
    }
    if (client.pending_update && client.battery >= 1 &&
        is_aggregation_slot(time.slot, client.group, config)) {
        return Action::Transmit;
    }
    // Greedy like fedavg_decide, except a result produced this epoch blocks a
    // restart until it has been handed over; older leftovers may be replaced.
    const bool holds_fresh_result =
        client.pending_update && client.pending_update->produced_epoch == time.epoch;
    if (!holds_fresh_result && client.battery >= config.train_cost) {
        return Action::StartTraining;
    }
    return Action::Idle;
}

Action decide(Scheme scheme, const ClientState& client, const TimeIndex& time,
              const SimConfig& config) {
    switch (scheme) {
    case Scheme::FedBacys:
        return fedbacys_decide(client, time, config);
    case Scheme::FedAvg:
        return fedavg_decide(client, time, config);
    case Scheme::FedSeq:
        return fedseq_decide(client, time, config);
    }
    throw std::logic_error("decide: unhandled scheme");
}

GroupAssignment assign_groups(std::int64_t n_clients, std::int64_t n_groups, RandomStream& rng) {
    if (n_clients <= 0 || n_groups <= 0 || n_groups > n_clients) {
        throw ConfigError("assign_groups: need 0 < n_groups <= n_clients");
    }
    std::vector<std::int64_t> order(static_cast<std::size_t>(n_clients));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    GroupAssignment out;
    out.membership.assign(static_cast<std::size_t>(n_clients), 0);
    out.groups.assign(static_cast<std::size_t>(n_groups), {});
    // The first n_clients % n_groups groups absorb the remainder, so sizes
    // differ by at most one.
    const std::int64_t base = n_clients / n_groups;
    const std::int64_t extra = n_clients % n_groups;
    std::size_t cursor = 0;
    for (std::int64_t g = 0; g < n_groups; ++g) {
        const std::int64_t size = base + (g < extra ? 1 : 0);
        for (std::int64_t k = 0; k < size; ++k) {
            const std::int64_t cid = order[cursor++];
            out.membership[static_cast<std::size_t>(cid)] = g;
            out.groups[static_cast<std::size_t>(g)].push_back(cid);
        }
        auto& members = out.groups[static_cast<std::size_t>(g)];
        std::sort(members.begin(), members.end());
    }
    return out;
}

std::vector<std::int64_t> elect_hubs(const GroupAssignment& assignment, RandomStream& rng) {
    std::vector<std::int64_t> hubs;
    hubs.reserve(assignment.groups.size());
    for (const auto& members : assignment.groups) {
        hubs.push_back(members[static_cast<std::size_t>(rng.uniform_int(
            static_cast<std::uint64_t>(members.size())))]);
    }
    return hubs;
}

}  // namespace ehfl
