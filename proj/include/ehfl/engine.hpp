#pragma once

// The slot loop. Each slot runs five phases in a fixed order:
//   (a) every free client picks an action from the slot-start snapshot;
//   (b) actions apply in ascending client id (transmit costs, training
//       deductions, job creation);
//   (c) trainings whose busy window ends this slot finalize into pending
//       updates;
//   (d) every client charges from its own Bernoulli stream;
//   (e) any group window closing this slot aggregates and hands off; the last
//       slot of an epoch records metrics.
// All randomness comes from streams derived from the one root seed, so a
// config replays bit-exactly.

#include <cstdint>
#include <functional>
#include <vector>

#include "ehfl/energy.hpp"
#include "ehfl/learning.hpp"
#include "ehfl/rng.hpp"
#include "ehfl/types.hpp"

namespace ehfl {

/// An in-flight local training. The gradient work is computed at the start
/// slot from the model the client held then; later downlinks to the client do
/// not touch it. It finalizes exactly at start_slot + train_cost.
struct TrainingJob {
    std::int64_t client_id = 0;
    std::int64_t start_slot = 0;
    std::int64_t completion_slot = 0;
    std::int64_t produced_epoch = 0;
    ModelParams delta;
};

/// One row per completed epoch; energy columns are cumulative snapshots of
/// the ledger, participants/trainings are per-epoch tallies.
struct EpochRecord {
    std::int64_t epoch = 0;
    double accuracy = 0.0;
    double loss = 0.0;
    std::int64_t energy_train = 0;
    std::int64_t energy_tx = 0;
    std::int64_t harvested = 0;
    std::int64_t wasted = 0;
    std::int64_t participants = 0;  // distinct clients whose delta was aggregated
    std::int64_t trainings = 0;     // trainings started this epoch
};

struct MetricsLog {
    std::vector<EpochRecord> epochs;
};

/// Soft-failure counters that keep the cyclic schedule alive.
struct Diagnostics {
    // Hand-offs a hub performed with an empty battery (delivered for free
    // rather than stalling the cycle).
    std::int64_t free_handoffs = 0;
};

/// The whole mutable world of one run.
struct SimState {
    std::int64_t slot = 0;
    std::vector<ClientState> clients;
    GroupAssignment assignment;
    ModelParams server_model;
    ModelParams staged_model;  // last model handed between groups
    std::vector<std::vector<Update>> inboxes;  // per-group, filled only at window close
    std::vector<Update> server_inbox;          // direct uploads (fedavg)
    std::vector<TrainingJob> jobs;
    EnergyLedger ledger;
    MetricsLog metrics;
    Diagnostics diag;
    std::vector<ModelParams> epoch_models;  // server model after each epoch

    // Per-epoch tallies, reset at each epoch record.
    std::vector<char> delivered_this_epoch;
    std::int64_t trainings_this_epoch = 0;
};

class Simulation {
public:
    /// Inspection callback, invoked after every completed slot.
    using SlotHook = std::function<void(const Simulation&, std::int64_t completed_slot)>;

    /// Validates the config, builds (or loads) the dataset, partitions it,
    /// assigns groups, and elects the first hubs.
    explicit Simulation(SimConfig config);

    /// Advances one slot through phases (a)-(e).
    void step_slot();

    /// Runs every remaining slot.
    void run();

    void set_slot_hook(SlotHook hook) { hook_ = std::move(hook); }

    const SimConfig& config() const { return config_; }
    const SimState& state() const { return state_; }
    const TaskData& data() const { return data_; }
    const DataPartition& partition() const { return partition_; }

private:
    void apply_action(ClientState& client, Action action, const TimeIndex& time);
    void close_group_window(std::int64_t group);
    void close_fedavg_epoch();
    void record_epoch(std::int64_t epoch);

    SimConfig config_;
    TaskData data_;
    DataPartition partition_;
    SimState state_;
    std::vector<RandomStream> charging_;  // one independent stream per client
    RandomStream hub_rng_;
    RandomStream batching_;
    SlotHook hook_;
};

/// Everything a caller needs after a run.
struct RunResult {
    MetricsLog log;
    ModelParams final_model;
    std::vector<ModelParams> epoch_models;
    EnergyLedger ledger;
    Diagnostics diag;
};

/// Convenience wrapper: construct, run to the horizon, collect.
RunResult run_simulation(const SimConfig& config);

}  // namespace ehfl
