#include "ehfl/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "ehfl/scheduling.hpp"

namespace ehfl {

namespace {
std::size_t idx(std::int64_t i) { return static_cast<std::size_t>(i); }
}  // namespace

Simulation::Simulation(SimConfig config)
    : config_(std::move(config)),
      hub_rng_(config_.seed, StreamPurpose::HubElection),
      batching_(config_.seed, StreamPurpose::Batching) {
    config_.validate();

    if (config_.dataset_csv) {
        Dataset all = load_csv_dataset(*config_.dataset_csv);
        const std::int64_t n_test = config_.task.test_samples;
        if (static_cast<std::int64_t>(all.size()) <= n_test) {
            throw ConfigError("dataset has no training rows left after the held-out test split");
        }
        std::int64_t n_classes = 0;
        for (const Sample& s : all) {
            n_classes = std::max(n_classes, s.label + 1);
        }
        if (n_classes < 2) {
            throw ConfigError("dataset needs at least two distinct classes");
        }
        // The last test_samples rows are held out; shape is inferred from the
        // file rather than the task config.
        data_.test.assign(all.end() - static_cast<std::ptrdiff_t>(n_test), all.end());
        data_.train.assign(all.begin(), all.end() - static_cast<std::ptrdiff_t>(n_test));
        data_.task = std::make_shared<SoftmaxRegressionTask>(
            n_classes, static_cast<std::int64_t>(all[0].features.size()));
    } else {
        RandomStream taskgen(config_.seed, StreamPurpose::TaskGen);
        data_ = make_synthetic_task(
            config_.task, config_.n_clients * config_.task.samples_per_client, taskgen);
    }

    RandomStream partition_rng(config_.seed, StreamPurpose::Partition);
    if (config_.partition == PartitionKind::IID) {
        partition_ = partition_iid(data_.train.size(), config_.n_clients,
                                   config_.task.samples_per_client, partition_rng);
    } else {
        partition_ = partition_dirichlet(data_.train, config_.n_clients, config_.dirichlet_alpha,
                                         partition_rng);
    }

    RandomStream grouping(config_.seed, StreamPurpose::Grouping);
    state_.assignment = assign_groups(config_.n_clients, config_.n_groups, grouping);
    state_.assignment.hubs = elect_hubs(state_.assignment, hub_rng_);

    charging_.reserve(idx(config_.n_clients));
    for (std::int64_t i = 0; i < config_.n_clients; ++i) {
        charging_.emplace_back(config_.seed, StreamPurpose::Charging,
                               static_cast<std::uint64_t>(i));
    }

    const std::size_t d = idx(data_.task->dimension());
    state_.server_model.assign(d, 0.0);
    state_.staged_model = state_.server_model;
    state_.clients.resize(idx(config_.n_clients));
    for (std::int64_t i = 0; i < config_.n_clients; ++i) {
        ClientState& c = state_.clients[idx(i)];
        c.id = i;
        c.battery = config_.init_battery;
        c.group = state_.assignment.membership[idx(i)];
        c.model.assign(d, 0.0);
        c.shard = partition_.shards[idx(i)];
    }
    state_.inboxes.assign(idx(config_.n_groups), {});
    state_.delivered_this_epoch.assign(idx(config_.n_clients), 0);
    state_.epoch_models.reserve(idx(config_.n_epochs));
}

void Simulation::apply_action(ClientState& client, Action action, const TimeIndex& time) {
    switch (action) {
    case Action::Idle:
        client.battery = apply_idle(client.battery);
        return;

    case Action::Transmit: {
        const bool is_own_hub = config_.scheme != Scheme::FedAvg &&
                                state_.assignment.hubs[idx(client.group)] == client.id;
        if (is_own_hub) {
            // The hub never radios to itself; the window close absorbs its
            // pending update directly, at no cost.
            return;
        }
        client.battery = apply_transmit(client.battery);
        state_.ledger.consumed_tx += 1;
        if (config_.scheme == Scheme::FedAvg) {
            state_.server_inbox.push_back(*client.pending_update);
        } else {
            state_.inboxes[idx(client.group)].push_back(*client.pending_update);
        }
        client.pending_update.reset();
        return;
    }

    case Action::StartTraining: {
        client.battery = start_training(client.battery, config_.train_cost);
        state_.ledger.consumed_train += config_.train_cost;
        const std::int64_t completion = time.slot + config_.train_cost;
        TrainingJob job;
        job.client_id = client.id;
        job.start_slot = time.slot;
        job.completion_slot = completion;
        job.produced_epoch = time.epoch;
        // The gradient work happens against the model the client holds right
        // now; downlinks landing mid-training do not reach this job.
        job.delta = local_train(*data_.task, data_.train, client.shard, client.model,
                                config_.learning_rate, config_.n_batches, config_.batch_size,
                                &batching_);
        state_.jobs.push_back(std::move(job));
        client.busy_until = completion;
        state_.trainings_this_epoch += 1;
        return;
    }
    }
}

void Simulation::close_group_window(std::int64_t group) {
    auto& inbox = state_.inboxes[idx(group)];
    ClientState& hub = state_.clients[idx(state_.assignment.hubs[idx(group)])];
    if (hub.pending_update) {
        inbox.push_back(*hub.pending_update);  // self-delivery, free
        hub.pending_update.reset();
    }
    for (const Update& u : inbox) {
        state_.delivered_this_epoch[idx(u.client_id)] = 1;
    }
    hub.model = aggregate(hub.model, inbox, config_.aggregate_mean);
    inbox.clear();
    state_.staged_model = hub.model;

    // The hand-off transmission costs the hub one unit when it can pay;
    // a starved hub still hands off (stalling would deadlock the cycle) and
    // the free ride is counted.
    if (hub.battery >= 1) {
        hub.battery = apply_transmit(hub.battery);
        state_.ledger.consumed_tx += 1;
    } else {
        state_.diag.free_handoffs += 1;
    }

    if (group + 1 < config_.n_groups) {
        // Multicast: the next group's members adopt the handed-off model,
        // busy or not (in-flight trainings keep their start-slot snapshot).
        for (const std::int64_t member : state_.assignment.groups[idx(group + 1)]) {
            state_.clients[idx(member)].model = state_.staged_model;
        }
    } else {
        state_.server_model = state_.staged_model;
        if (state_.slot + 1 < config_.total_slots()) {
            // New epoch: fresh hubs, and the first group starts from the
            // just-published server model.
            state_.assignment.hubs = elect_hubs(state_.assignment, hub_rng_);
            for (const std::int64_t member : state_.assignment.groups[0]) {
                state_.clients[idx(member)].model = state_.server_model;
            }
        }
    }
}

void Simulation::close_fedavg_epoch() {
    for (const Update& u : state_.server_inbox) {
        state_.delivered_this_epoch[idx(u.client_id)] = 1;
    }
    state_.server_model = aggregate(state_.server_model, state_.server_inbox,
                                    config_.aggregate_mean);
    state_.server_inbox.clear();
    // Broadcast is free: only uplinks cost energy.
    for (ClientState& c : state_.clients) {
        c.model = state_.server_model;
    }
}

void Simulation::record_epoch(std::int64_t epoch) {
    const EvalResult ev = evaluate(state_.server_model, data_.test, *data_.task);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.accuracy = ev.accuracy;
    rec.loss = ev.loss;
    rec.energy_train = state_.ledger.consumed_train;
    rec.energy_tx = state_.ledger.consumed_tx;
    rec.harvested = state_.ledger.harvested;
    rec.wasted = state_.ledger.wasted;
    rec.participants = std::count(state_.delivered_this_epoch.begin(),
                                  state_.delivered_this_epoch.end(), char{1});
    rec.trainings = state_.trainings_this_epoch;
    state_.metrics.epochs.push_back(rec);
    state_.epoch_models.push_back(state_.server_model);

    std::fill(state_.delivered_this_epoch.begin(), state_.delivered_this_epoch.end(), char{0});
    state_.trainings_this_epoch = 0;
}

void Simulation::step_slot() {
    const std::int64_t s = state_.slot;
    if (s >= config_.total_slots()) {
        throw std::logic_error("step_slot: already past the horizon");
    }
    const TimeIndex time = derive_time(s, config_);

    // (a) Policies read only their own client plus the clock, so evaluating
    // them all before applying anything gives snapshot semantics.
    std::vector<Action> actions(state_.clients.size(), Action::Idle);
    for (const ClientState& c : state_.clients) {
        if (!c.busy(s)) {
            actions[idx(c.id)] = decide(config_.scheme, c, time, config_);
        }
    }

    // (b) Apply in ascending id.
    for (ClientState& c : state_.clients) {
        apply_action(c, actions[idx(c.id)], time);
    }

    // (c) Trainings whose busy window ends with this slot become pending
    // updates, ready for the owner's next decision.
    for (auto it = state_.jobs.begin(); it != state_.jobs.end();) {
        if (it->completion_slot == s + 1) {
            ClientState& c = state_.clients[idx(it->client_id)];
            c.pending_update = Update{std::move(it->delta), it->produced_epoch, it->client_id};
            c.busy_until.reset();
            it = state_.jobs.erase(it);
        } else {
            ++it;
        }
    }

    // (d) Charge everyone from their own stream.
    for (ClientState& c : state_.clients) {
        const bool charged = sample_charge(charging_[idx(c.id)], config_.charge_prob);
        c.battery = apply_charge(c.battery, config_.battery_cap, charged, state_.ledger);
    }

    // (e) Window close and epoch bookkeeping.
    const std::int64_t offset = s % config_.slots_per_epoch;
    if (config_.scheme == Scheme::FedAvg) {
        if (offset == config_.slots_per_epoch - 1) {
            close_fedavg_epoch();
        }
    } else if (time.window_open && is_aggregation_slot(s, time.group_in_turn, config_)) {
        close_group_window(time.group_in_turn);
    }
    if (offset == config_.slots_per_epoch - 1) {
        record_epoch(time.epoch);
    }

    state_.slot += 1;
    if (hook_) {
        hook_(*this, s);
    }
}

void Simulation::run() {
    while (state_.slot < config_.total_slots()) {
        step_slot();
    }
}

RunResult run_simulation(const SimConfig& config) {
    Simulation sim(config);
    sim.run();
    RunResult out;
    out.log = sim.state().metrics;
    out.final_model = sim.state().server_model;
    out.epoch_models = sim.state().epoch_models;
    out.ledger = sim.state().ledger;
    out.diag = sim.state().diag;
    return out;
}

}  // namespace ehfl
