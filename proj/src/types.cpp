#include "ehfl/types.hpp"

#include <algorithm>

namespace ehfl {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::FedBacys: return "fedbacys";
        case Scheme::FedAvg: return "fedavg";
        case Scheme::FedSeq: return "fedseq";
    }
    return "?";
}

std::string to_string(PartitionKind p) {
    return p == PartitionKind::IID ? "iid" : "dirichlet";
}

void SimConfig::validate() const {
    auto positive = [](std::int64_t v, const char* name) {
        if (v <= 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(n_clients, "n_clients");
    positive(n_epochs, "n_epochs");
    positive(slots_per_epoch, "slots_per_epoch");
    positive(n_groups, "n_groups");
    positive(train_cost, "train_cost");
    positive(battery_cap, "battery_cap");
    positive(n_batches, "n_batches");
    if (n_groups > slots_per_epoch)
        throw ConfigError("n_groups must not exceed slots_per_epoch (group round would be empty)");
    if (n_groups > n_clients)
        throw ConfigError("n_groups must not exceed n_clients");
    if (charge_prob < 0.0 || charge_prob > 1.0)
        throw ConfigError("charge_prob must lie in [0, 1]");
    if (train_cost > battery_cap)
        throw ConfigError("train_cost exceeds battery_cap: no client could ever train");
    if (init_battery < 0 || init_battery > battery_cap)
        throw ConfigError("init_battery must lie in [0, battery_cap]");
    if (!(learning_rate > 0.0))
        throw ConfigError("learning_rate must be positive");
    if (partition == PartitionKind::Dirichlet && !(dirichlet_alpha > 0.0))
        throw ConfigError("dirichlet_alpha must be positive");
    if (batch_size && *batch_size <= 0)
        throw ConfigError("batch_size must be positive when set");
    if (task.n_classes < 2) throw ConfigError("task.n_classes must be at least 2");
    if (task.feature_dim < 1) throw ConfigError("task.feature_dim must be at least 1");
    positive(task.samples_per_client, "task.samples_per_client");
    positive(task.test_samples, "task.test_samples");
}

TimeIndex derive_time(std::int64_t slot, const SimConfig& config) {
    if (slot < 0 || slot >= config.total_slots())
        throw std::out_of_range("derive_time: slot outside [0, S*T)");
    const std::int64_t S = config.slots_per_epoch;
    const std::int64_t R = config.group_round();
    const std::int64_t offset = slot % S;
    TimeIndex t;
    t.slot = slot;
    t.epoch = slot / S;
    t.window_open = offset < config.n_groups * R;
    t.group_in_turn = std::min(offset / R, config.n_groups - 1);
    return t;
}

}  // namespace ehfl
