#pragma once

// Shared domain vocabulary for the energy-harvesting FL simulator: clients,
// actions, time indexing, and the experiment configuration.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehfl {

/// Flat parameter vector shared by every learning operation. The dimension is
/// fixed for the whole simulation and all entries stay finite.
using ModelParams = std::vector<double>;

enum class Scheme { FedBacys, FedAvg, FedSeq };
enum class PartitionKind { IID, Dirichlet };

std::string to_string(Scheme s);
std::string to_string(PartitionKind p);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a client is asked to pay for an action it cannot afford; the
/// scheduler treats it as "declined" and the client falls back to idling.
class InsufficientEnergy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when training produces a non-finite gradient (learning rate too
/// large, degenerate data).
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Synthetic task knobs: Gaussian class clusters with a softmax-regression
/// model. Stand-in for larger image workloads at desk scale.
struct TaskConfig {
    std::int64_t n_classes = 4;
    std::int64_t feature_dim = 8;
    double cluster_spread = 1.0;
    std::int64_t samples_per_client = 50;
    std::int64_t test_samples = 400;
};

/// Every experiment knob for one run.
struct SimConfig {
    std::int64_t n_clients = 20;        // N
    std::int64_t n_epochs = 100;        // T
    std::int64_t slots_per_epoch = 30;  // S
    std::int64_t n_groups = 5;          // G
    std::int64_t train_cost = 20;       // battery units = slots per training
    double charge_prob = 0.5;           // per-slot Bernoulli charging probability
    std::int64_t battery_cap = 25;
    std::int64_t init_battery = 0;
    double learning_rate = 0.05;
    std::int64_t n_batches = 5;         // gradient steps per local training
    Scheme scheme = Scheme::FedBacys;
    PartitionKind partition = PartitionKind::IID;
    double dirichlet_alpha = 1.0;
    std::uint64_t seed = 1;

    // Hubs add received deltas by default; set to average them instead.
    bool aggregate_mean = false;
    // Unset: every gradient step uses the full local shard.
    std::optional<std::int64_t> batch_size;
    TaskConfig task;
    // Optional CSV dataset replacing the synthetic task's training data.
    std::optional<std::string> dataset_csv;

    /// Slots in one group's window.
    std::int64_t group_round() const { return slots_per_epoch / n_groups; }
    std::int64_t total_slots() const { return slots_per_epoch * n_epochs; }

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

/// What a free client does with its slot. Transmit and StartTraining are
/// mutually exclusive by construction; a busy client makes no decision at all.
enum class Action { Idle, StartTraining, Transmit };

/// A finished local training result that has not reached an aggregation point
/// yet. `delta` is the model increment accumulated by the local gradient
/// steps: adding it to a model applies the client's local progress.
struct Update {
    ModelParams delta;
    std::int64_t produced_epoch = 0;  // epoch in which the training started
    std::int64_t client_id = 0;
};

struct ClientState {
    std::int64_t id = 0;
    std::int64_t battery = 0;
    std::int64_t group = 0;
    // Set while training: the first slot at which the client decides again,
    // always start_slot + train_cost.
    std::optional<std::int64_t> busy_until;
    std::optional<Update> pending_update;
    ModelParams model;
    std::vector<std::size_t> shard;  // indices into the training set

    bool busy(std::int64_t slot) const { return busy_until.has_value() && slot < *busy_until; }
};

/// Client->group map plus the current epoch's hubs. Memberships are fixed for
/// the whole run; hubs are re-drawn at every epoch boundary.
struct GroupAssignment {
    std::vector<std::int64_t> membership;            // client id -> group
    std::vector<std::vector<std::int64_t>> groups;   // group -> member ids
    std::vector<std::int64_t> hubs;                  // group -> hub id (current epoch)
};

/// Epoch and group-window coordinates of a global slot. Both are pure
/// functions of (slot, config) and never stored independently.
struct TimeIndex {
    std::int64_t slot = 0;
    std::int64_t epoch = 0;
    std::int64_t group_in_turn = 0;
    // False in the trailing slack slots of an epoch when the group count does
    // not divide the epoch length; no group window is open there.
    bool window_open = false;
};

/// Throws std::out_of_range when slot is outside [0, S*T).
TimeIndex derive_time(std::int64_t slot, const SimConfig& config);

}  // namespace ehfl
