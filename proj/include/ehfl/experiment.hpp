#pragma once

// Experiment plumbing: JSON config parsing with sweep axes, cartesian
// expansion, and metric emission (per-run CSV/JSON plus the cross-scheme
// energy comparison table). Formatting is byte-stable so a replayed seed
// diffs clean against its first run.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ehfl/engine.hpp"
#include "ehfl/types.hpp"

namespace ehfl {

/// A base configuration plus the axes swept over it. `base` carries every
/// non-swept knob; axes always have at least one entry.
struct ExperimentSpec {
    SimConfig base;
    std::vector<Scheme> schemes;
    std::vector<double> charge_probs;
    std::vector<std::int64_t> group_counts;
    std::vector<PartitionKind> partitions;
    std::vector<double> dirichlet_alphas;
    std::int64_t replications = 1;
    std::string out_dir = "out";
};

/// Parses a JSON config document. Scalar keys set the base config; the keys
/// scheme, charge_prob, n_groups, partition, and dirichlet_alpha also accept
/// lists and become sweep axes. Unknown keys are rejected. battery_cap
/// defaults to train_cost + 5 when absent. Throws ConfigError with the
/// offending key or parse position.
ExperimentSpec parse_config(const std::string& text);

/// Cartesian expansion of the axes, times `replications` (run seeds are
/// base.seed, base.seed+1, ...). The group axis collapses for fedavg (it has
/// no groups) and the alpha axis collapses for iid partitions, so no
/// duplicate cells are generated. Every emitted config is validated.
std::vector<SimConfig> expand(const ExperimentSpec& spec);

/// Short unique file-name stem for one run, e.g. "fedbacys_p0.5_G5_iid_s1".
std::string cell_tag(const SimConfig& config);

/// Per-epoch metrics table. Column order is fixed:
/// epoch,accuracy,loss,energy_train,energy_tx,energy_total,harvested,wasted,
/// participants,trainings — accuracies and losses at 9 decimal places.
std::string metrics_csv(const MetricsLog& log);

/// The same rows as metrics_csv, as a JSON array.
nlohmann::json metrics_json(const MetricsLog& log);

/// Every knob of a config, echoed with the same keys parse_config accepts
/// (so the echo round-trips).
nlohmann::json config_json(const SimConfig& config);

/// End-of-run summary: final accuracy/loss, energy totals, diagnostics, the
/// config echo, and the artifact version.
nlohmann::json summary_json(const SimConfig& config, const RunResult& result);

/// One sweep cell's total consumed energy, keyed by its config.
struct CellResult {
    SimConfig config;
    std::int64_t total_energy = 0;
};

/// Energy comparison across schemes: one row per (scheme, n_groups), one
/// mean/std column pair per charge probability, replications pooled. A
/// combination with no runs renders as NA rather than being dropped.
std::string comparison_table_csv(const std::vector<CellResult>& cells);

}  // namespace ehfl
