#pragma once

// Learning layer: a pluggable task over flat parameter vectors, local SGD,
// delta aggregation, data partitioning, and evaluation. The reference task is
// multinomial logistic regression on synthetic Gaussian clusters, which keeps
// runs fast while leaving the optimization dynamics real.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehfl/rng.hpp"
#include "ehfl/types.hpp"

namespace ehfl {

struct Sample {
    std::vector<double> features;
    std::int64_t label = 0;
};

using Dataset = std::vector<Sample>;

/// A learning problem over a flat parameter vector. Batches are index lists
/// into a Dataset so shards can share one backing store without copies.
class Task {
public:
    virtual ~Task() = default;

    virtual std::int64_t dimension() const = 0;

    /// Mean loss over the batch; non-negative for the reference task.
    virtual double loss(const ModelParams& params, const Dataset& data,
                        const std::vector<std::size_t>& batch) const = 0;

    /// Gradient of `loss` with respect to `params`, same dimension.
    virtual ModelParams gradient(const ModelParams& params, const Dataset& data,
                                 const std::vector<std::size_t>& batch) const = 0;

    /// Fraction of correct predictions over a whole dataset.
    virtual double accuracy(const ModelParams& params, const Dataset& data) const = 0;
};

/// Softmax regression with per-class weights and bias. Parameter layout is
/// row-major per class: params[k*(feature_dim+1) + j] is class k's weight on
/// feature j, with the bias at j = feature_dim. Cross-entropy loss, computed
/// with the log-sum-exp shift so large logits stay finite. Prediction ties
/// break toward the lowest class index, deterministically.
class SoftmaxRegressionTask : public Task {
public:
    SoftmaxRegressionTask(std::int64_t n_classes, std::int64_t feature_dim);

    std::int64_t dimension() const override { return n_classes_ * (feature_dim_ + 1); }
    double loss(const ModelParams& params, const Dataset& data,
                const std::vector<std::size_t>& batch) const override;
    ModelParams gradient(const ModelParams& params, const Dataset& data,
                         const std::vector<std::size_t>& batch) const override;
    double accuracy(const ModelParams& params, const Dataset& data) const override;

private:
    std::vector<double> logits(const ModelParams& params, const Sample& sample) const;

    std::int64_t n_classes_;
    std::int64_t feature_dim_;
};

/// Disjoint per-client index lists into one training Dataset.
struct DataPartition {
    std::vector<std::vector<std::size_t>> shards;
};

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// A task bundled with its train/test data, as produced by the generators.
struct TaskData {
    std::shared_ptr<const Task> task;
    Dataset train;
    Dataset test;
};

/// Runs `n_batches` sequential gradient steps from `start_model` and returns
/// the increment final_iterate - start_model. Adding the increment onto a
/// model applies the client's local progress; summing increments from several
/// clients onto a hub model is the aggregation rule. Without a batch size
/// every step uses the full shard and no randomness is consumed; with one,
/// each step samples that many shard entries (with replacement) from
/// `batching`, which must then be non-null.
ModelParams local_train(const Task& task, const Dataset& data,
                        const std::vector<std::size_t>& shard, const ModelParams& start_model,
                        double learning_rate, std::int64_t n_batches,
                        std::optional<std::int64_t> batch_size, RandomStream* batching);

/// hub_model plus the (unweighted) sum of the updates' deltas; with
/// `mean` set, the sum is divided by the number of updates. Empty update
/// lists leave the model unchanged.
ModelParams aggregate(const ModelParams& hub_model, const std::vector<Update>& updates,
                      bool mean = false);

/// Uniformly random disjoint shards of exactly samples_per_client each.
DataPartition partition_iid(std::size_t dataset_size, std::int64_t n_clients,
                            std::int64_t samples_per_client, RandomStream& rng);

/// Label-skewed partition: per class, client proportions are drawn from a
/// symmetric Dirichlet(alpha) (normalized Gamma draws) and the class's samples
/// are split by largest-remainder rounding. Smaller alpha concentrates each
/// class on fewer clients. Re-drawn from scratch until every client has at
/// least one sample.
DataPartition partition_dirichlet(const Dataset& data, std::int64_t n_clients, double alpha,
                                  RandomStream& rng);

/// Accuracy and mean loss of `model` on a held-out set. Pure.
EvalResult evaluate(const ModelParams& model, const Dataset& test, const Task& task);

/// Mean of per-client losses, (1/N) * sum_i f_i(model) — the simulation's
/// minimization target.
double global_objective(const ModelParams& model, const Dataset& data,
                        const DataPartition& partition, const Task& task);

/// Synthetic workload: one Gaussian cluster per class (centers 3.0 * N(0,1)
/// per coordinate, points center + cluster_spread * N(0,1)), labels assigned
/// round-robin so train and test are exactly class-balanced. Pairs the data
/// with a SoftmaxRegressionTask of matching shape.
TaskData make_synthetic_task(const TaskConfig& config, std::int64_t n_train, RandomStream& rng);

/// Reads "x_1,...,x_m,label" rows (blank lines and '#' comments skipped).
/// Every row must have the same width; labels must be non-negative integers.
/// Throws ConfigError naming the offending line.
Dataset load_csv_dataset(const std::string& path);

/// Plain sequential SGD from the zero model for `n_steps` steps over `shard`;
/// the no-communication reference the federated runs are compared against.
ModelParams train_centralized(const Task& task, const Dataset& data,
                              const std::vector<std::size_t>& shard, double learning_rate,
                              std::int64_t n_steps, std::optional<std::int64_t> batch_size,
                              RandomStream* batching);

}  // namespace ehfl
