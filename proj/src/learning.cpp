#include "ehfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ehfl {

SoftmaxRegressionTask::SoftmaxRegressionTask(std::int64_t n_classes, std::int64_t feature_dim)
    : n_classes_(n_classes), feature_dim_(feature_dim) {
    if (n_classes < 2 || feature_dim < 1) {
        throw ConfigError("SoftmaxRegressionTask: need n_classes >= 2 and feature_dim >= 1");
    }
}

std::vector<double> SoftmaxRegressionTask::logits(const ModelParams& params,
                                                  const Sample& sample) const {
    if (params.size() != static_cast<std::size_t>(dimension())) {
        throw std::invalid_argument("SoftmaxRegressionTask: parameter dimension mismatch");
    }
    if (sample.features.size() != static_cast<std::size_t>(feature_dim_)) {
        throw std::invalid_argument("SoftmaxRegressionTask: feature dimension mismatch");
    }
    std::vector<double> out(static_cast<std::size_t>(n_classes_));
    const std::size_t stride = static_cast<std::size_t>(feature_dim_ + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double* row = params.data() + k * stride;
        double z = row[stride - 1];  // bias
        for (std::size_t j = 0; j < static_cast<std::size_t>(feature_dim_); ++j) {
            z += row[j] * sample.features[j];
        }
        out[k] = z;
    }
    return out;
}

double SoftmaxRegressionTask::loss(const ModelParams& params, const Dataset& data,
                                   const std::vector<std::size_t>& batch) const {
    if (batch.empty()) {
        throw std::invalid_argument("SoftmaxRegressionTask::loss: empty batch");
    }
    double total = 0.0;
    for (const std::size_t idx : batch) {
        const Sample& s = data.at(idx);
        if (s.label < 0 || s.label >= n_classes_) {
            throw std::out_of_range("SoftmaxRegressionTask: label outside [0, n_classes)");
        }
        const std::vector<double> z = logits(params, s);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (const double zk : z) {
            sum += std::exp(zk - zmax);
        }
        // -log softmax(z)[y] = logsumexp(z) - z_y, never negative.
        total += zmax + std::log(sum) - z[static_cast<std::size_t>(s.label)];
    }
    return total / static_cast<double>(batch.size());
}

ModelParams SoftmaxRegressionTask::gradient(const ModelParams& params, const Dataset& data,
                                            const std::vector<std::size_t>& batch) const {
    if (batch.empty()) {
        throw std::invalid_argument("SoftmaxRegressionTask::gradient: empty batch");
    }
    ModelParams grad(static_cast<std::size_t>(dimension()), 0.0);
    const std::size_t stride = static_cast<std::size_t>(feature_dim_ + 1);
    for (const std::size_t idx : batch) {
        const Sample& s = data.at(idx);
        if (s.label < 0 || s.label >= n_classes_) {
            throw std::out_of_range("SoftmaxRegressionTask: label outside [0, n_classes)");
        }
        const std::vector<double> z = logits(params, s);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        std::vector<double> p(z.size());
        for (std::size_t k = 0; k < z.size(); ++k) {
            p[k] = std::exp(z[k] - zmax);
            sum += p[k];
        }
        for (std::size_t k = 0; k < z.size(); ++k) {
            // d(cross-entropy)/d(logit_k) = softmax_k - 1{y = k}
            const double coef = p[k] / sum - (static_cast<std::int64_t>(k) == s.label ? 1.0 : 0.0);
            double* row = grad.data() + k * stride;
            for (std::size_t j = 0; j < static_cast<std::size_t>(feature_dim_); ++j) {
                row[j] += coef * s.features[j];
            }
            row[stride - 1] += coef;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv;
    }
    return grad;
}

double SoftmaxRegressionTask::accuracy(const ModelParams& params, const Dataset& data) const {
    if (data.empty()) {
        throw std::invalid_argument("SoftmaxRegressionTask::accuracy: empty dataset");
    }
    std::size_t correct = 0;
    for (const Sample& s : data) {
        const std::vector<double> z = logits(params, s);
        std::size_t best = 0;
        for (std::size_t k = 1; k < z.size(); ++k) {
            if (z[k] > z[best]) {
                best = k;  // strict: ties keep the lowest class index
            }
        }
        if (static_cast<std::int64_t>(best) == s.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

/// Shared SGD loop; returns the final iterate.
ModelParams run_sgd(const Task& task, const Dataset& data, const std::vector<std::size_t>& shard,
                    const ModelParams& start, double learning_rate, std::int64_t n_steps,
                    std::optional<std::int64_t> batch_size, RandomStream* batching) {
    if (shard.empty()) {
        throw std::invalid_argument("run_sgd: empty shard");
    }
    if (batch_size && !batching) {
        throw std::invalid_argument("run_sgd: batch_size requires a batching stream");
    }
    ModelParams iterate = start;
    std::vector<std::size_t> batch;
    for (std::int64_t b = 0; b < n_steps; ++b) {
        const std::vector<std::size_t>* step_batch = &shard;
        if (batch_size) {
            batch.clear();
            for (std::int64_t k = 0; k < *batch_size; ++k) {
                batch.push_back(shard[static_cast<std::size_t>(
                    batching->uniform_int(static_cast<std::uint64_t>(shard.size())))]);
            }
            step_batch = &batch;
        }
        const ModelParams g = task.gradient(iterate, data, *step_batch);
        for (std::size_t i = 0; i < iterate.size(); ++i) {
            iterate[i] -= learning_rate * g[i];
            if (!std::isfinite(iterate[i])) {
                throw DivergenceError(
                    "training diverged: non-finite parameter (learning rate too large?)");
            }
        }
    }
    return iterate;
}

}  // namespace

ModelParams local_train(const Task& task, const Dataset& data,
                        const std::vector<std::size_t>& shard, const ModelParams& start_model,
                        double learning_rate, std::int64_t n_batches,
                        std::optional<std::int64_t> batch_size, RandomStream* batching) {
    const ModelParams end =
        run_sgd(task, data, shard, start_model, learning_rate, n_batches, batch_size, batching);
    ModelParams delta(end.size());
    for (std::size_t i = 0; i < end.size(); ++i) {
        delta[i] = end[i] - start_model[i];
    }
    return delta;
}

ModelParams aggregate(const ModelParams& hub_model, const std::vector<Update>& updates,
                      bool mean) {
    for (const Update& u : updates) {
        if (u.delta.size() != hub_model.size()) {
            throw std::invalid_argument("aggregate: delta dimension mismatch");
        }
    }
    ModelParams out = hub_model;
    if (updates.empty()) {
        return out;
    }
    const double scale = mean ? 1.0 / static_cast<double>(updates.size()) : 1.0;
    for (const Update& u : updates) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += scale * u.delta[i];
        }
    }
    return out;
}

DataPartition partition_iid(std::size_t dataset_size, std::int64_t n_clients,
                            std::int64_t samples_per_client, RandomStream& rng) {
    if (n_clients <= 0 || samples_per_client <= 0) {
        throw ConfigError("partition_iid: need positive n_clients and samples_per_client");
    }
    const std::size_t needed =
        static_cast<std::size_t>(n_clients) * static_cast<std::size_t>(samples_per_client);
    if (dataset_size < needed) {
        throw ConfigError("partition_iid: dataset too small for the requested shards");
    }
    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    DataPartition out;
    out.shards.assign(static_cast<std::size_t>(n_clients), {});
    std::size_t cursor = 0;
    for (auto& shard : out.shards) {
        shard.assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                     order.begin() + static_cast<std::ptrdiff_t>(cursor + samples_per_client));
        cursor += static_cast<std::size_t>(samples_per_client);
    }
    return out;
}

namespace {

/// Largest-remainder split of `total` items proportional to `weights`.
std::vector<std::int64_t> apportion(const std::vector<double>& weights, std::int64_t total) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::int64_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    remainders.reserve(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double ideal = weights[i] / sum * static_cast<double>(total);
        counts[i] = static_cast<std::int64_t>(std::floor(ideal));
        assigned += counts[i];
        remainders.emplace_back(ideal - std::floor(ideal), i);
    }
    // Hand the leftover items to the largest fractional parts; ties go to the
    // lower index so the split is reproducible.
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return a.second < b.second;
    });
    for (std::int64_t k = 0; k < total - assigned; ++k) {
        ++counts[remainders[static_cast<std::size_t>(k)].second];
    }
    return counts;
}

}  // namespace

DataPartition partition_dirichlet(const Dataset& data, std::int64_t n_clients, double alpha,
                                  RandomStream& rng) {
    if (data.empty()) {
        throw ConfigError("partition_dirichlet: empty dataset");
    }
    if (n_clients <= 0 || alpha <= 0.0) {
        throw ConfigError("partition_dirichlet: need positive n_clients and alpha");
    }
    std::int64_t n_classes = 0;
    for (const Sample& s : data) {
        if (s.label < 0) {
            throw ConfigError("partition_dirichlet: negative label");
        }
        n_classes = std::max(n_classes, s.label + 1);
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data[i].label)].push_back(i);
    }

    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        DataPartition out;
        out.shards.assign(static_cast<std::size_t>(n_clients), {});
        bool degenerate = false;
        for (auto indices : by_class) {  // copy: each attempt reshuffles
            if (indices.empty()) {
                continue;
            }
            rng.shuffle(indices);
            std::vector<double> weights(static_cast<std::size_t>(n_clients));
            double sum = 0.0;
            for (double& w : weights) {
                w = rng.gamma(alpha);
                sum += w;
            }
            if (!(sum > 0.0) || !std::isfinite(sum)) {
                degenerate = true;  // all-zero underflow; redraw everything
                break;
            }
            const std::vector<std::int64_t> counts =
                apportion(weights, static_cast<std::int64_t>(indices.size()));
            std::size_t cursor = 0;
            for (std::size_t c = 0; c < weights.size(); ++c) {
                for (std::int64_t k = 0; k < counts[c]; ++k) {
                    out.shards[c].push_back(indices[cursor++]);
                }
            }
        }
        if (degenerate) {
            continue;
        }
        const bool all_served =
            std::none_of(out.shards.begin(), out.shards.end(),
                         [](const std::vector<std::size_t>& s) { return s.empty(); });
        if (all_served) {
            return out;
        }
    }
    throw ConfigError("partition_dirichlet: could not give every client a sample; "
                      "alpha too small for this client count");
}

EvalResult evaluate(const ModelParams& model, const Dataset& test, const Task& task) {
    if (test.empty()) {
        throw std::invalid_argument("evaluate: empty test set");
    }
    std::vector<std::size_t> all(test.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EvalResult r;
    r.accuracy = task.accuracy(model, test);
    r.loss = task.loss(model, test, all);
    return r;
}

double global_objective(const ModelParams& model, const Dataset& data,
                        const DataPartition& partition, const Task& task) {
    if (partition.shards.empty()) {
        throw std::invalid_argument("global_objective: no shards");
    }
    double total = 0.0;
    for (const auto& shard : partition.shards) {
        total += task.loss(model, data, shard);
    }
    return total / static_cast<double>(partition.shards.size());
}

TaskData make_synthetic_task(const TaskConfig& config, std::int64_t n_train, RandomStream& rng) {
    if (n_train <= 0 || config.test_samples <= 0) {
        throw ConfigError("make_synthetic_task: need positive sample counts");
    }
    const std::size_t k = static_cast<std::size_t>(config.n_classes);
    const std::size_t m = static_cast<std::size_t>(config.feature_dim);
    std::vector<std::vector<double>> centers(k, std::vector<double>(m));
    for (auto& center : centers) {
        for (double& c : center) {
            c = 3.0 * rng.normal();
        }
    }
    auto draw = [&](std::int64_t n) {
        Dataset out;
        out.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            Sample s;
            s.label = i % config.n_classes;
            s.features.resize(m);
            const auto& center = centers[static_cast<std::size_t>(s.label)];
            for (std::size_t j = 0; j < m; ++j) {
                s.features[j] = center[j] + config.cluster_spread * rng.normal();
            }
            out.push_back(std::move(s));
        }
        return out;
    };
    TaskData td;
    td.train = draw(n_train);
    td.test = draw(config.test_samples);
    td.task = std::make_shared<SoftmaxRegressionTask>(config.n_classes, config.feature_dim);
    return td;
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("load_csv_dataset: cannot open " + path);
    }
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ConfigError("load_csv_dataset: " + path + ":" + std::to_string(lineno) +
                                  ": not a number: '" + cell + "'");
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
                ++used;
            }
            if (used != cell.size()) {
                throw ConfigError("load_csv_dataset: " + path + ":" + std::to_string(lineno) +
                                  ": trailing junk in '" + cell + "'");
            }
            fields.push_back(value);
        }
        if (fields.size() < 2) {
            throw ConfigError("load_csv_dataset: " + path + ":" + std::to_string(lineno) +
                              ": need at least one feature and a label");
        }
        if (width == 0) {
            width = fields.size();
        } else if (fields.size() != width) {
            throw ConfigError("load_csv_dataset: " + path + ":" + std::to_string(lineno) +
                              ": inconsistent column count");
        }
        const double raw_label = fields.back();
        fields.pop_back();
        if (raw_label < 0.0 || raw_label != std::floor(raw_label)) {
            throw ConfigError("load_csv_dataset: " + path + ":" + std::to_string(lineno) +
                              ": label must be a non-negative integer");
        }
        Sample s;
        s.features = std::move(fields);
        s.label = static_cast<std::int64_t>(raw_label);
        out.push_back(std::move(s));
    }
    if (out.empty()) {
        throw ConfigError("load_csv_dataset: " + path + " has no data rows");
    }
    return out;
}

ModelParams train_centralized(const Task& task, const Dataset& data,
                              const std::vector<std::size_t>& shard, double learning_rate,
                              std::int64_t n_steps, std::optional<std::int64_t> batch_size,
                              RandomStream* batching) {
    const ModelParams zero(static_cast<std::size_t>(task.dimension()), 0.0);
    return run_sgd(task, data, shard, zero, learning_rate, n_steps, batch_size, batching);
}

}  // namespace ehfl
