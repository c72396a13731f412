#include "ehfl/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace ehfl {

using nlohmann::json;

namespace {

Scheme parse_scheme(const std::string& s) {
    if (s == "fedbacys") return Scheme::FedBacys;
    if (s == "fedavg") return Scheme::FedAvg;
    if (s == "fedseq") return Scheme::FedSeq;
    throw ConfigError("unknown scheme '" + s + "' (expected fedbacys, fedavg, or fedseq)");
}

PartitionKind parse_partition(const std::string& s) {
    if (s == "iid") return PartitionKind::IID;
    if (s == "dirichlet") return PartitionKind::Dirichlet;
    throw ConfigError("unknown partition '" + s + "' (expected iid or dirichlet)");
}

std::int64_t as_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

double as_double(const json& v, const std::string& key) {
    if (!v.is_number()) {
        throw ConfigError("config key '" + key + "' must be a number");
    }
    return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string()) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

/// A sweepable key: a bare value or a non-empty list of them.
template <typename T, typename Fn>
std::vector<T> axis(const json& v, const std::string& key, Fn&& one) {
    std::vector<T> out;
    if (v.is_array()) {
        for (const json& e : v) {
            out.push_back(one(e, key));
        }
    } else {
        out.push_back(one(v, key));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "' lists no values");
    }
    return out;
}

std::string format_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

ExperimentSpec parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }

    static const std::set<std::string> known = {
        "n_clients",   "n_epochs",     "slots_per_epoch", "n_groups",       "train_cost",
        "charge_prob", "battery_cap",  "init_battery",    "learning_rate",  "n_batches",
        "scheme",      "partition",    "dirichlet_alpha", "seed",           "replications",
        "out_dir",     "aggregate_mean", "batch_size",    "dataset_csv",    "task"};
    for (const auto& item : doc.items()) {
        if (known.find(item.key()) == known.end()) {
            throw ConfigError("unknown config key '" + item.key() + "'");
        }
    }

    ExperimentSpec spec;
    SimConfig& base = spec.base;

    if (doc.contains("n_clients")) base.n_clients = as_int(doc["n_clients"], "n_clients");
    if (doc.contains("n_epochs")) base.n_epochs = as_int(doc["n_epochs"], "n_epochs");
    if (doc.contains("slots_per_epoch")) {
        base.slots_per_epoch = as_int(doc["slots_per_epoch"], "slots_per_epoch");
    }
    if (doc.contains("train_cost")) base.train_cost = as_int(doc["train_cost"], "train_cost");
    if (doc.contains("battery_cap")) {
        base.battery_cap = as_int(doc["battery_cap"], "battery_cap");
    } else {
        base.battery_cap = base.train_cost + 5;  // room for one training plus change
    }
    if (doc.contains("init_battery")) {
        base.init_battery = as_int(doc["init_battery"], "init_battery");
    }
    if (doc.contains("learning_rate")) {
        base.learning_rate = as_double(doc["learning_rate"], "learning_rate");
    }
    if (doc.contains("n_batches")) base.n_batches = as_int(doc["n_batches"], "n_batches");
    if (doc.contains("seed")) {
        const json& v = doc["seed"];
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError("config key 'seed' must be a non-negative integer");
        }
        base.seed = v.get<std::uint64_t>();
    }
    if (doc.contains("replications")) {
        spec.replications = as_int(doc["replications"], "replications");
    }
    if (doc.contains("out_dir")) spec.out_dir = as_string(doc["out_dir"], "out_dir");
    if (doc.contains("aggregate_mean")) {
        const json& v = doc["aggregate_mean"];
        if (!v.is_boolean()) {
            throw ConfigError("config key 'aggregate_mean' must be a boolean");
        }
        base.aggregate_mean = v.get<bool>();
    }
    if (doc.contains("batch_size")) base.batch_size = as_int(doc["batch_size"], "batch_size");
    if (doc.contains("dataset_csv")) base.dataset_csv = as_string(doc["dataset_csv"], "dataset_csv");

    if (doc.contains("task")) {
        const json& t = doc["task"];
        if (!t.is_object()) {
            throw ConfigError("config key 'task' must be an object");
        }
        static const std::set<std::string> task_keys = {
            "n_classes", "feature_dim", "cluster_spread", "samples_per_client", "test_samples"};
        for (const auto& item : t.items()) {
            if (task_keys.find(item.key()) == task_keys.end()) {
                throw ConfigError("unknown task key '" + item.key() + "'");
            }
        }
        if (t.contains("n_classes")) base.task.n_classes = as_int(t["n_classes"], "task.n_classes");
        if (t.contains("feature_dim")) {
            base.task.feature_dim = as_int(t["feature_dim"], "task.feature_dim");
        }
        if (t.contains("cluster_spread")) {
            base.task.cluster_spread = as_double(t["cluster_spread"], "task.cluster_spread");
        }
        if (t.contains("samples_per_client")) {
            base.task.samples_per_client = as_int(t["samples_per_client"], "task.samples_per_client");
        }
        if (t.contains("test_samples")) {
            base.task.test_samples = as_int(t["test_samples"], "task.test_samples");
        }
    }

    spec.charge_probs = doc.contains("charge_prob")
                            ? axis<double>(doc["charge_prob"], "charge_prob", as_double)
                            : std::vector<double>{base.charge_prob};
    spec.group_counts = doc.contains("n_groups")
                            ? axis<std::int64_t>(doc["n_groups"], "n_groups", as_int)
                            : std::vector<std::int64_t>{base.n_groups};
    spec.dirichlet_alphas = doc.contains("dirichlet_alpha")
                                ? axis<double>(doc["dirichlet_alpha"], "dirichlet_alpha", as_double)
                                : std::vector<double>{base.dirichlet_alpha};
    if (doc.contains("scheme")) {
        for (const std::string& s : axis<std::string>(doc["scheme"], "scheme", as_string)) {
            spec.schemes.push_back(parse_scheme(s));
        }
    } else {
        spec.schemes.push_back(base.scheme);
    }
    if (doc.contains("partition")) {
        for (const std::string& s : axis<std::string>(doc["partition"], "partition", as_string)) {
            spec.partitions.push_back(parse_partition(s));
        }
    } else {
        spec.partitions.push_back(base.partition);
    }

    if (spec.replications < 1) {
        throw ConfigError("replications must be at least 1");
    }
    return spec;
}

std::vector<SimConfig> expand(const ExperimentSpec& spec) {
    if (spec.schemes.empty() || spec.charge_probs.empty() || spec.group_counts.empty() ||
        spec.partitions.empty() || spec.dirichlet_alphas.empty() || spec.replications < 1) {
        throw ConfigError("expand: empty sweep axis");
    }
    std::vector<SimConfig> out;
    for (const Scheme scheme : spec.schemes) {
        // fedavg has no group structure; one representative cell is enough.
        std::vector<std::int64_t> groups = spec.group_counts;
        if (scheme == Scheme::FedAvg) {
            groups.assign(1, spec.group_counts.front());
        }
        for (const double p : spec.charge_probs) {
            for (const std::int64_t g : groups) {
                for (const PartitionKind part : spec.partitions) {
                    std::vector<double> alphas = spec.dirichlet_alphas;
                    if (part == PartitionKind::IID) {
                        alphas.assign(1, spec.base.dirichlet_alpha);
                    }
                    for (const double alpha : alphas) {
                        for (std::int64_t rep = 0; rep < spec.replications; ++rep) {
                            SimConfig c = spec.base;
                            c.scheme = scheme;
                            c.charge_prob = p;
                            c.n_groups = g;
                            c.partition = part;
                            c.dirichlet_alpha = alpha;
                            c.seed = spec.base.seed + static_cast<std::uint64_t>(rep);
                            c.validate();
                            out.push_back(std::move(c));
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::string cell_tag(const SimConfig& config) {
    std::string tag = to_string(config.scheme) + "_p" + format_num(config.charge_prob);
    if (config.scheme != Scheme::FedAvg) {
        tag += "_G" + std::to_string(config.n_groups);
    }
    tag += "_" + to_string(config.partition);
    if (config.partition == PartitionKind::Dirichlet) {
        tag += "_a" + format_num(config.dirichlet_alpha);
    }
    tag += "_s" + std::to_string(config.seed);
    return tag;
}

std::string metrics_csv(const MetricsLog& log) {
    std::string out =
        "epoch,accuracy,loss,energy_train,energy_tx,energy_total,harvested,wasted,"
        "participants,trainings\n";
    char line[320];
    for (const EpochRecord& r : log.epochs) {
        std::snprintf(line, sizeof line, "%lld,%.9f,%.9f,%lld,%lld,%lld,%lld,%lld,%lld,%lld\n",
                      static_cast<long long>(r.epoch), r.accuracy, r.loss,
                      static_cast<long long>(r.energy_train), static_cast<long long>(r.energy_tx),
                      static_cast<long long>(r.energy_train + r.energy_tx),
                      static_cast<long long>(r.harvested), static_cast<long long>(r.wasted),
                      static_cast<long long>(r.participants),
                      static_cast<long long>(r.trainings));
        out += line;
    }
    return out;
}

json metrics_json(const MetricsLog& log) {
    json rows = json::array();
    for (const EpochRecord& r : log.epochs) {
        rows.push_back(json{{"epoch", r.epoch},
                            {"accuracy", r.accuracy},
                            {"loss", r.loss},
                            {"energy_train", r.energy_train},
                            {"energy_tx", r.energy_tx},
                            {"energy_total", r.energy_train + r.energy_tx},
                            {"harvested", r.harvested},
                            {"wasted", r.wasted},
                            {"participants", r.participants},
                            {"trainings", r.trainings}});
    }
    return rows;
}

json config_json(const SimConfig& c) {
    json j;
    j["n_clients"] = c.n_clients;
    j["n_epochs"] = c.n_epochs;
    j["slots_per_epoch"] = c.slots_per_epoch;
    j["n_groups"] = c.n_groups;
    j["train_cost"] = c.train_cost;
    j["charge_prob"] = c.charge_prob;
    j["battery_cap"] = c.battery_cap;
    j["init_battery"] = c.init_battery;
    j["learning_rate"] = c.learning_rate;
    j["n_batches"] = c.n_batches;
    j["scheme"] = to_string(c.scheme);
    j["partition"] = to_string(c.partition);
    j["dirichlet_alpha"] = c.dirichlet_alpha;
    j["seed"] = c.seed;
    j["aggregate_mean"] = c.aggregate_mean;
    if (c.batch_size) {
        j["batch_size"] = *c.batch_size;
    }
    if (c.dataset_csv) {
        j["dataset_csv"] = *c.dataset_csv;
    }
    j["task"] = json{{"n_classes", c.task.n_classes},
                     {"feature_dim", c.task.feature_dim},
                     {"cluster_spread", c.task.cluster_spread},
                     {"samples_per_client", c.task.samples_per_client},
                     {"test_samples", c.task.test_samples}};
    return j;
}

json summary_json(const SimConfig& config, const RunResult& result) {
    json j;
    j["artifact_version"] = "1.0.0";
    j["config"] = config_json(config);
    j["seed"] = config.seed;
    j["epochs_completed"] = result.log.epochs.size();
    if (!result.log.epochs.empty()) {
        j["final_accuracy"] = result.log.epochs.back().accuracy;
        j["final_loss"] = result.log.epochs.back().loss;
    }
    j["energy_train"] = result.ledger.consumed_train;
    j["energy_tx"] = result.ledger.consumed_tx;
    j["total_energy"] = result.ledger.consumed_train + result.ledger.consumed_tx;
    j["harvested"] = result.ledger.harvested;
    j["wasted"] = result.ledger.wasted;
    j["free_handoffs"] = result.diag.free_handoffs;
    return j;
}

std::string comparison_table_csv(const std::vector<CellResult>& cells) {
    // Rows keyed by (scheme, group count), fedavg collapsing the group axis;
    // columns are the observed charge probabilities; each cell pools its
    // replications into mean and sample standard deviation.
    using RowKey = std::pair<int, std::int64_t>;
    std::map<RowKey, std::map<double, std::vector<double>>> table;
    std::set<double> probs;
    for (const CellResult& cell : cells) {
        const RowKey key{static_cast<int>(cell.config.scheme),
                         cell.config.scheme == Scheme::FedAvg ? -1 : cell.config.n_groups};
        probs.insert(cell.config.charge_prob);
        table[key][cell.config.charge_prob].push_back(static_cast<double>(cell.total_energy));
    }

    std::string out = "scheme,n_groups";
    for (const double p : probs) {
        out += ",p" + format_num(p) + "_mean,p" + format_num(p) + "_std";
    }
    out += "\n";
    for (const auto& [key, row] : table) {
        out += to_string(static_cast<Scheme>(key.first));
        out += ",";
        out += key.second < 0 ? std::string("-") : std::to_string(key.second);
        for (const double p : probs) {
            const auto it = row.find(p);
            if (it == row.end() || it->second.empty()) {
                out += ",NA,NA";  // a hole in the sweep stays visible
                continue;
            }
            const std::vector<double>& xs = it->second;
            const double mean =
                std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            double var = 0.0;
            for (const double x : xs) {
                var += (x - mean) * (x - mean);
            }
            const double sd =
                xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            char buf[80];
            std::snprintf(buf, sizeof buf, ",%.1f,%.1f", mean, sd);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace ehfl
