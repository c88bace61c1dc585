#pragma once

#include <fedcert/dataset.hpp>
#include <fedcert/rng.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fedcert {

// Linear softmax classifier: logits = W x + b, W row-major L x d.
struct Model {
  int num_classes = 0;
  std::size_t dims = 0;
  std::vector<double> weights;  // L * d
  std::vector<double> bias;     // L

  static Model zeros(int num_classes, std::size_t dims);
  std::size_t param_count() const { return weights.size() + bias.size(); }
  void apply_delta(std::span<const double> delta);
};

// Flat parameter delta: weights row-major, then bias.
using Update = std::vector<double>;

enum class AggRule { FedAvg, Krum, TrimmedMean, Median, FLTrust };
std::string to_string(AggRule r);
AggRule agg_rule_from_string(const std::string& s);

struct TrainConfig {
  int global_iters = 100;        // aggregation rounds
  int local_iters = 5;           // SGD steps per selected client per round
  double learning_rate = 0.1;
  std::size_t batch_size = 32;   // draws are with replacement
  double client_fraction = 1.0;  // fraction of the group selected per round
  AggRule rule = AggRule::FedAvg;
  int krum_f = 1;
  int trim = 1;
  std::uint64_t seed = 0;
  void validate() const;
};

// argmax of the logits, lowest index on ties.
int predict(const Model& m, std::span<const double> x);

// Mean softmax cross-entropy over the given rows, and its parameter gradient.
// The gradient is computed analytically, not by differentiating batch_loss.
double batch_loss(const Model& m, const Dataset& data, std::span<const std::size_t> idx);
Update batch_gradient(const Model& m, const Dataset& data, std::span<const std::size_t> idx);

// local_iters minibatch SGD steps from `start`; returns the parameter delta.
// An empty dataset or a zero learning rate yields the zero update.
Update local_update(const Model& start, const Dataset& data,
                    const TrainConfig& cfg, Rng& rng);

struct AggContext {
  int krum_f = 1;
  int trim = 1;
  const Update* server_update = nullptr;  // required by FLTrust
};

// Combines one round's updates. FedAvg sums in index order (fixed summation
// order). Krum needs count >= f + 3 and scores each update by the sum of
// squared distances to its count-f-2 nearest peers, lowest index on ties.
// Trimmed mean needs count > 2*trim. Median averages the two middles on even
// counts. FLTrust weights by clipped cosine similarity to the server update,
// rescales each update to the server norm, and returns zero when every trust
// score is zero.
Update aggregate(AggRule rule, const std::vector<Update>& updates,
                 const AggContext& ctx = {});

// Invoked once per round after honest updates are computed; may rewrite them.
using RoundHook = std::function<void(int round,
                                     const std::vector<std::size_t>& selected,
                                     std::vector<Update>& updates)>;

// Trains one group model: zero init, then global_iters rounds of
// select-train-aggregate-apply. Selection takes ceil(client_fraction * size)
// distinct members. All randomness derives from (cfg.seed, group_index), so
// a group's model is a pure function of its own members' data and the config,
// independent of scheduling and of other groups. An empty group returns the
// zero model untouched.
Model train_global(const std::vector<std::size_t>& group,
                   const std::vector<Dataset>& client_data,
                   const TrainConfig& cfg, std::size_t group_index,
                   const Dataset* server_data = nullptr,
                   const RoundHook& hook = {});

}  // namespace fedcert
