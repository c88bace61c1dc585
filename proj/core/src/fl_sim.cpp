#include <fedcert/fl_sim.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedcert {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double dot(const Update& a, const Update& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Update& a) { return std::sqrt(dot(a, a)); }

// Softmax probabilities of W x + b, computed against the max logit.
void softmax_probs(const Model& m, std::span<const double> x, std::vector<double>& probs) {
  const int L = m.num_classes;
  probs.assign(L, 0.0);
  for (int l = 0; l < L; ++l) {
    double z = m.bias[l];
    const double* w = m.weights.data() + static_cast<std::size_t>(l) * m.dims;
    for (std::size_t j = 0; j < m.dims; ++j) z += w[j] * x[j];
    probs[l] = z;
  }
  const double zmax = *std::max_element(probs.begin(), probs.end());
  double sum = 0.0;
  for (int l = 0; l < L; ++l) {
    probs[l] = std::exp(probs[l] - zmax);
    sum += probs[l];
  }
  for (int l = 0; l < L; ++l) probs[l] /= sum;
}

}  // namespace

Model Model::zeros(int num_classes, std::size_t dims) {
  require(num_classes >= 2, "model: need at least two classes");
  require(dims >= 1, "model: need at least one dimension");
  Model m;
  m.num_classes = num_classes;
  m.dims = dims;
  m.weights.assign(static_cast<std::size_t>(num_classes) * dims, 0.0);
  m.bias.assign(num_classes, 0.0);
  return m;
}

void Model::apply_delta(std::span<const double> delta) {
  require(delta.size() == param_count(), "model: delta dimension mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += delta[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += delta[weights.size() + i];
}

std::string to_string(AggRule r) {
  switch (r) {
    case AggRule::FedAvg: return "fedavg";
    case AggRule::Krum: return "krum";
    case AggRule::TrimmedMean: return "trimmed_mean";
    case AggRule::Median: return "median";
    case AggRule::FLTrust: return "fltrust";
  }
  throw std::logic_error("aggregation rule: unknown tag");
}

AggRule agg_rule_from_string(const std::string& s) {
  if (s == "fedavg") return AggRule::FedAvg;
  if (s == "krum") return AggRule::Krum;
  if (s == "trimmed_mean") return AggRule::TrimmedMean;
  if (s == "median") return AggRule::Median;
  if (s == "fltrust") return AggRule::FLTrust;
  throw std::invalid_argument("aggregation rule: unknown name \"" + s + "\"");
}

void TrainConfig::validate() const {
  require(global_iters >= 1, "train config: need global_iters >= 1");
  require(local_iters >= 1, "train config: need local_iters >= 1");
  // Zero is allowed so a no-movement run stays expressible.
  require(learning_rate >= 0.0 && std::isfinite(learning_rate),
          "train config: need learning_rate >= 0");
  require(batch_size >= 1, "train config: need batch_size >= 1");
  require(client_fraction > 0.0 && client_fraction <= 1.0,
          "train config: need client_fraction in (0,1]");
  require(krum_f >= 0, "train config: need krum_f >= 0");
  require(trim >= 0, "train config: need trim >= 0");
}

int predict(const Model& m, std::span<const double> x) {
  require(x.size() == m.dims, "predict: dimension mismatch");
  int best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < m.num_classes; ++l) {
    double z = m.bias[l];
    const double* w = m.weights.data() + static_cast<std::size_t>(l) * m.dims;
    for (std::size_t j = 0; j < m.dims; ++j) z += w[j] * x[j];
    if (z > best_z) {
      best_z = z;
      best = l;
    }
  }
  return best;
}

double batch_loss(const Model& m, const Dataset& data, std::span<const std::size_t> idx) {
  require(data.dims == m.dims && data.num_classes == m.num_classes, "batch_loss: shape mismatch");
  require(!idx.empty(), "batch_loss: empty batch");
  std::vector<double> probs;
  double loss = 0.0;
  for (std::size_t i : idx) {
    require(i < data.size(), "batch_loss: index out of range");
    softmax_probs(m, data.row(i), probs);
    loss -= std::log(std::max(probs[data.labels[i]], 1e-300));
  }
  return loss / static_cast<double>(idx.size());
}

Update batch_gradient(const Model& m, const Dataset& data, std::span<const std::size_t> idx) {
  require(data.dims == m.dims && data.num_classes == m.num_classes, "batch_gradient: shape mismatch");
  require(!idx.empty(), "batch_gradient: empty batch");
  Update grad(m.param_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(idx.size());
  std::vector<double> probs;
  for (std::size_t i : idx) {
    require(i < data.size(), "batch_gradient: index out of range");
    const auto x = data.row(i);
    softmax_probs(m, x, probs);
    for (int l = 0; l < m.num_classes; ++l) {
      const double g = (probs[l] - (l == data.labels[i] ? 1.0 : 0.0)) * inv;
      double* gw = grad.data() + static_cast<std::size_t>(l) * m.dims;
      for (std::size_t j = 0; j < m.dims; ++j) gw[j] += g * x[j];
      grad[m.weights.size() + l] += g;
    }
  }
  return grad;
}

Update local_update(const Model& start, const Dataset& data,
                    const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  Update delta(start.param_count(), 0.0);
  if (data.size() == 0 || cfg.learning_rate == 0.0) return delta;
  Model m = start;
  std::vector<std::size_t> batch(cfg.batch_size);
  for (int step = 0; step < cfg.local_iters; ++step) {
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      batch[b] = static_cast<std::size_t>(rng.next_below(data.size()));
    }
    const Update grad = batch_gradient(m, data, batch);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double upd = -cfg.learning_rate * grad[i];
      if (i < m.weights.size()) {
        m.weights[i] += upd;
      } else {
        m.bias[i - m.weights.size()] += upd;
      }
    }
  }
  for (std::size_t i = 0; i < m.weights.size(); ++i) delta[i] = m.weights[i] - start.weights[i];
  for (std::size_t i = 0; i < m.bias.size(); ++i) {
    delta[m.weights.size() + i] = m.bias[i] - start.bias[i];
  }
  return delta;
}

Update aggregate(AggRule rule, const std::vector<Update>& updates, const AggContext& ctx) {
  require(!updates.empty(), "aggregate: no updates");
  const std::size_t dim = updates.front().size();
  for (const auto& u : updates) {
    require(u.size() == dim, "aggregate: update dimension mismatch");
  }
  const std::size_t count = updates.size();

  switch (rule) {
    case AggRule::FedAvg: {
      Update out(dim, 0.0);
      for (const auto& u : updates) {
        for (std::size_t i = 0; i < dim; ++i) out[i] += u[i];
      }
      for (double& v : out) v /= static_cast<double>(count);
      return out;
    }

    case AggRule::Krum: {
      const int f = ctx.krum_f;
      require(f >= 0, "aggregate: need krum_f >= 0");
      require(count >= static_cast<std::size_t>(f) + 3, "aggregate: krum needs count >= f + 3");
      const std::size_t neighbors = count - static_cast<std::size_t>(f) - 2;
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      std::vector<double> dists;
      for (std::size_t i = 0; i < count; ++i) {
        dists.clear();
        for (std::size_t j = 0; j < count; ++j) {
          if (j == i) continue;
          double d2 = 0.0;
          for (std::size_t c = 0; c < dim; ++c) {
            const double diff = updates[i][c] - updates[j][c];
            d2 += diff * diff;
          }
          dists.push_back(d2);
        }
        std::sort(dists.begin(), dists.end());
        double score = 0.0;
        for (std::size_t c = 0; c < neighbors; ++c) score += dists[c];
        if (score < best_score) {  // strict: ties keep the lowest index
          best_score = score;
          best = i;
        }
      }
      return updates[best];
    }

    case AggRule::TrimmedMean: {
      const int trim = ctx.trim;
      require(trim >= 0, "aggregate: need trim >= 0");
      require(count > 2 * static_cast<std::size_t>(trim), "aggregate: trimmed mean needs count > 2*trim");
      Update out(dim, 0.0);
      std::vector<double> col(count);
      const std::size_t keep = count - 2 * static_cast<std::size_t>(trim);
      for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < count; ++i) col[i] = updates[i][c];
        std::sort(col.begin(), col.end());
        double s = 0.0;
        for (std::size_t i = static_cast<std::size_t>(trim); i < count - trim; ++i) s += col[i];
        out[c] = s / static_cast<double>(keep);
      }
      return out;
    }

    case AggRule::Median: {
      Update out(dim, 0.0);
      std::vector<double> col(count);
      for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < count; ++i) col[i] = updates[i][c];
        std::sort(col.begin(), col.end());
        out[c] = (count % 2 == 1) ? col[count / 2]
                                  : 0.5 * (col[count / 2 - 1] + col[count / 2]);
      }
      return out;
    }

    case AggRule::FLTrust: {
      require(ctx.server_update != nullptr, "aggregate: fltrust needs a server update");
      const Update& s = *ctx.server_update;
      require(s.size() == dim, "aggregate: server update dimension mismatch");
      const double s_norm = norm(s);
      Update out(dim, 0.0);
      if (s_norm == 0.0) return out;
      double trust_sum = 0.0;
      for (const auto& u : updates) {
        const double u_norm = norm(u);
        if (u_norm == 0.0) continue;
        const double trust = std::max(dot(u, s) / (u_norm * s_norm), 0.0);
        if (trust == 0.0) continue;
        const double scale = trust * s_norm / u_norm;
        for (std::size_t i = 0; i < dim; ++i) out[i] += scale * u[i];
        trust_sum += trust;
      }
      if (trust_sum == 0.0) return Update(dim, 0.0);
      for (double& v : out) v /= trust_sum;
      return out;
    }
  }
  throw std::logic_error("aggregate: unknown rule");
}

Model train_global(const std::vector<std::size_t>& group,
                   const std::vector<Dataset>& client_data,
                   const TrainConfig& cfg, std::size_t group_index,
                   const Dataset* server_data, const RoundHook& hook) {
  cfg.validate();
  require(!client_data.empty(), "train_global: no client datasets");
  const int L = client_data.front().num_classes;
  const std::size_t d = client_data.front().dims;
  Model model = Model::zeros(L, d);
  if (group.empty()) return model;
  for (std::size_t c : group) {
    require(c < client_data.size(), "train_global: group member out of range");
  }
  if (cfg.rule == AggRule::FLTrust) {
    require(server_data != nullptr, "train_global: fltrust needs a server dataset");
    require(server_data->size() > 0, "train_global: fltrust server dataset is empty");
  }

  Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(group_index));
  const std::size_t sel_count = static_cast<std::size_t>(
      std::ceil(cfg.client_fraction * static_cast<double>(group.size())));

  std::vector<std::size_t> pool;
  std::vector<std::size_t> selected;
  std::vector<Update> updates;
  for (int round = 0; round < cfg.global_iters; ++round) {
    if (sel_count >= group.size()) {
      selected = group;
    } else {
      pool = group;
      selected.assign(sel_count, 0);
      for (std::size_t i = 0; i < sel_count; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        selected[i] = pool[i];
      }
    }
    std::sort(selected.begin(), selected.end());  // fixed summation order downstream

    updates.clear();
    updates.reserve(selected.size());
    for (std::size_t c : selected) {
      updates.push_back(local_update(model, client_data[c], cfg, rng));
    }
    if (hook) hook(round, selected, updates);

    AggContext ctx;
    ctx.krum_f = cfg.krum_f;
    ctx.trim = cfg.trim;
    Update server_upd;
    if (cfg.rule == AggRule::FLTrust) {
      server_upd = local_update(model, *server_data, cfg, rng);
      ctx.server_update = &server_upd;
    }
    model.apply_delta(aggregate(cfg.rule, updates, ctx));
  }
  return model;
}

}  // namespace fedcert
