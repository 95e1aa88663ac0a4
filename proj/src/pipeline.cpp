#include "baca/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "baca/error.hpp"
#include "baca/graphon.hpp"

namespace baca {

void PipelineConfig::validate() const {
  if (k < 1) throw ValidationError("config: k must be >= 1");
  if (!(beta >= 0.0)) throw ValidationError("config: beta must be >= 0");
  if (!(lr >= 0.0)) throw ValidationError("config: lr must be >= 0");
  if (iters < 1) throw ValidationError("config: iters must be >= 1");
  if (queue_size < 1) throw ValidationError("config: queue_size must be >= 1");
  if (!(lambda_lo >= 0.0 && lambda_lo <= lambda_hi && lambda_hi <= 1.0)) {
    throw ValidationError("config: need 0 <= lambda_lo <= lambda_hi <= 1");
  }
  if (!(partition_quantile > 0.0 && partition_quantile < 1.0)) {
    throw ValidationError("config: partition_quantile must lie in (0,1)");
  }
  if (graphon_resolution && *graphon_resolution < 2) {
    throw ValidationError("config: graphon_resolution must be >= 2");
  }
  if (!(usvt_c >= 0.0)) throw ValidationError("config: usvt_c must be >= 0");
  if (batch_size == 1) throw ValidationError("config: batch_size must be 0 or >= 2");
  if (!(infonce.drop_rate >= 0.0 && infonce.drop_rate < 1.0)) {
    throw ValidationError("config: edge drop rate must lie in [0,1)");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config: " + key + " expects a number, got '" + v + "'");
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const auto n = std::stoull(v, &used);
      if (used == v.size()) return n;
    }
  } catch (const std::exception&) {
  }
  throw ValidationError("config: " + key + " expects a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

void PipelineConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "k") k = to_count(key, v);
  else if (key == "beta") beta = to_double(key, v);
  else if (key == "lr") lr = to_double(key, v);
  else if (key == "iters") iters = to_count(key, v);
  else if (key == "queue_size") queue_size = to_count(key, v);
  else if (key == "bank_size") bank_size = to_count(key, v);
  else if (key == "lambda_lo") lambda_lo = to_double(key, v);
  else if (key == "lambda_hi") lambda_hi = to_double(key, v);
  else if (key == "lambda_range") {
    const auto colon = v.find(':');
    if (colon == std::string::npos) throw ValidationError("config: lambda_range expects lo:hi");
    lambda_lo = to_double(key, trim(v.substr(0, colon)));
    lambda_hi = to_double(key, trim(v.substr(colon + 1)));
  } else if (key == "num_mixups") num_mixups = to_count(key, v);
  else if (key == "graphon_resolution") {
    if (v == "auto") graphon_resolution.reset();
    else graphon_resolution = static_cast<int>(to_count(key, v));
  } else if (key == "partition_quantile") partition_quantile = to_double(key, v);
  else if (key == "usvt_c") usvt_c = to_double(key, v);
  else if (key == "seed") seed = to_count(key, v);
  else if (key == "tail_mode") tail_mode = parse_tail_mode(v);
  else if (key == "batch_size") batch_size = to_count(key, v);
  else if (key == "continue_training") continue_training = to_bool(key, v);
  else if (key == "standardize_embeddings") standardize_embeddings = to_bool(key, v);
  else if (key == "drop_rate") infonce.drop_rate = to_double(key, v);
  else if (key == "temperature") infonce.temperature = to_double(key, v);
  else throw ValidationError("config: unknown key '" + key + "'");
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    try {
      base.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ValidationError& err) {
      throw ParseError(line_no, err.what());
    }
  }
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  return parse_config(in, std::move(base));
}

Partition partition(std::span<const double> scores, double q) {
  if (scores.empty()) throw ValidationError("partition: empty score list");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("partition: quantile must lie in (0,1)");
  const std::size_t n = scores.size();
  Partition out;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) {
    for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? out.id : out.ood).push_back(i);
    return out;
  }
  // Linear-interpolation quantile of the sorted scores.
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(n - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, n - 1);
  const double tau = sorted[below] + (pos - static_cast<double>(below)) * (sorted[above] - sorted[below]);
  for (std::size_t i = 0; i < n; ++i) (scores[i] <= tau ? out.id : out.ood).push_back(i);
  if (out.id.empty() || out.ood.empty()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    const auto n_id = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(q * static_cast<double>(n))), 1, n - 1);
    out.id.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_id));
    out.ood.assign(order.begin() + static_cast<std::ptrdiff_t>(n_id), order.end());
    std::sort(out.id.begin(), out.id.end());
    std::sort(out.ood.begin(), out.ood.end());
  }
  return out;
}

std::vector<Graph> augment_subgroup(std::span<const Graph> graphs, const PipelineConfig& cfg,
                                    Rng& rng, int feature_dim) {
  if (graphs.empty()) throw ValidationError("augment_subgroup: empty subgroup");
  if (cfg.num_mixups == 0) return {};
  const int resolution = cfg.graphon_resolution.value_or(default_resolution(graphs));

  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Graph> shard_a, shard_b;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i % 2 == 0 ? shard_a : shard_b).push_back(graphs[order[i]]);
  }
  const Graphon w_a = estimate_graphon(shard_a, resolution, cfg.usvt_c);
  const Graphon w_b = shard_b.empty() ? w_a : estimate_graphon(shard_b, resolution, cfg.usvt_c);

  std::uniform_real_distribution<double> lambda_dist(cfg.lambda_lo, cfg.lambda_hi);
  std::vector<Graph> out;
  out.reserve(cfg.num_mixups);
  for (std::size_t m = 0; m < cfg.num_mixups; ++m) {
    const double lambda = cfg.lambda_lo == cfg.lambda_hi ? cfg.lambda_lo : lambda_dist(rng);
    const Graphon w_s = mixup(w_a, w_b, lambda);
    const int r = random_size(resolution, rng);
    out.push_back(sample_graph(w_s, r, rng, feature_dim));
  }
  return out;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& err) {
    throw StageError(name, err.what(), true);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& err) {
    throw StageError(name, err.what(), false);
  }
}

// Per-coordinate z-scoring with statistics frozen from the first batch.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  static Standardizer fit(std::span<const Embedding> xs) {
    const auto d = xs.front().size();
    Standardizer s{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
    for (const auto& x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) var += (x - s.mean).cwiseAbs2();
    var /= static_cast<double>(xs.size());
    for (Eigen::Index i = 0; i < d; ++i) {
      const double sd = std::sqrt(var(i));
      s.inv_std(i) = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
  }

  Embedding apply(const Embedding& x) const { return (x - mean).cwiseProduct(inv_std); }
};

// Mean score of the k most cosine-similar reference embeddings.
double neighbor_score(const Embedding& q, std::span<const Embedding> refs,
                      std::span<const double> ref_scores, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> sims;
  sims.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) sims.emplace_back(cosine_similarity(q, refs[i]), i);
  const std::size_t take = std::min(k, sims.size());
  std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += ref_scores[sims[i].second];
  return sum / static_cast<double>(take);
}

}  // namespace

RunResult run_baca(const PipelineConfig& cfg, const EncoderWeights& encoder,
                   const GraphDataset& data) {
  stage("config", [&] {
    cfg.validate();
    data.validate();
    if (data.size() < 2) throw ValidationError("need at least 2 test graphs");
    return 0;
  });
  const int feature_dim = encoder.input_dim();
  const std::size_t n = data.size();
  const std::size_t batch_size = cfg.batch_size == 0 ? n : cfg.batch_size;

  RunResult res;
  res.id_dict = BoundaryDict(Polarity::id, cfg.queue_size, cfg.bank_size, cfg.tail_mode);
  res.ood_dict = BoundaryDict(Polarity::ood, cfg.queue_size, cfg.bank_size, cfg.tail_mode);
  res.records.resize(n);

  const std::vector<Embedding> raw = stage("embed", [&] { return embed_all(encoder, data.graphs); });
  std::optional<Standardizer> standardizer;
  Rng head_rng = make_rng(cfg.seed, 0x4ead);
  const int d = encoder.embedding_dim();
  res.head_in = CalibratorParams::initial(d, head_rng);
  res.head_out = CalibratorParams::initial(d, head_rng);
  const CalibratorParams fresh_in = res.head_in;
  const CalibratorParams fresh_out = res.head_out;

  std::size_t batch_no = 0;
  for (std::size_t begin = 0; begin < n; begin += batch_size, ++batch_no) {
    std::size_t end = std::min(n, begin + batch_size);
    // A trailing batch of one graph joins the previous batch's scoring pass.
    if (n - end == 1) end = n;
    std::vector<std::size_t> batch(end - begin);
    std::iota(batch.begin(), batch.end(), begin);
    const std::uint64_t batch_seed = mix_seed(cfg.seed, batch_no);

    // (1) pretrain scores
    InfoNceOptions nce = cfg.infonce;
    nce.seed = mix_seed(batch_seed, 1);
    const std::vector<double> s_pre =
        stage("pretrain-score", [&] { return pretrain_score(encoder, data, batch, nce); });

    if (!standardizer) {
      std::vector<Embedding> first(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) first[i] = raw[batch[i]];
      standardizer = cfg.standardize_embeddings
                         ? Standardizer::fit(first)
                         : Standardizer{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
    }
    std::vector<Embedding> keys(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) keys[i] = standardizer->apply(raw[batch[i]]);

    // (2) partition on S_Pre
    const Partition parts = stage("partition", [&] { return partition(s_pre, cfg.partition_quantile); });

    if (batch_no == 0) {
      stage("graphon", [&] {
        auto estimate = [&](const std::vector<std::size_t>& members) {
          std::vector<Graph> sub;
          for (std::size_t i : members) sub.push_back(data.graphs[batch[i]]);
          return estimate_graphon(sub, cfg.graphon_resolution.value_or(default_resolution(sub)),
                                  cfg.usvt_c);
        };
        res.id_graphon = estimate(parts.id);
        res.ood_graphon = estimate(parts.ood);
        return 0;
      });
    }

    // (3)+(4) graphon mixup per subgroup, embed and score the synthetic graphs
    Rng aug_rng = make_rng(batch_seed, 2);
    struct Synthetic {
      std::vector<Embedding> keys;
      std::vector<double> scores;
    };
    auto augment = [&](const std::vector<std::size_t>& members) {
      std::vector<Graph> sub;
      sub.reserve(members.size());
      for (std::size_t i : members) sub.push_back(data.graphs[batch[i]]);
      const std::vector<Graph> synth =
          stage("augment", [&] { return augment_subgroup(sub, cfg, aug_rng, feature_dim); });
      Synthetic out;
      if (synth.empty()) return out;
      const auto synth_raw = stage("embed", [&] { return embed_all(encoder, synth); });
      for (const auto& e : synth_raw) out.keys.push_back(standardizer->apply(e));
      out.scores = stage("pretrain-score", [&] {
        if (data.precomputed_scores) {
          std::vector<double> scores;
          // Transfer from the subgroup the synthetic graph was generated from.
          std::vector<Embedding> ref_keys;
          std::vector<double> ref_scores;
          for (std::size_t i : members) {
            ref_keys.push_back(keys[i]);
            ref_scores.push_back(s_pre[i]);
          }
          for (const auto& key : out.keys) {
            scores.push_back(neighbor_score(key, ref_keys, ref_scores, cfg.k));
          }
          return scores;
        }
        // Same InfoNCE path as the real graphs, with the batch as negatives.
        std::vector<Graph> joint;
        for (std::size_t i : batch) joint.push_back(data.graphs[i]);
        joint.insert(joint.end(), synth.begin(), synth.end());
        const auto all = infonce_scores(encoder, joint, nce);
        return std::vector<double>(all.begin() + static_cast<std::ptrdiff_t>(batch.size()), all.end());
      });
      return out;
    };
    const Synthetic synth_id = augment(parts.id);
    const Synthetic synth_ood = augment(parts.ood);
    res.num_synthetic += synth_id.keys.size() + synth_ood.keys.size();

    // (5) memory banks from the first batch, queues offered everything else
    // Sequence number of each batch graph's own stored entry, per dictionary.
    std::vector<std::optional<std::uint64_t>> id_seq(batch.size()), ood_seq(batch.size());
    stage("dictionary", [&] {
      auto fill = [&](BoundaryDict& dict, const std::vector<std::size_t>& members,
                      const Synthetic& synth) {
        auto& own_seq = dict.polarity() == Polarity::id ? id_seq : ood_seq;
        std::vector<std::size_t> offered = members;
        if (!dict.bank_frozen()) {
          // Bank: the most confident members (lowest scores for ID, highest for OOD).
          std::vector<std::size_t> ranked = members;
          std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            return dict.polarity() == Polarity::id ? s_pre[a] < s_pre[b] : s_pre[a] > s_pre[b];
          });
          // Keep at least one member for the queue.
          const std::size_t take = std::min(dict.bank_capacity(), ranked.size() > 1 ? ranked.size() - 1 : 0);
          std::vector<DictEntry> bank;
          for (std::size_t i = 0; i < take; ++i) {
            own_seq[ranked[i]] = dict.next_seq() + i;
            bank.push_back({keys[ranked[i]], s_pre[ranked[i]], Origin::real, 0});
          }
          dict.freeze_memory_bank(std::move(bank));
          offered.assign(ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
          std::sort(offered.begin(), offered.end());
        }
        for (std::size_t i : offered) {
          const std::uint64_t seq = dict.next_seq();
          if (dict.try_insert({keys[i], s_pre[i], Origin::real, 0})) own_seq[i] = seq;
        }
        for (std::size_t s = 0; s < synth.keys.size(); ++s) {
          dict.try_insert({synth.keys[s], synth.scores[s], Origin::synthetic, 0});
        }
      };
      fill(res.id_dict, parts.id, synth_id);
      fill(res.ood_dict, parts.ood, synth_ood);
      return 0;
    });

    // (6) test-time training of both attention heads
    if (!cfg.continue_training) {
      res.head_in = fresh_in;
      res.head_out = fresh_out;
    }
    const auto losses = stage("train", [&] {
      return train(res.head_in, res.head_out, res.id_dict, res.ood_dict,
                   TrainOptions{cfg.iters, cfg.lr, cfg.k});
    });
    res.loss_trajectory.insert(res.loss_trajectory.end(), losses.begin(), losses.end());

    // (7) calibrated scores for the batch
    stage("score", [&] {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        ScoreRecord& r = res.records[batch[i]];
        r.s_pre = s_pre[i];
        r.s_in = s_in(res.head_in, keys[i], res.id_dict, cfg.k, id_seq[i]);
        r.s_out = s_out(res.head_out, keys[i], res.ood_dict, cfg.k, ood_seq[i]);
        r.s_attn = r.s_in + r.s_out;
        if (data.labels) r.label = (*data.labels)[batch[i]];
      }
      return 0;
    });
    if (end == n) break;
  }

  // (8) fusion over the evaluation set and metrics
  stage("evaluate", [&] {
    std::vector<double> pre(n), attn(n);
    for (std::size_t i = 0; i < n; ++i) {
      pre[i] = res.records[i].s_pre;
      attn[i] = res.records[i].s_attn;
    }
    const auto fused = fuse(pre, attn, cfg.beta);
    for (std::size_t i = 0; i < n; ++i) res.records[i].s_baca = fused[i];
    if (data.labels) res.report = evaluate(res.records);
    return 0;
  });
  return res;
}

RunResult run_baca(const PipelineConfig& cfg, const std::filesystem::path& encoder_path,
                   const std::filesystem::path& data_path) {
  const EncoderWeights encoder = stage("load-encoder", [&] { return load_encoder(encoder_path); });
  const GraphDataset data = stage("load-dataset", [&] { return load_dataset(data_path); });
  return run_baca(cfg, encoder, data);
}

}  // namespace baca
