#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "baca/calibration.hpp"
#include "baca/dictionary.hpp"
#include "baca/encoder.hpp"
#include "baca/evaluation.hpp"
#include "baca/graph.hpp"
#include "baca/graphon.hpp"
#include "baca/rng.hpp"

namespace baca {

struct PipelineConfig {
  std::size_t k = 5;
  double beta = 0.5;
  double lr = 0.01;
  std::size_t iters = 200;
  std::size_t queue_size = 64;
  std::size_t bank_size = 64;
  double lambda_lo = 0.01;
  double lambda_hi = 1.0;
  std::size_t num_mixups = 64;
  std::optional<int> graphon_resolution;  // empty = median subgroup size in [8, 64]
  double partition_quantile = 0.5;
  double usvt_c = 0.2;
  std::uint64_t seed = 0;
  TailMode tail_mode = TailMode::boundary;
  std::size_t batch_size = 0;      // 0 = whole dataset as one batch
  bool continue_training = true;   // streaming: keep heads across batches
  bool standardize_embeddings = true;
  InfoNceOptions infonce;

  void validate() const;
  // Applies one `key=value` setting; throws ValidationError on unknown keys.
  void set(const std::string& key, const std::string& value);
};

// Flat key=value lines; '#' starts a comment.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

struct Partition {
  std::vector<std::size_t> id;
  std::vector<std::size_t> ood;
};

// Scores <= the q-quantile go to ID, the rest to OOD. An all-equal batch is
// split by index parity; other ties that empty one side fall back to a rank split.
Partition partition(std::span<const double> scores, double q = 0.5);

// Two random shards, one graphon each, num_mixups mixed-graphon samples.
std::vector<Graph> augment_subgroup(std::span<const Graph> graphs, const PipelineConfig& cfg,
                                    Rng& rng, int feature_dim);

struct RunResult {
  std::vector<ScoreRecord> records;
  std::optional<EvalReport> report;
  std::vector<double> loss_trajectory;  // concatenated over batches
  std::size_t num_synthetic = 0;
  BoundaryDict id_dict{Polarity::id, 0, 0};
  BoundaryDict ood_dict{Polarity::ood, 0, 0};
  CalibratorParams head_in;
  CalibratorParams head_out;
  // Whole-subgroup graphons of the first batch, for heatmap export.
  std::optional<Graphon> id_graphon;
  std::optional<Graphon> ood_graphon;
};

RunResult run_baca(const PipelineConfig& cfg, const EncoderWeights& encoder,
                   const GraphDataset& data);
RunResult run_baca(const PipelineConfig& cfg, const std::filesystem::path& encoder_path,
                   const std::filesystem::path& data_path);

// Wraps module errors with the pipeline stage that raised them.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool validation)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)),
        validation_(validation) {}
  const std::string& stage() const noexcept { return stage_; }
  bool is_validation() const noexcept { return validation_; }

 private:
  std::string stage_;
  bool validation_;
};

}  // namespace baca
