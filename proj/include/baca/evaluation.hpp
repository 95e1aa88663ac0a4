#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace baca {

struct ScoreRecord {
  double s_pre = 0.0;
  double s_in = 0.0;
  double s_out = 0.0;
  double s_attn = 0.0;
  double s_baca = 0.0;
  std::optional<int> label;
};

struct EvalReport {
  double auc_pre = 0.0;
  double auc_baca = 0.0;
  double kl_pre = 0.0;
  double kl_baca = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  std::string kl_direction = "KL(OOD || ID)";

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Mann-Whitney AUC: P(score_ood > score_id) + 0.5 P(tie), with average ranks
// for ties. Label 1 marks OOD. Throws ValidationError if a class is missing.
double auc(std::span<const double> scores, std::span<const int> labels);

struct KlOptions {
  int bins = 50;
  double eps = 1e-8;
};

// KL(P_ood || P_id) between histograms over the shared [min, max] of both
// lists, with additive smoothing eps per bin before normalization.
double kl_divergence(std::span<const double> scores_id, std::span<const double> scores_ood,
                     const KlOptions& opts = {});

// Splits scores by label and applies kl_divergence.
double kl_by_label(std::span<const double> scores, std::span<const int> labels,
                   const KlOptions& opts = {});

// AUC and KL for s_pre and s_baca. All records must carry labels.
EvalReport evaluate(std::span<const ScoreRecord> records, const KlOptions& opts = {});

// CSV header `s_pre,s_in,s_out,s_attn,s_baca,label`, 17 significant digits.
void write_scores(std::span<const ScoreRecord> records, std::ostream& out);
void export_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path);
std::vector<ScoreRecord> read_scores(std::istream& in);
std::vector<ScoreRecord> load_scores(const std::filesystem::path& path);

}  // namespace baca
