#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "baca/dictionary.hpp"
#include "baca/encoder.hpp"
#include "baca/rng.hpp"

namespace baca {

/// One attention head: d x d projections plus the scalar readout vector.
/// Also used as the container for gradients of the same shape.
struct CalibratorParams {
  Eigen::MatrixXd w_q;
  Eigen::MatrixXd w_k;
  Eigen::MatrixXd w_v;
  Eigen::VectorXd readout;

  static CalibratorParams zeros(int d);
  // scale * I + Uniform(-noise, noise) projections, zero readout.
  static CalibratorParams initial(int d, Rng& rng, double scale = 1.0, double noise = 0.01);

  int dim() const noexcept { return static_cast<int>(w_q.rows()); }
  bool all_finite() const;

  // Flat view used by optimizers and finite-difference checks.
  std::size_t num_values() const;
  double& at(std::size_t i);
  double at(std::size_t i) const;

  void add_scaled(double alpha, const CalibratorParams& other);
};

/// sigmoid(readout . softmax(q W_Q (K W_K)^T / sqrt(d)) (K W_V)); keys are rows.
double attn_forward(const CalibratorParams& p, const Embedding& q, const Eigen::MatrixXd& keys);

// Forward pass plus backpropagation of `upstream` (dL/d output); gradients are
// accumulated into `grad`. Returns the forward value.
double attn_backward(const CalibratorParams& p, const Embedding& q, const Eigen::MatrixXd& keys,
                     double upstream, CalibratorParams& grad);

Eigen::MatrixXd stack_keys(std::span<const DictEntry* const> entries);

// Attention over the k most cosine-similar dictionary keys. `exclude` drops
// the query's own stored entry, mirroring the leave-self-out used in training.
double s_out(const CalibratorParams& p_out, const Embedding& q, const BoundaryDict& ood_dict,
             std::size_t k, std::optional<std::uint64_t> exclude = {});
double s_in(const CalibratorParams& p_in, const Embedding& q, const BoundaryDict& id_dict,
            std::size_t k, std::optional<std::uint64_t> exclude = {});

// Min-max rescale to [0,1]; a constant input maps to 0.5 everywhere.
std::vector<double> minmax_normalize(std::span<const double> values);

// minmax(s_pre) + beta * s_attn.
std::vector<double> fuse(std::span<const double> s_pre, std::span<const double> s_attn, double beta);

inline constexpr double kProbabilityClamp = 1e-7;

/// Training queries with their retrieved key sets, fixed for a dictionary state.
struct CalibrationQuery {
  Embedding q;
  Eigen::MatrixXd id_keys;
  Eigen::MatrixXd ood_keys;
  Polarity label;
};

struct CalibrationSet {
  std::vector<CalibrationQuery> queries;
  std::size_t num_id = 0;
  std::size_t num_ood = 0;
};

// Every dictionary entry becomes a query labelled with its dictionary's
// polarity. When querying its own dictionary an entry is left out, unless it
// is that dictionary's only entry.
CalibrationSet build_calibration_set(const BoundaryDict& id_dict, const BoundaryDict& ood_dict,
                                     std::size_t k);

struct LossAndGrads {
  double loss = 0.0;
  CalibratorParams grad_in;
  CalibratorParams grad_out;
};

// Dual binary cross-entropy:
//   -E_id [log A_in + log(1 - A_out)] - E_ood [log(1 - A_in) + log A_out]
// with attention outputs clamped to [1e-7, 1 - 1e-7].
LossAndGrads loss_and_grads(const CalibratorParams& p_in, const CalibratorParams& p_out,
                            const CalibrationSet& set);
double loss_only(const CalibratorParams& p_in, const CalibratorParams& p_out,
                 const CalibrationSet& set);

struct TrainOptions {
  std::size_t iters = 200;
  double lr = 0.01;
  std::size_t k = 5;
};

// Full-batch plain gradient descent on both heads.
// Returns the loss before each update.
// Throws RuntimeError naming the iteration when the loss becomes non-finite.
std::vector<double> train(CalibratorParams& p_in, CalibratorParams& p_out,
                          const BoundaryDict& id_dict, const BoundaryDict& ood_dict,
                          const TrainOptions& opts);

}  // namespace baca
