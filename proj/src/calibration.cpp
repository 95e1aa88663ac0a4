#include "baca/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "baca/error.hpp"

namespace baca {

CalibratorParams CalibratorParams::zeros(int d) {
  return {Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d),
          Eigen::VectorXd::Zero(d)};
}

CalibratorParams CalibratorParams::initial(int d, Rng& rng, double scale, double noise) {
  std::uniform_real_distribution<double> u(-noise, noise);
  auto init = [&]() {
    Eigen::MatrixXd m = scale * Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) += u(rng);
    return m;
  };
  CalibratorParams p;
  p.w_q = init();
  p.w_k = init();
  p.w_v = init();
  p.readout = Eigen::VectorXd::Zero(d);
  return p;
}

bool CalibratorParams::all_finite() const {
  return w_q.allFinite() && w_k.allFinite() && w_v.allFinite() && readout.allFinite();
}

std::size_t CalibratorParams::num_values() const {
  return static_cast<std::size_t>(w_q.size() + w_k.size() + w_v.size() + readout.size());
}

double& CalibratorParams::at(std::size_t i) {
  auto idx = static_cast<Eigen::Index>(i);
  for (Eigen::MatrixXd* m : {&w_q, &w_k, &w_v}) {
    if (idx < m->size()) return m->data()[idx];
    idx -= m->size();
  }
  if (idx < readout.size()) return readout(idx);
  throw ValidationError("CalibratorParams::at: index out of range");
}

double CalibratorParams::at(std::size_t i) const { return const_cast<CalibratorParams&>(*this).at(i); }

void CalibratorParams::add_scaled(double alpha, const CalibratorParams& other) {
  w_q += alpha * other.w_q;
  w_k += alpha * other.w_k;
  w_v += alpha * other.w_v;
  readout += alpha * other.readout;
}

namespace {

struct AttnForward {
  Eigen::VectorXd query;      // W_Q^T q
  Eigen::MatrixXd proj_keys;  // keys W_K
  Eigen::MatrixXd values;     // keys W_V
  Eigen::VectorXd weights;    // softmax over keys
  Eigen::VectorXd pooled;     // values^T weights
  double output = 0.0;
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

AttnForward forward(const CalibratorParams& p, const Embedding& q, const Eigen::MatrixXd& keys) {
  const auto d = p.dim();
  if (keys.rows() == 0) throw ValidationError("attention: empty key set");
  if (q.size() != d || keys.cols() != d) {
    throw ValidationError("attention: dimension mismatch (params d=" + std::to_string(d) +
                          ", query " + std::to_string(q.size()) + ", keys " +
                          std::to_string(keys.cols()) + ")");
  }
  AttnForward f;
  f.query = p.w_q.transpose() * q;
  f.proj_keys = keys * p.w_k;
  f.values = keys * p.w_v;
  Eigen::VectorXd logits = f.proj_keys * f.query / std::sqrt(static_cast<double>(d));
  f.weights = (logits.array() - logits.maxCoeff()).exp();
  f.weights /= f.weights.sum();
  f.pooled = f.values.transpose() * f.weights;
  f.output = sigmoid(f.pooled.dot(p.readout));
  return f;
}

}  // namespace

double attn_forward(const CalibratorParams& p, const Embedding& q, const Eigen::MatrixXd& keys) {
  return forward(p, q, keys).output;
}

double attn_backward(const CalibratorParams& p, const Embedding& q, const Eigen::MatrixXd& keys,
                     double upstream, CalibratorParams& grad) {
  const AttnForward f = forward(p, q, keys);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.dim()));
  const double g_logit_out = upstream * f.output * (1.0 - f.output);
  grad.readout += g_logit_out * f.pooled;
  const Eigen::VectorXd g_pooled = g_logit_out * p.readout;
  const Eigen::VectorXd g_weights = f.values * g_pooled;
  const Eigen::VectorXd g_logits =
      f.weights.cwiseProduct((g_weights.array() - f.weights.dot(g_weights)).matrix());
  const Eigen::VectorXd g_query = inv_sqrt_d * (f.proj_keys.transpose() * g_logits);
  const Eigen::MatrixXd g_proj_keys = inv_sqrt_d * g_logits * f.query.transpose();
  const Eigen::MatrixXd g_values = f.weights * g_pooled.transpose();
  grad.w_q += q * g_query.transpose();
  grad.w_k += keys.transpose() * g_proj_keys;
  grad.w_v += keys.transpose() * g_values;
  return f.output;
}

Eigen::MatrixXd stack_keys(std::span<const DictEntry* const> entries) {
  if (entries.empty()) return {};
  Eigen::MatrixXd keys(static_cast<Eigen::Index>(entries.size()), entries.front()->key.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    keys.row(static_cast<Eigen::Index>(i)) = entries[i]->key.transpose();
  }
  return keys;
}

double s_out(const CalibratorParams& p_out, const Embedding& q, const BoundaryDict& ood_dict,
             std::size_t k, std::optional<std::uint64_t> exclude) {
  if (ood_dict.total_size() < 2) exclude.reset();
  const auto top = ood_dict.topk_entries(q, k, exclude);
  return attn_forward(p_out, q, stack_keys(top));
}

double s_in(const CalibratorParams& p_in, const Embedding& q, const BoundaryDict& id_dict,
            std::size_t k, std::optional<std::uint64_t> exclude) {
  if (id_dict.total_size() < 2) exclude.reset();
  const auto top = id_dict.topk_entries(q, k, exclude);
  return -attn_forward(p_in, q, stack_keys(top));
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
  return out;
}

std::vector<double> fuse(std::span<const double> s_pre, std::span<const double> s_attn, double beta) {
  if (s_pre.size() != s_attn.size()) {
    throw ValidationError("fuse: length mismatch (" + std::to_string(s_pre.size()) + " vs " +
                          std::to_string(s_attn.size()) + ")");
  }
  if (!(beta >= 0.0)) throw ValidationError("fuse: beta must be >= 0");
  std::vector<double> out = minmax_normalize(s_pre);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += beta * s_attn[i];
  return out;
}

CalibrationSet build_calibration_set(const BoundaryDict& id_dict, const BoundaryDict& ood_dict,
                                     std::size_t k) {
  if (id_dict.empty() || ood_dict.empty()) {
    throw ValidationError("calibration needs non-empty ID and OOD dictionaries");
  }
  CalibrationSet set;
  auto add = [&](const BoundaryDict& own, const BoundaryDict& other, Polarity label) {
    for (const DictEntry* e : own.all_entries()) {
      std::optional<std::uint64_t> exclude;
      if (own.total_size() > 1) exclude = e->seq;
      const auto own_top = own.topk_entries(e->key, k, exclude);
      const auto other_top = other.topk_entries(e->key, k);
      CalibrationQuery cq{e->key, {}, {}, label};
      if (label == Polarity::id) {
        cq.id_keys = stack_keys(own_top);
        cq.ood_keys = stack_keys(other_top);
      } else {
        cq.id_keys = stack_keys(other_top);
        cq.ood_keys = stack_keys(own_top);
      }
      set.queries.push_back(std::move(cq));
    }
  };
  add(id_dict, ood_dict, Polarity::id);
  add(ood_dict, id_dict, Polarity::ood);
  set.num_id = id_dict.total_size();
  set.num_ood = ood_dict.total_size();
  return set;
}

namespace {

// -log of the clamped probability, and d/dy of it (zero where clamped).
struct LogTerm {
  double value;
  double slope;
};

LogTerm neg_log(double y) {
  const double c = std::clamp(y, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const bool interior = y > kProbabilityClamp && y < 1.0 - kProbabilityClamp;
  return {-std::log(c), interior ? -1.0 / c : 0.0};
}

LogTerm neg_log_complement(double y) {
  const double c = std::clamp(y, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const bool interior = y > kProbabilityClamp && y < 1.0 - kProbabilityClamp;
  return {-std::log(1.0 - c), interior ? 1.0 / (1.0 - c) : 0.0};
}

}  // namespace

LossAndGrads loss_and_grads(const CalibratorParams& p_in, const CalibratorParams& p_out,
                            const CalibrationSet& set) {
  if (set.num_id == 0 || set.num_ood == 0) {
    throw ValidationError("loss_and_grads: both entry lists must be non-empty");
  }
  LossAndGrads out{0.0, CalibratorParams::zeros(p_in.dim()), CalibratorParams::zeros(p_out.dim())};
  for (const auto& cq : set.queries) {
    const bool is_id = cq.label == Polarity::id;
    const double weight = 1.0 / static_cast<double>(is_id ? set.num_id : set.num_ood);
    const double a_in = attn_forward(p_in, cq.q, cq.id_keys);
    const double a_out = attn_forward(p_out, cq.q, cq.ood_keys);
    const LogTerm t_in = is_id ? neg_log(a_in) : neg_log_complement(a_in);
    const LogTerm t_out = is_id ? neg_log_complement(a_out) : neg_log(a_out);
    out.loss += weight * (t_in.value + t_out.value);
    if (t_in.slope != 0.0) attn_backward(p_in, cq.q, cq.id_keys, weight * t_in.slope, out.grad_in);
    if (t_out.slope != 0.0) {
      attn_backward(p_out, cq.q, cq.ood_keys, weight * t_out.slope, out.grad_out);
    }
  }
  return out;
}

double loss_only(const CalibratorParams& p_in, const CalibratorParams& p_out,
                 const CalibrationSet& set) {
  double loss = 0.0;
  for (const auto& cq : set.queries) {
    const bool is_id = cq.label == Polarity::id;
    const double weight = 1.0 / static_cast<double>(is_id ? set.num_id : set.num_ood);
    const double a_in = attn_forward(p_in, cq.q, cq.id_keys);
    const double a_out = attn_forward(p_out, cq.q, cq.ood_keys);
    loss += weight * ((is_id ? neg_log(a_in) : neg_log_complement(a_in)).value +
                      (is_id ? neg_log_complement(a_out) : neg_log(a_out)).value);
  }
  return loss;
}

std::vector<double> train(CalibratorParams& p_in, CalibratorParams& p_out,
                          const BoundaryDict& id_dict, const BoundaryDict& ood_dict,
                          const TrainOptions& opts) {
  if (opts.iters < 1) throw ValidationError("train: iters must be >= 1");
  if (!(opts.lr >= 0.0)) throw ValidationError("train: lr must be >= 0");
  const CalibrationSet set = build_calibration_set(id_dict, ood_dict, opts.k);
  std::vector<double> trajectory;
  trajectory.reserve(opts.iters);
  for (std::size_t it = 0; it < opts.iters; ++it) {
    LossAndGrads lg = loss_and_grads(p_in, p_out, set);
    if (!std::isfinite(lg.loss)) {
      throw RuntimeError("non-finite calibration loss at iteration " + std::to_string(it));
    }
    trajectory.push_back(lg.loss);
    p_in.add_scaled(-opts.lr, lg.grad_in);
    p_out.add_scaled(-opts.lr, lg.grad_out);
    if (!p_in.all_finite() || !p_out.all_finite()) {
      throw RuntimeError("non-finite calibrator parameters after iteration " + std::to_string(it));
    }
  }
  return trajectory;
}

}  // namespace baca
