#include "baca/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "baca/error.hpp"

namespace baca {

Motif::Motif(int num_nodes, std::vector<Edge> edges, std::string name)
    : num_nodes_(num_nodes), name_(std::move(name)) {
  if (num_nodes < 1 || num_nodes > kMaxMotifNodes) {
    throw ValidationError("motif too large for exact mode: " + std::to_string(num_nodes) +
                          " nodes (max " + std::to_string(kMaxMotifNodes) + ")");
  }
  // Reuse Graph's simple-graph validation.
  edges_ = Graph(num_nodes, std::move(edges)).edges();
}

Motif Motif::complete(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Motif(n, std::move(e), "K" + std::to_string(n));
}

Motif Motif::path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Motif(n, std::move(e), "P" + std::to_string(n));
}

Motif Motif::cycle(int n) {
  if (n < 3) throw ValidationError("cycle motif needs at least 3 nodes");
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Motif(n, std::move(e), "C" + std::to_string(n));
}

Motif Motif::star(int leaves) {
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Motif(leaves + 1, std::move(e), "S" + std::to_string(leaves));
}

double homomorphism_density(const Motif& f, const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw ValidationError("homomorphism_density: matrix must be square and non-empty");
  }
  const int n = static_cast<int>(w.rows());
  const int k = f.num_nodes();
  std::vector<int> assign(k, 0);
  double total = 0.0;
  while (true) {
    double prod = 1.0;
    for (const auto& [a, b] : f.edges()) prod *= w(assign[a], assign[b]);
    total += prod;
    int pos = 0;
    while (pos < k && ++assign[pos] == n) assign[pos++] = 0;
    if (pos == k) break;
  }
  return total / std::pow(static_cast<double>(n), k);
}

namespace {

// Best T for a fixed vector of column sums: max(sum of positives, -sum of negatives).
double best_column_choice(const Eigen::VectorXd& col) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index j = 0; j < col.size(); ++j) {
    if (col(j) > 0.0) pos += col(j);
    else neg -= col(j);
  }
  return std::max(pos, neg);
}

double exact_cut_mass(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
  std::vector<bool> in_s(n, false);
  double best = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t g = 1; g < subsets; ++g) {
    const int row = std::countr_zero(g);
    if (in_s[row]) col -= w.row(row).transpose();
    else col += w.row(row).transpose();
    in_s[row] = !in_s[row];
    best = std::max(best, best_column_choice(col));
  }
  return best;
}

// Alternating maximization of |1_S^T W 1_T| from random starts; lower bound.
double approx_cut_mass(const Eigen::MatrixXd& w, std::uint64_t seed) {
  const Eigen::Index n = w.rows();
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  double best = 0.0;
  constexpr int kRestarts = 64;
  for (int restart = 0; restart < kRestarts; ++restart) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd s(n);
      for (Eigen::Index i = 0; i < n; ++i) s(i) = coin(rng) ? 1.0 : 0.0;
      double value = -1.0;
      for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd col = sign * (w.transpose() * s);
        Eigen::VectorXd t = (col.array() > 0.0).cast<double>();
        Eigen::VectorXd row = sign * (w * t);
        s = (row.array() > 0.0).cast<double>();
        const double v = sign * s.dot(w * t);
        if (v <= value) break;
        value = v;
      }
      best = std::max(best, value);
    }
  }
  return best;
}

}  // namespace

CutNormResult cut_norm(const Eigen::MatrixXd& w, std::uint64_t seed) {
  if (w.rows() != w.cols() || w.rows() < 1) {
    throw ValidationError("cut_norm: matrix must be square and non-empty");
  }
  const double n2 = static_cast<double>(w.rows()) * static_cast<double>(w.rows());
  if (w.rows() <= kExactCutNormMaxResolution) return {exact_cut_mass(w) / n2, true};
  return {approx_cut_mass(w, seed) / n2, false};
}

BoundReport make_report(double lhs, double rhs, bool exact) {
  return BoundReport{lhs, rhs, lhs <= rhs + kBoundTolerance, rhs - lhs, exact};
}

BoundReport check_counting_lemma(const Motif& f, const Eigen::MatrixXd& w1,
                                 const Eigen::MatrixXd& w2) {
  if (w1.rows() != w2.rows() || w1.cols() != w2.cols()) {
    throw ValidationError("check_counting_lemma: resolution mismatch");
  }
  const double lhs = std::abs(homomorphism_density(f, w1) - homomorphism_density(f, w2));
  const CutNormResult delta = cut_norm(w1 - w2);
  return make_report(lhs, f.edge_count() * delta.value, delta.exact);
}

std::pair<BoundReport, BoundReport> check_mixup_bounds(const Motif& t_g, const Motif& t_h,
                                                       const Graphon& w_g, const Graphon& w_h,
                                                       double lambda) {
  if (w_g.resolution() != w_h.resolution()) {
    throw ValidationError("check_mixup_bounds: resolution mismatch");
  }
  const Graphon w_s = mixup(w_g, w_h, lambda);
  const CutNormResult delta = cut_norm(w_g.matrix() - w_h.matrix());
  const double lhs_g = std::abs(homomorphism_density(t_g, w_s) - homomorphism_density(t_g, w_g));
  const double lhs_h = std::abs(homomorphism_density(t_h, w_s) - homomorphism_density(t_h, w_h));
  return {make_report(lhs_g, t_g.edge_count() * (1.0 - lambda) * delta.value, delta.exact),
          make_report(lhs_h, t_h.edge_count() * lambda * delta.value, delta.exact)};
}

Graphon random_graphon(int resolution, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(resolution, resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = i; j < resolution; ++j) {
      m(i, j) = unif(rng);
      m(j, i) = m(i, j);
    }
  }
  return Graphon(std::move(m));
}

const std::vector<Motif>& theorem_motifs() {
  static const std::vector<Motif> motifs = {
      Motif::complete(2), Motif::path(3),  Motif::complete(3), Motif::path(4),
      Motif::star(3),     Motif::cycle(4), Motif::complete(4),
  };
  return motifs;
}

TheoremSuiteResult run_theorem_suite(const TheoremSuiteOptions& opts) {
  if (opts.trials < 1) throw ValidationError("theorem suite: trials must be >= 1");
  if (opts.max_resolution < 2) throw ValidationError("theorem suite: max-n must be >= 2");
  const auto& motifs = theorem_motifs();
  TheoremSuiteResult result;
  result.trials = opts.trials;
  result.worst_slack = std::numeric_limits<double>::infinity();
  for (const auto& m : motifs) {
    result.per_motif.push_back({m.name(), 0, 0, std::numeric_limits<double>::infinity()});
  }
  Rng rng = make_rng(opts.seed);
  std::uniform_int_distribution<int> res_dist(2, opts.max_resolution);
  std::uniform_int_distribution<std::size_t> motif_dist(0, motifs.size() - 1);
  std::uniform_real_distribution<double> lambda_dist(0.0, 1.0);

  auto record = [&](std::size_t mi, const BoundReport& r) {
    auto& row = result.per_motif[mi];
    ++row.checks;
    row.worst_slack = std::min(row.worst_slack, r.slack);
    result.worst_slack = std::min(result.worst_slack, r.slack);
    result.all_exact = result.all_exact && r.exact;
    if (!r.holds) {
      ++row.violations;
      ++result.violations;
    }
  };

  for (int t = 0; t < opts.trials; ++t) {
    const int n = res_dist(rng);
    const Graphon w_g = random_graphon(n, rng);
    const Graphon w_h = random_graphon(n, rng);
    const std::size_t mg = motif_dist(rng);
    const std::size_t mh = motif_dist(rng);
    const double lambda = lambda_dist(rng);
    const auto [first, second] = check_mixup_bounds(motifs[mg], motifs[mh], w_g, w_h, lambda);
    record(mg, first);
    record(mh, second);
  }
  return result;
}

}  // namespace baca
