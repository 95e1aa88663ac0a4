#include "baca/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "baca/error.hpp"

namespace baca {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("auc: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; tied runs share their average rank. Doubled ranks keep
  // the sum integral so ties are exact.
  double rank_sum2 = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank2 = static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) rank_sum2 += avg_rank2;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double u2 = rank_sum2 - np * (np + 1.0);
  return u2 / (2.0 * np * static_cast<double>(n_neg));
}

double kl_divergence(std::span<const double> scores_id, std::span<const double> scores_ood,
                     const KlOptions& opts) {
  if (scores_id.empty() || scores_ood.empty()) throw ValidationError("kl_divergence: empty input");
  if (opts.bins < 2) throw ValidationError("kl_divergence: bins must be >= 2");
  double lo = scores_id[0], hi = scores_id[0];
  for (auto list : {scores_id, scores_ood}) {
    for (double s : list) {
      if (!std::isfinite(s)) throw ValidationError("kl_divergence: non-finite score");
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  const auto bins = static_cast<std::size_t>(opts.bins);
  auto histogram = [&](std::span<const double> list) {
    std::vector<double> h(bins, opts.eps);
    for (double s : list) {
      std::size_t b = 0;
      if (hi > lo) {
        b = static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(bins));
        b = std::min(b, bins - 1);
      }
      h[b] += 1.0;
    }
    const double total = std::accumulate(h.begin(), h.end(), 0.0);
    for (double& v : h) v /= total;
    return h;
  };
  const auto p = histogram(scores_ood);
  const auto q = histogram(scores_id);
  double kl = 0.0;
  for (std::size_t b = 0; b < bins; ++b) kl += p[b] * std::log(p[b] / q[b]);
  return std::max(kl, 0.0);
}

double kl_by_label(std::span<const double> scores, std::span<const int> labels,
                   const KlOptions& opts) {
  if (scores.size() != labels.size()) throw ValidationError("kl: length mismatch");
  std::vector<double> id, ood;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? ood : id).push_back(scores[i]);
  return kl_divergence(id, ood, opts);
}

EvalReport evaluate(std::span<const ScoreRecord> records, const KlOptions& opts) {
  std::vector<double> pre, baca;
  std::vector<int> labels;
  for (const auto& r : records) {
    if (!r.label) throw ValidationError("evaluate: every record needs a label");
    pre.push_back(r.s_pre);
    baca.push_back(r.s_baca);
    labels.push_back(*r.label);
  }
  EvalReport rep;
  rep.auc_pre = auc(pre, labels);
  rep.auc_baca = auc(baca, labels);
  rep.kl_pre = kl_by_label(pre, labels, opts);
  rep.kl_baca = kl_by_label(baca, labels, opts);
  rep.n_ood = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  rep.n_id = labels.size() - rep.n_ood;
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  return {{"auc_pre", auc_pre}, {"auc_baca", auc_baca}, {"kl_pre", kl_pre},
          {"kl_baca", kl_baca}, {"n_id", n_id},         {"n_ood", n_ood},
          {"kl_direction", kl_direction}};
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "metric      pre        baca\n";
  os << "AUC         " << std::setw(8) << auc_pre << "   " << std::setw(8) << auc_baca << '\n';
  os << "KL          " << std::setw(8) << kl_pre << "   " << std::setw(8) << kl_baca << '\n';
  os << "n_id=" << n_id << "  n_ood=" << n_ood << "  (" << kl_direction << ")\n";
  return os.str();
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& field, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line_no, "not a number: '" + field + "'");
  }
}

}  // namespace

void write_scores(std::span<const ScoreRecord> records, std::ostream& out) {
  out << "s_pre,s_in,s_out,s_attn,s_baca,label\n";
  for (const auto& r : records) {
    out << format_double(r.s_pre) << ',' << format_double(r.s_in) << ',' << format_double(r.s_out)
        << ',' << format_double(r.s_attn) << ',' << format_double(r.s_baca) << ',';
    if (r.label) out << *r.label;
    out << '\n';
  }
}

void export_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw ValidationError("export_scores: no records");
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write score file: " + path.string());
  write_scores(records, out);
  if (!out) throw RuntimeError("write failed: " + path.string());
}

std::vector<ScoreRecord> read_scores(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ValidationError("score file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "s_pre,s_in,s_out,s_attn,s_baca,label") {
    throw ParseError(1, "unexpected header: " + line);
  }
  std::vector<ScoreRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) throw ParseError(line_no, "expected 6 columns");
    ScoreRecord r;
    r.s_pre = parse_double(fields[0], line_no);
    r.s_in = parse_double(fields[1], line_no);
    r.s_out = parse_double(fields[2], line_no);
    r.s_attn = parse_double(fields[3], line_no);
    r.s_baca = parse_double(fields[4], line_no);
    if (!fields[5].empty()) {
      if (fields[5] != "0" && fields[5] != "1") throw ParseError(line_no, "label must be 0, 1 or empty");
      r.label = fields[5] == "1" ? 1 : 0;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<ScoreRecord> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open score file: " + path.string());
  return read_scores(in);
}

}  // namespace baca
