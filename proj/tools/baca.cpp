// Command-line front end: run, synth, check-theorem, eval, export-heatmap, init-encoder.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "baca/analysis.hpp"
#include "baca/error.hpp"
#include "baca/evaluation.hpp"
#include "baca/graphon.hpp"
#include "baca/pipeline.hpp"
#include "baca/synthbench.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 1;

void write_csv(const baca::Graphon& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw baca::RuntimeError("cannot write " + path);
  baca::write_graphon_csv(w, out);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-aware test-time graph OOD score calibration"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Calibrate OOD scores for a test dataset");
  std::string config_path, encoder_path, data_path, scores_out = "scores.csv", dump_dicts,
                                                    export_graphon, lambda_range, tail_mode,
                                                    graphon_resolution;
  bool run_json = false;
  std::map<std::string, std::string> overrides;
  run->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  run->add_option("--encoder", encoder_path, "GIN weights JSON")->required();
  run->add_option("--data", data_path, "line-delimited JSON dataset")->required();
  run->add_option("--out", scores_out, "score CSV output path");
  run->add_option("--dump-dicts", dump_dicts, "write dictionary snapshot JSON");
  run->add_option("--export-graphon", export_graphon,
                  "write subgroup graphon CSVs (<path> with _id/_ood suffixes)");
  run->add_flag("--json", run_json, "print the report as JSON");
  for (const char* key : {"k", "beta", "lr", "iters", "queue-size", "bank-size", "num-mixups",
                          "seed", "batch-size", "usvt-c", "partition-quantile"}) {
    run->add_option(std::string("--") + key, overrides[key], "overrides the config key of the same name");
  }
  run->add_option("--lambda-range", lambda_range, "lo:hi");
  run->add_option("--tail-mode", tail_mode, "boundary|extreme");
  run->add_option("--graphon-resolution", graphon_resolution, "N or auto");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic benchmark");
  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", spec_path, "BenchSpec JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "dataset output path")->required();
  synth->add_option("--seed", synth_seed, "override the benchmark seed");

  // check-theorem
  auto* theorem = app.add_subcommand("check-theorem", "Verify the graphon mixup bounds numerically");
  baca::TheoremSuiteOptions topts;
  theorem->add_option("--trials", topts.trials, "number of random trials");
  theorem->add_option("--max-n", topts.max_resolution, "largest step-graphon resolution");
  theorem->add_option("--seed", topts.seed, "random seed");

  // eval
  auto* eval = app.add_subcommand("eval", "Recompute metrics from a score CSV");
  std::string eval_scores;
  bool eval_json = false;
  baca::KlOptions kl_opts;
  eval->add_option("--scores", eval_scores, "score CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--bins", kl_opts.bins, "histogram bins for KL");
  eval->add_flag("--json", eval_json, "print JSON");

  // export-heatmap
  auto* heatmap = app.add_subcommand("export-heatmap", "Estimate a graphon and write it as CSV");
  std::string heat_data, heat_out;
  std::optional<int> heat_label, heat_res;
  double heat_c = baca::kDefaultUsvtC;
  heatmap->add_option("--data", heat_data, "dataset")->required()->check(CLI::ExistingFile);
  heatmap->add_option("--out", heat_out, "CSV output path")->required();
  heatmap->add_option("--label", heat_label, "only graphs with this label (0 or 1)");
  heatmap->add_option("--resolution", heat_res, "graphon resolution (default: median size)");
  heatmap->add_option("--usvt-c", heat_c, "USVT threshold constant");

  // init-encoder
  auto* init = app.add_subcommand("init-encoder", "Write a seeded random GIN weights file");
  int in_dim = 8, hidden = 16, layers = 5;
  std::uint64_t init_seed = 0;
  std::string init_out;
  init->add_option("--in-dim", in_dim, "input feature width");
  init->add_option("--hidden", hidden, "hidden width");
  init->add_option("--layers", layers, "number of GIN layers");
  init->add_option("--seed", init_seed, "random seed");
  std::string init_kind = "glorot";
  init->add_option("--kind", init_kind, "glorot or degree-probe")
      ->check(CLI::IsMember({"glorot", "degree-probe"}));
  init->add_option("--out", init_out, "weights output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      baca::PipelineConfig cfg;
      if (!config_path.empty()) cfg = baca::load_config(config_path);
      for (const auto& [key, value] : overrides) {
        if (!value.empty()) cfg.set(key, value);
      }
      if (!lambda_range.empty()) cfg.set("lambda_range", lambda_range);
      if (!tail_mode.empty()) cfg.set("tail_mode", tail_mode);
      if (!graphon_resolution.empty()) cfg.set("graphon_resolution", graphon_resolution);
      cfg.validate();

      const baca::RunResult res = baca::run_baca(cfg, encoder_path, data_path);
      baca::export_scores(res.records, scores_out);
      if (!dump_dicts.empty()) {
        std::ofstream out(dump_dicts);
        if (!out) throw baca::RuntimeError("cannot write " + dump_dicts);
        out << nlohmann::json{{"id", res.id_dict.to_json()}, {"ood", res.ood_dict.to_json()}}.dump(1)
            << '\n';
      }
      if (!export_graphon.empty()) {
        write_csv(*res.id_graphon, with_suffix(export_graphon, "_id"));
        write_csv(*res.ood_graphon, with_suffix(export_graphon, "_ood"));
      }
      if (res.report) {
        if (run_json) std::cout << res.report->to_json().dump(2) << '\n';
        else std::cout << res.report->to_table();
      } else {
        std::cout << "wrote " << res.records.size() << " scores to " << scores_out
                  << " (no labels, metrics skipped)\n";
      }
    } else if (*synth) {
      baca::BenchSpec spec = spec_path.empty() ? baca::BenchSpec::defaults()
                                               : baca::load_bench_spec(spec_path);
      if (synth_seed) spec.seed = *synth_seed;
      baca::save_dataset(baca::make_benchmark(spec), synth_out);
      std::cout << "wrote " << spec.n_id + spec.n_ood << " graphs to " << synth_out << '\n';
    } else if (*theorem) {
      const auto start = std::chrono::steady_clock::now();
      const auto result = baca::run_theorem_suite(topts);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << std::left << std::setw(8) << "motif" << std::setw(10) << "checks"
                << std::setw(12) << "violations" << "worst slack\n";
      for (const auto& row : result.per_motif) {
        std::cout << std::setw(8) << row.motif << std::setw(10) << row.checks << std::setw(12)
                  << row.violations;
        if (row.checks > 0) std::cout << std::scientific << std::setprecision(3) << row.worst_slack;
        else std::cout << "-";
        std::cout << std::defaultfloat << '\n';
      }
      std::cout << "trials=" << result.trials << " violations=" << result.violations
                << " worst_slack=" << std::scientific << result.worst_slack << std::defaultfloat
                << " exact=" << (result.all_exact ? "yes" : "no") << " time=" << std::fixed
                << std::setprecision(2) << secs << "s\n";
      std::cout << (result.violations == 0 ? "PASS" : "FAIL") << '\n';
      return result.violations == 0 ? 0 : kExitRuntime;
    } else if (*eval) {
      const auto records = baca::load_scores(eval_scores);
      const auto report = baca::evaluate(records, kl_opts);
      if (eval_json) std::cout << report.to_json().dump(2) << '\n';
      else std::cout << report.to_table();
    } else if (*heatmap) {
      baca::GraphDataset ds = baca::load_dataset(heat_data);
      std::vector<baca::Graph> graphs;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (heat_label) {
          if (!ds.labels) throw baca::ValidationError("--label given but the dataset has no labels");
          if ((*ds.labels)[i] != *heat_label) continue;
        }
        graphs.push_back(ds.graphs[i]);
      }
      if (graphs.empty()) throw baca::ValidationError("no graphs selected");
      const int res = heat_res.value_or(baca::default_resolution(graphs));
      write_csv(baca::estimate_graphon(graphs, res, heat_c), heat_out);
      std::cout << "wrote " << res << "x" << res << " graphon to " << heat_out << '\n';
    } else if (*init) {
      baca::save_encoder(init_kind == "glorot"
                             ? baca::random_encoder(in_dim, hidden, layers, init_seed)
                             : baca::degree_probe_encoder(in_dim, hidden, layers, init_seed),
                         init_out);
      std::cout << "wrote encoder to " << init_out << '\n';
    }
  } catch (const baca::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const baca::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
