// suitap: prefetcher-adaptation pipeline driver.
//
// Subcommands wire the stages end to end: synth/ingest produce window
// datasets, select-features and select-psc narrow the model inputs, train
// fits the per-PSC forests, quantize emits the packed node image, and
// eval/simulate/report exercise the model. Structured JSON goes to stdout;
// human-readable summaries go to stderr (suppressed by --json).
//
// Exit codes: 0 success, 1 usage error, 2 data/format error,
// 3 model/capacity error.

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "suitap/config.hpp"
#include "suitap/core.hpp"
#include "suitap/errors.hpp"
#include "suitap/featsel.hpp"
#include "suitap/hwsim.hpp"
#include "suitap/ingest.hpp"
#include "suitap/nodemem.hpp"
#include "suitap/pscsel.hpp"
#include "suitap/replay.hpp"
#include "suitap/train.hpp"

namespace {

using suitap::cli::PipelineConfig;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool g_json_only = false;

void note(const std::string& line) {
  if (!g_json_only) std::cerr << line << '\n';
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw suitap::DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw suitap::DataError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw suitap::DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw suitap::DataError("failed while writing '" + path + "'");
}

std::vector<std::string> read_name_list(const std::string& path, const char* key) {
  const json j = read_json_file(path);
  if (j.is_array()) return j.get<std::vector<std::string>>();
  if (j.is_object() && j.contains(key)) return j.at(key).get<std::vector<std::string>>();
  throw suitap::DataError(path + ": expected an array or an object with '" + std::string(key) + "'");
}

suitap::ingest::IngestConfig ingest_config(uint64_t warmup, uint64_t window, uint64_t cap) {
  suitap::ingest::IngestConfig cfg;
  cfg.warmup_instructions = warmup;
  cfg.window_size_instructions = window;
  if (cap == 0) {
    cfg.max_windows_per_trace.reset();
  } else {
    cfg.max_windows_per_trace = cap;
  }
  return cfg;
}

// Pre-scan for --config so flag defaults can come from the file.
PipelineConfig scan_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") return suitap::cli::load_config(argv[i + 1]);
  }
  return PipelineConfig{};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"suitap — suite-of-random-forests prefetcher adaptation pipeline"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  try {
    cfg = scan_config(argc, argv);
  } catch (const suitap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::string config_path;
  app.add_option("--config", config_path, "Load defaults from a pipeline config JSON file");
  app.add_flag("--json", g_json_only, "Machine output only (no stderr summary)");

  // ── synth ──
  auto* synth = app.add_subcommand("synth", "Generate a phase-structured synthetic dataset");
  std::string synth_spec_path, synth_out;
  uint64_t synth_seed = cfg.seed;
  bool synth_seed_given = false;
  synth->add_option("--spec", synth_spec_path, "Synthetic spec JSON")->required();
  synth->add_option("--out", synth_out, "Output dataset (JSON lines)")->required();
  synth->add_option("--seed", synth_seed, "Override the spec's seed")->each([&](const std::string&) {
    synth_seed_given = true;
  });

  // ── ingest ──
  auto* ingest = app.add_subcommand("ingest", "Load window-record files into one normalized dataset");
  std::vector<std::string> ingest_files;
  uint64_t ingest_warmup = cfg.warmup_instructions;
  uint64_t ingest_window = cfg.window_size_instructions;
  uint64_t ingest_cap = cfg.max_windows_per_trace;
  std::string ingest_out;
  ingest->add_option("files", ingest_files, "Window-record JSONL files")->required();
  ingest->add_option("--warmup", ingest_warmup, "Warmup instructions to skip per trace");
  ingest->add_option("--window-size", ingest_window, "Instructions per window");
  ingest->add_option("--max-windows", ingest_cap, "Windows kept per trace after warmup (0 = unlimited)");
  ingest->add_option("--out", ingest_out, "Write the normalized dataset here");

  // ── select-features ──
  auto* selfeat = app.add_subcommand("select-features", "Filter hardware-invariant events and prune redundant ones");
  std::string sf_per_psc, sf_dataset, sf_out;
  std::string sf_statistic = "mean-deviation";
  double sf_threshold = cfg.invariance_threshold;
  double sf_corr = cfg.correlation_threshold;
  uint64_t sf_max = cfg.max_features;
  uint64_t sf_warmup = 0, sf_window = cfg.window_size_instructions, sf_cap = 0;
  selfeat->add_option("--per-psc", sf_per_psc, "Per-PSC E-PTI JSON ({events, per_psc})")->required();
  selfeat->add_option("--dataset", sf_dataset, "Dataset for redundancy pruning (JSONL)");
  selfeat->add_option("--threshold", sf_threshold, "Invariance statistic bound");
  selfeat->add_option("--statistic", sf_statistic, "Invariance statistic: mean-deviation or pooled-cv")
      ->check(CLI::IsMember({"mean-deviation", "pooled-cv"}));
  selfeat->add_option("--corr-threshold", sf_corr, "Pairwise correlation limit");
  selfeat->add_option("--max-features", sf_max, "Feature count cap");
  selfeat->add_option("--warmup", sf_warmup, "Warmup instructions when loading --dataset");
  selfeat->add_option("--window-size", sf_window, "Window size when loading --dataset");
  selfeat->add_option("--max-windows", sf_cap, "Per-trace cap when loading --dataset (0 = unlimited)");
  selfeat->add_option("--out", sf_out, "Write the report here");

  // ── select-psc ──
  auto* selpsc = app.add_subcommand("select-psc", "Prune the PSC space by top-k coverage");
  std::string sp_table, sp_out;
  uint64_t sp_k = cfg.top_k, sp_max = cfg.max_candidates;
  double sp_eps = cfg.agnostic_epsilon;
  selpsc->add_option("--table", sp_table, "Per-trace IPC table JSON ({pscs, traces})")->required();
  selpsc->add_option("--k", sp_k, "Top-k PSCs per trace");
  selpsc->add_option("--epsilon", sp_eps, "Relative IPC tolerance for agnostic traces");
  selpsc->add_option("--max-candidates", sp_max, "Selection size cap");
  selpsc->add_option("--out", sp_out, "Write the selection here");

  // ── train ──
  auto* tr = app.add_subcommand("train", "Train one random forest per PSC");
  std::string tr_dataset = cfg.dataset_path;
  std::string tr_features, tr_pscs, tr_grid, tr_out = cfg.suite_path;
  double tr_eps = cfg.label_epsilon, tr_fraction = cfg.train_fraction;
  uint64_t tr_estimators = cfg.n_estimators, tr_depth = cfg.max_depth, tr_budget = cfg.total_node_budget;
  uint64_t tr_min_leaf = cfg.min_leaf_samples, tr_folds = cfg.cv_folds, tr_seed = cfg.seed;
  uint64_t tr_warmup = cfg.warmup_instructions, tr_window = cfg.window_size_instructions;
  uint64_t tr_cap = cfg.max_windows_per_trace;
  tr->add_option("--dataset", tr_dataset, "Window dataset (JSONL)")->required(cfg.dataset_path.empty());
  tr->add_option("--features", tr_features, "Feature list JSON (array or {selected: [...]})");
  tr->add_option("--psc-catalog", tr_pscs, "PSC catalog JSON (array or {pscs: [...]})");
  tr->add_option("--epsilon", tr_eps, "Within-best labeling tolerance");
  tr->add_option("--estimators", tr_estimators, "Trees per forest");
  tr->add_option("--depth", tr_depth, "Max tree depth");
  tr->add_option("--budget", tr_budget, "Total node budget across the suite");
  tr->add_option("--min-leaf", tr_min_leaf, "Minimum samples per leaf");
  tr->add_option("--folds", tr_folds, "Cross-validation folds (with --grid)");
  tr->add_option("--grid", tr_grid, "Hyperparameter grid JSON (array of settings)");
  tr->add_option("--train-fraction", tr_fraction, "Fraction of windows used for training");
  tr->add_option("--seed", tr_seed, "Training seed");
  tr->add_option("--warmup", tr_warmup, "Warmup instructions when loading the dataset");
  tr->add_option("--window-size", tr_window, "Window size when loading the dataset");
  tr->add_option("--max-windows", tr_cap, "Per-trace window cap (0 = unlimited)");
  tr->add_option("--out", tr_out, "Suite output path");

  // ── quantize ──
  auto* qz = app.add_subcommand("quantize", "Pack a trained suite into the hardware node image");
  std::string qz_suite = cfg.suite_path, qz_dataset, qz_out = cfg.model_prefix;
  uint64_t qz_warmup = cfg.warmup_instructions, qz_window = cfg.window_size_instructions;
  uint64_t qz_cap = cfg.max_windows_per_trace;
  qz->add_option("--suite", qz_suite, "Trained suite JSON");
  qz->add_option("--dataset", qz_dataset, "Recompute feature scales from this dataset (JSONL)");
  qz->add_option("--warmup", qz_warmup, "Warmup instructions when loading --dataset");
  qz->add_option("--window-size", qz_window, "Window size when loading --dataset");
  qz->add_option("--max-windows", qz_cap, "Per-trace window cap (0 = unlimited)");
  qz->add_option("--out", qz_out, "Model bundle prefix (<prefix>.nodemem, <prefix>.meta.json)");

  // ── eval ──
  auto* ev = app.add_subcommand("eval", "Run one E-PTI vector through the hardware path");
  std::string ev_model = cfg.model_prefix, ev_epti;
  ev->add_option("--model", ev_model, "Model bundle prefix");
  ev->add_option("--epti", ev_epti, "E-PTI JSON (array in feature order, or {event: value})")->required();

  // ── simulate ──
  auto* sim = app.add_subcommand("simulate", "Replay a dataset window by window against the model");
  std::string sim_dataset = cfg.dataset_path, sim_model = cfg.model_prefix, sim_out;
  std::string sim_baseline = cfg.baseline_psc, sim_initial = cfg.initial_psc;
  double sim_penalty = 0.0;
  uint64_t sim_warmup = cfg.warmup_instructions, sim_window = cfg.window_size_instructions;
  uint64_t sim_cap = cfg.max_windows_per_trace;
  sim->add_option("--dataset", sim_dataset, "Window dataset (JSONL)")->required(cfg.dataset_path.empty());
  sim->add_option("--model", sim_model, "Model bundle prefix");
  sim->add_option("--baseline", sim_baseline, "Baseline PSC id (default: initial PSC)");
  sim->add_option("--initial", sim_initial, "PSC for each trace's first window (default: first model PSC)");
  sim->add_option("--transition-penalty", sim_penalty,
                  "Fractional IPC cost charged to a window after a PSC switch");
  sim->add_option("--warmup", sim_warmup, "Warmup instructions when loading the dataset");
  sim->add_option("--window-size", sim_window, "Window size when loading the dataset");
  sim->add_option("--max-windows", sim_cap, "Per-trace window cap (0 = unlimited)");
  sim->add_option("--out", sim_out, "Write the replay result here");

  // ── report ──
  auto* rp = app.add_subcommand("report", "Outlier CSV from a replay result");
  std::string rp_result, rp_out;
  uint64_t rp_k = 10;
  rp->add_option("--result", rp_result, "Replay result JSON")->required();
  rp->add_option("--k", rp_k, "Outliers per side");
  rp->add_option("--out", rp_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) {
      const json sj = read_json_file(synth_spec_path);
      suitap::replay::SyntheticSpec spec = suitap::replay::spec_from_json(sj);
      if (synth_seed_given) spec.seed = synth_seed;
      const suitap::Dataset ds = suitap::replay::generate_synthetic(spec);
      suitap::ingest::save_dataset(ds, synth_out);
      note("synth: wrote " + std::to_string(ds.windows.size()) + " windows to " + synth_out);
      emit(ordered_json{{"windows", ds.windows.size()},
                        {"traces", spec.n_traces},
                        {"events", ds.events.size()},
                        {"pscs", ds.pscs.size()},
                        {"path", synth_out}});
    } else if (*ingest) {
      std::vector<std::string> warnings;
      const suitap::Dataset ds = suitap::ingest::load_dataset(
          ingest_files, ingest_config(ingest_warmup, ingest_window, ingest_cap), &warnings);
      for (const auto& w : warnings) note("warning: " + w);
      if (!ingest_out.empty()) suitap::ingest::save_dataset(ds, ingest_out);
      std::set<std::string> traces;
      for (const auto& w : ds.windows) traces.insert(w.trace_id);
      note("ingest: " + std::to_string(ds.windows.size()) + " windows across " +
           std::to_string(traces.size()) + " traces");
      emit(ordered_json{{"windows", ds.windows.size()},
                        {"traces", traces.size()},
                        {"events", ds.events.names()},
                        {"pscs", ds.pscs.ids()},
                        {"warnings", warnings}});
    } else if (*selfeat) {
      const json pj = read_json_file(sf_per_psc);
      if (!pj.is_object() || !pj.contains("events") || !pj.contains("per_psc")) {
        throw suitap::DataError(sf_per_psc + ": expected {events: [...], per_psc: {...}}");
      }
      const auto catalog = suitap::EventCatalog::from_names(pj.at("events").get<std::vector<std::string>>());
      std::map<std::string, std::vector<suitap::EptiVector>> per_psc;
      for (const auto& [psc, windows] : pj.at("per_psc").items()) {
        per_psc[psc] = windows.get<std::vector<suitap::EptiVector>>();
      }
      const auto statistic = sf_statistic == "pooled-cv"
                                 ? suitap::featsel::InvarianceStatistic::kPooledCv
                                 : suitap::featsel::InvarianceStatistic::kMeanDeviation;
      const auto report = suitap::featsel::invariance_filter(catalog, per_psc, sf_threshold, statistic);
      ordered_json out = suitap::featsel::report_to_json(report);
      if (!sf_dataset.empty()) {
        const suitap::Dataset ds =
            suitap::ingest::load_dataset({sf_dataset}, ingest_config(sf_warmup, sf_window, sf_cap));
        std::vector<suitap::EventId> candidates;
        for (const auto& e : report.retained) {
          const auto idx = ds.events.index_of(e.name);
          if (!idx) throw suitap::DataError("dataset lacks retained event '" + e.name + "'");
          candidates.push_back(ds.events.at(*idx));
        }
        const auto selected = suitap::featsel::redundancy_prune(ds, candidates, sf_corr, sf_max);
        std::vector<std::string> names;
        for (const auto& e : selected) names.push_back(e.name);
        out["selected"] = names;
        note("select-features: " + std::to_string(report.retained.size()) + " invariant, " +
             std::to_string(names.size()) + " selected");
      } else {
        note("select-features: " + std::to_string(report.retained.size()) + " invariant events");
      }
      if (!sf_out.empty()) write_text_file(sf_out, out.dump(2) + "\n");
      emit(out);
    } else if (*selpsc) {
      const auto table = suitap::pscsel::table_from_json(read_json_file(sp_table));
      const auto coverage = suitap::pscsel::build_coverage(table, sp_k, sp_eps);
      const auto selection = suitap::pscsel::greedy_select(coverage, sp_max);
      const ordered_json out = suitap::pscsel::selection_to_json(selection, coverage);
      if (!sp_out.empty()) write_text_file(sp_out, out.dump(2) + "\n");
      note("select-psc: " + std::to_string(selection.selected.size()) + " PSCs, " +
           std::to_string(selection.uncovered.size()) + " uncovered");
      emit(out);
    } else if (*tr) {
      const suitap::Dataset ds =
          suitap::ingest::load_dataset({tr_dataset}, ingest_config(tr_warmup, tr_window, tr_cap));
      suitap::train::PipelineOptions opt;
      if (!tr_features.empty()) opt.feature_names = read_name_list(tr_features, "selected");
      if (!tr_pscs.empty()) opt.psc_ids = read_name_list(tr_pscs, "pscs");
      opt.label_epsilon = tr_eps;
      opt.hp = suitap::train::Hyperparams{tr_estimators, tr_depth, tr_budget, tr_min_leaf};
      opt.folds = tr_folds;
      opt.train_fraction = tr_fraction;
      opt.seed = tr_seed;
      if (!tr_grid.empty()) {
        for (const auto& gj : read_json_file(tr_grid)) {
          suitap::train::Hyperparams hp = opt.hp;
          hp.n_estimators = gj.value("n_estimators", hp.n_estimators);
          hp.max_depth = gj.value("max_depth", hp.max_depth);
          hp.total_node_budget = gj.value("total_node_budget", hp.total_node_budget);
          hp.min_leaf_samples = gj.value("min_leaf_samples", hp.min_leaf_samples);
          opt.grid.push_back(hp);
        }
      }
      auto out = suitap::train::train_pipeline(ds, opt);
      suitap::train::save_suite(out.suite, tr_out);
      out.report["suite_path"] = tr_out;
      note("train: " + std::to_string(out.suite.total_nodes()) + " nodes across " +
           std::to_string(out.suite.forests.size()) + " forests -> " + tr_out);
      emit(out.report);
    } else if (*qz) {
      const suitap::train::Suite suite = suitap::train::load_suite(qz_suite);
      suitap::nodemem::ModelBundle bundle;
      if (!qz_dataset.empty()) {
        const suitap::Dataset ds =
            suitap::ingest::load_dataset({qz_dataset}, ingest_config(qz_warmup, qz_window, qz_cap));
        bundle = suitap::nodemem::compile_suite(suite, ds);
      } else {
        bundle = suitap::nodemem::compile_suite(suite, suitap::nodemem::make_quant_meta(suite));
      }
      suitap::nodemem::save_bundle(bundle, qz_out);
      note("quantize: " + std::to_string(bundle.image.size()) + " nodes, " +
           std::to_string(bundle.image.logical_size_bytes()) + " logical bytes -> " + qz_out + ".nodemem");
      emit(ordered_json{{"nodes", bundle.image.size()},
                        {"logical_bytes", bundle.image.logical_size_bytes()},
                        {"padded_bytes", bundle.image.padded_size_bytes()},
                        {"rit_entries", bundle.rit.entries.size()},
                        {"model_prefix", qz_out}});
    } else if (*ev) {
      const auto bundle = suitap::nodemem::load_bundle(ev_model);
      const json ej = read_json_file(ev_epti);
      std::vector<double> features(bundle.meta.feature_order.size(), 0.0);
      const json& values = ej.is_object() && ej.contains("epti") ? ej.at("epti") : ej;
      if (values.is_array()) {
        const auto v = values.get<std::vector<double>>();
        if (v.size() != features.size()) {
          throw suitap::DataError("E-PTI array length " + std::to_string(v.size()) + " does not match the model's " +
                                  std::to_string(features.size()) + " features");
        }
        features = v;
      } else if (values.is_object()) {
        for (size_t f = 0; f < bundle.meta.feature_order.size(); ++f) {
          const auto& name = bundle.meta.feature_order[f].name;
          if (!values.contains(name)) throw suitap::DataError("E-PTI object is missing event '" + name + "'");
          features[f] = values.at(name).get<double>();
        }
      } else {
        throw suitap::DataError(ev_epti + ": expected an array or object of E-PTI values");
      }
      const auto decision = suitap::hwsim::evaluate_bundle(bundle, features);
      note("eval: " + bundle.meta.pscs.at(decision.class_id).id() + " (p=" +
           std::to_string(decision.probability) + ")");
      emit(ordered_json{{"psc", bundle.meta.pscs.at(decision.class_id).id()},
                        {"probability", decision.probability},
                        {"comparisons", decision.state.comparison_count},
                        {"memory_accesses", decision.state.memory_access_count}});
    } else if (*sim) {
      const auto bundle = suitap::nodemem::load_bundle(sim_model);
      const suitap::Dataset ds =
          suitap::ingest::load_dataset({sim_dataset}, ingest_config(sim_warmup, sim_window, sim_cap));
      const std::string initial = sim_initial.empty() ? bundle.meta.pscs.at(0).id() : sim_initial;
      const std::string baseline = sim_baseline.empty() ? initial : sim_baseline;
      const auto result = suitap::replay::run_replay(ds, bundle, initial, baseline, sim_penalty);
      const ordered_json out = suitap::replay::result_to_json(result);
      if (!sim_out.empty()) write_text_file(sim_out, out.dump(2) + "\n");
      note("simulate: mean gain vs " + baseline + " = " +
           std::to_string(result.aggregate.mean_gain_vs_baseline * 100.0) + "% over " +
           std::to_string(result.per_trace.size()) + " traces");
      emit(out);
    } else if (*rp) {
      const auto result = suitap::replay::result_from_json(read_json_file(rp_result));
      std::vector<suitap::replay::OutlierReport> reports;
      reports.push_back(suitap::replay::summarize_outliers(result, rp_k, "adaptive"));
      for (const auto& psc : result.model_pscs.entries()) {
        reports.push_back(suitap::replay::summarize_outliers(result, rp_k, psc.id()));
      }
      const std::string csv = suitap::replay::outliers_csv(reports);
      write_text_file(rp_out, csv);
      note("report: wrote " + rp_out);
      emit(ordered_json{{"policies", reports.size()},
                        {"traces", result.per_trace.size()},
                        {"truncated", reports.front().truncated},
                        {"path", rp_out}});
    }
  } catch (const suitap::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const suitap::ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const suitap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
