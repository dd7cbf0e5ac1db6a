#include "suitap/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "suitap/errors.hpp"
#include "suitap/hwsim.hpp"
#include "suitap/rng.hpp"

namespace suitap::replay {

namespace {

struct TraceSpan {
  std::string trace_id;
  size_t begin = 0;
  size_t end = 0;
};

std::vector<TraceSpan> trace_spans(const Dataset& dataset) {
  std::vector<TraceSpan> spans;
  for (size_t i = 0; i < dataset.windows.size(); ++i) {
    if (spans.empty() || spans.back().trace_id != dataset.windows[i].trace_id) {
      spans.push_back(TraceSpan{dataset.windows[i].trace_id, i, i + 1});
    } else {
      if (dataset.windows[i].window_index != dataset.windows[i - 1].window_index + 1) {
        throw DataError("replay: trace '" + spans.back().trace_id + "' is not contiguous at window " +
                        std::to_string(dataset.windows[i].window_index));
      }
      spans.back().end = i + 1;
    }
  }
  return spans;
}

}  // namespace

ReplayResult run_replay(const Dataset& dataset, const nodemem::ModelBundle& bundle,
                        const std::string& initial_psc, const std::string& baseline_psc,
                        double transition_penalty) {
  if (dataset.windows.empty()) throw DataError("replay: empty dataset");
  if (!(transition_penalty >= 0.0 && transition_penalty < 1.0)) {
    throw UsageError("replay: transition penalty must lie in [0, 1)");
  }

  const PscCatalog& model_pscs = bundle.meta.pscs;
  // Model choices index into the dataset's IPC columns by PSC id.
  std::vector<size_t> ipc_column(model_pscs.size());
  for (size_t c = 0; c < model_pscs.size(); ++c) {
    const auto idx = dataset.pscs.index_of(model_pscs.at(c).id());
    if (!idx) throw DataError("replay: model PSC '" + model_pscs.at(c).id() + "' missing from dataset");
    ipc_column[c] = *idx;
  }
  const auto initial = model_pscs.index_of(initial_psc);
  if (!initial) throw UsageError("replay: initial PSC '" + initial_psc + "' is not in the model catalog");
  const auto baseline = model_pscs.index_of(baseline_psc);
  if (!baseline) throw UsageError("replay: baseline PSC '" + baseline_psc + "' is not in the model catalog");

  std::vector<size_t> feature_column(bundle.meta.feature_order.size());
  for (size_t f = 0; f < feature_column.size(); ++f) {
    const auto idx = dataset.events.index_of(bundle.meta.feature_order[f].name);
    if (!idx) throw DataError("replay: model feature '" + bundle.meta.feature_order[f].name + "' missing from dataset");
    feature_column[f] = *idx;
  }

  ReplayResult result;
  result.model_pscs = model_pscs;
  result.initial_psc = initial_psc;
  result.baseline_psc = baseline_psc;

  std::vector<double> projected(feature_column.size());
  for (const auto& span : trace_spans(dataset)) {
    TraceScore score;
    score.static_ipc.assign(model_pscs.size(), 0.0);
    double adaptive_sum = 0.0;
    double oracle_sum = 0.0;
    size_t choice = *initial;
    bool switched = false;
    const double n_windows = static_cast<double>(span.end - span.begin);

    for (size_t i = span.begin; i < span.end; ++i) {
      const auto& w = dataset.windows[i];
      double realized = w.ipc_by_psc[ipc_column[choice]];
      if (switched && transition_penalty > 0.0) realized *= 1.0 - transition_penalty;
      adaptive_sum += realized;
      double window_best = 0.0;
      for (size_t c = 0; c < model_pscs.size(); ++c) {
        const double ipc = w.ipc_by_psc[ipc_column[c]];
        score.static_ipc[c] += ipc;
        window_best = std::max(window_best, ipc);
      }
      oracle_sum += window_best;

      for (size_t f = 0; f < feature_column.size(); ++f) projected[f] = w.epti[feature_column[f]];
      const hwsim::Decision decision = hwsim::evaluate_bundle(bundle, projected);
      switched = decision.class_id != choice;
      choice = decision.class_id;
      result.aggregate.decision_count += 1;
      result.aggregate.max_comparison_count =
          std::max(result.aggregate.max_comparison_count, decision.state.comparison_count);
      result.aggregate.memory_access_count += decision.state.memory_access_count;
    }

    score.adaptive_ipc = adaptive_sum / n_windows;
    score.oracle_ipc = oracle_sum / n_windows;
    for (auto& s : score.static_ipc) s /= n_windows;
    result.per_trace.emplace_back(span.trace_id, std::move(score));
  }

  double gain_sum = 0.0;
  double max_gain = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [trace, score] : result.per_trace) {
    const double gain = score.adaptive_ipc / score.static_ipc[*baseline] - 1.0;
    gain_sum += gain;
    max_gain = std::max(max_gain, gain);
    worst = std::min(worst, gain);
  }
  result.aggregate.mean_gain_vs_baseline = gain_sum / static_cast<double>(result.per_trace.size());
  result.aggregate.max_gain = max_gain;
  result.aggregate.worst_loss = worst;
  return result;
}

OracleReport oracle_policy(const Dataset& dataset) {
  if (dataset.windows.empty()) throw DataError("oracle: empty dataset");
  OracleReport report;
  std::map<std::string, std::pair<double, size_t>> sums;
  for (const auto& w : dataset.windows) {
    const auto [min_it, max_it] = std::minmax_element(w.ipc_by_psc.begin(), w.ipc_by_psc.end());
    auto& [sum, count] = sums[w.trace_id];
    sum += *max_it;
    count += 1;
    report.max_swing = std::max(report.max_swing, *max_it / *min_it - 1.0);
  }
  for (const auto& [trace, sc] : sums) report.per_trace_ipc[trace] = sc.first / static_cast<double>(sc.second);
  return report;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.phases.empty()) throw UsageError("synthetic: no phases");
  if (spec.events.empty() || spec.pscs.empty()) throw UsageError("synthetic: events and PSCs must be non-empty");
  if (spec.n_traces == 0) throw UsageError("synthetic: n_traces must be >= 1");
  for (const auto& phase : spec.phases) {
    if (phase.length_windows == 0) throw UsageError("synthetic: phase length must be >= 1");
    if (phase.feature_means.size() != spec.events.size()) {
      throw UsageError("synthetic: phase feature means do not match the event catalog");
    }
    if (phase.best_psc >= spec.pscs.size()) throw UsageError("synthetic: phase best PSC out of range");
    if (!(phase.ipc_best > phase.ipc_other) || !(phase.ipc_other > 0.0)) {
      throw UsageError("synthetic: phase requires ipc_best > ipc_other > 0");
    }
    if (phase.noise_sigma < 0.0) throw UsageError("synthetic: noise sigma must be >= 0");
  }

  Dataset dataset;
  dataset.events = spec.events;
  dataset.pscs = spec.pscs;
  dataset.window_size_instructions = spec.window_size_instructions;

  const double per_thousand = static_cast<double>(spec.window_size_instructions) / 1000.0;
  const rng::Stream base = rng::Stream(spec.seed).derive("synth");
  for (size_t t = 0; t < spec.n_traces; ++t) {
    rng::Stream stream = base.derive(t);
    uint64_t window_index = 0;
    for (const auto& phase : spec.phases) {
      for (uint64_t i = 0; i < phase.length_windows; ++i) {
        WindowRecord rec;
        rec.trace_id = "synthetic-" + std::to_string(t);
        rec.window_index = window_index++;
        rec.instructions = spec.window_size_instructions;
        rec.event_counts.reserve(spec.events.size());
        for (const double mean : phase.feature_means) {
          const double value = std::max(0.0, stream.gaussian(mean, phase.noise_sigma));
          rec.event_counts.push_back(static_cast<uint64_t>(std::llround(value * per_thousand)));
        }
        rec.epti = compute_epti(rec.event_counts, rec.instructions);
        rec.ipc_by_psc.assign(spec.pscs.size(), phase.ipc_other);
        rec.ipc_by_psc[phase.best_psc] = phase.ipc_best;
        dataset.windows.push_back(std::move(rec));
      }
    }
  }
  return dataset;
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (!j.is_object()) throw DataError("synthetic spec: expected a JSON object");
  spec.seed = j.value("seed", uint64_t{0});
  spec.n_traces = j.value("n_traces", size_t{1});
  spec.window_size_instructions = j.value("window_size_instructions", uint64_t{1'000'000});
  if (!j.contains("events") || !j.contains("pscs") || !j.contains("phases")) {
    throw DataError("synthetic spec: requires 'events', 'pscs', and 'phases'");
  }
  spec.events = EventCatalog::from_names(j.at("events").get<std::vector<std::string>>());
  spec.pscs = PscCatalog::from_ids(j.at("pscs").get<std::vector<std::string>>());
  for (const auto& pj : j.at("phases")) {
    SyntheticPhase phase;
    phase.length_windows = pj.at("length_windows").get<uint64_t>();
    phase.feature_means = pj.at("feature_means").get<std::vector<double>>();
    phase.noise_sigma = pj.value("noise_sigma", 0.0);
    phase.best_psc = pj.at("best_psc").get<size_t>();
    phase.ipc_best = pj.value("ipc_best", 2.0);
    phase.ipc_other = pj.value("ipc_other", 1.0);
    spec.phases.push_back(std::move(phase));
  }
  return spec;
}

OutlierReport summarize_outliers(const ReplayResult& result, size_t k, const std::string& policy) {
  if (result.per_trace.empty()) throw DataError("outliers: empty replay result");
  const auto baseline = result.model_pscs.index_of(result.baseline_psc);
  if (!baseline) throw DataError("outliers: result lacks its baseline column");

  std::optional<size_t> static_column;
  if (policy != "adaptive") {
    static_column = result.model_pscs.index_of(policy);
    if (!static_column) throw UsageError("outliers: unknown policy '" + policy + "'");
  }

  OutlierReport report;
  report.policy = policy;
  std::vector<OutlierRow> rows;
  for (const auto& [trace, score] : result.per_trace) {
    const double ipc = static_column ? score.static_ipc[*static_column] : score.adaptive_ipc;
    rows.push_back(OutlierRow{trace, ipc / score.static_ipc[*baseline] - 1.0});
  }
  report.truncated = k > rows.size();

  std::sort(rows.begin(), rows.end(), [](const OutlierRow& a, const OutlierRow& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.trace_id < b.trace_id;
  });
  const size_t take = std::min(k, rows.size());
  report.best.assign(rows.begin(), rows.begin() + take);
  report.worst.assign(rows.rbegin(), rows.rbegin() + take);
  return report;
}

std::string outliers_csv(const std::vector<OutlierReport>& reports) {
  std::ostringstream out;
  out << "side,rank,trace_id,policy,gain\n";
  for (const auto& report : reports) {
    for (size_t i = 0; i < report.best.size(); ++i) {
      out << "best," << (i + 1) << ',' << report.best[i].trace_id << ',' << report.policy << ','
          << report.best[i].gain << '\n';
    }
    for (size_t i = 0; i < report.worst.size(); ++i) {
      out << "worst," << (i + 1) << ',' << report.worst[i].trace_id << ',' << report.policy << ','
          << report.worst[i].gain << '\n';
    }
  }
  return out.str();
}

nlohmann::ordered_json result_to_json(const ReplayResult& result) {
  nlohmann::ordered_json j;
  j["pscs"] = result.model_pscs.ids();
  j["initial"] = result.initial_psc;
  j["baseline"] = result.baseline_psc;
  auto traces = nlohmann::ordered_json::object();
  for (const auto& [trace, score] : result.per_trace) {
    auto statics = nlohmann::ordered_json::object();
    for (size_t c = 0; c < result.model_pscs.size(); ++c) {
      statics[result.model_pscs.at(c).id()] = score.static_ipc[c];
    }
    traces[trace] = {{"adaptive_ipc", score.adaptive_ipc},
                     {"oracle_ipc", score.oracle_ipc},
                     {"static_ipc", std::move(statics)}};
  }
  j["per_trace"] = std::move(traces);
  j["aggregate"] = {{"mean_gain_vs_baseline", result.aggregate.mean_gain_vs_baseline},
                    {"max_gain", result.aggregate.max_gain},
                    {"worst_loss", result.aggregate.worst_loss},
                    {"decision_count", result.aggregate.decision_count},
                    {"max_comparison_count", result.aggregate.max_comparison_count},
                    {"memory_access_count", result.aggregate.memory_access_count}};
  return j;
}

ReplayResult result_from_json(const nlohmann::json& j) {
  ReplayResult result;
  result.model_pscs = PscCatalog::from_ids(j.at("pscs").get<std::vector<std::string>>());
  result.initial_psc = j.at("initial").get<std::string>();
  result.baseline_psc = j.at("baseline").get<std::string>();
  for (const auto& [trace, sj] : j.at("per_trace").items()) {
    TraceScore score;
    score.adaptive_ipc = sj.at("adaptive_ipc").get<double>();
    score.oracle_ipc = sj.at("oracle_ipc").get<double>();
    score.static_ipc.assign(result.model_pscs.size(), 0.0);
    for (const auto& [psc, ipc] : sj.at("static_ipc").items()) {
      const auto idx = result.model_pscs.index_of(psc);
      if (!idx) throw DataError("replay result: unknown PSC '" + psc + "'");
      score.static_ipc[*idx] = ipc.get<double>();
    }
    result.per_trace.emplace_back(trace, std::move(score));
  }
  const auto& agg = j.at("aggregate");
  result.aggregate.mean_gain_vs_baseline = agg.at("mean_gain_vs_baseline").get<double>();
  result.aggregate.max_gain = agg.at("max_gain").get<double>();
  result.aggregate.worst_loss = agg.at("worst_loss").get<double>();
  result.aggregate.decision_count = agg.at("decision_count").get<uint64_t>();
  result.aggregate.max_comparison_count = agg.value("max_comparison_count", uint64_t{0});
  result.aggregate.memory_access_count = agg.value("memory_access_count", uint64_t{0});
  return result;
}

}  // namespace suitap::replay
