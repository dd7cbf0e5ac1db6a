#include "suitap/featsel.hpp"

#include <algorithm>
#include <cmath>

#include "suitap/errors.hpp"

namespace suitap::featsel {

InvarianceReport invariance_filter(const EventCatalog& catalog,
                                   const std::map<std::string, std::vector<EptiVector>>& per_psc_epti,
                                   double threshold, InvarianceStatistic statistic) {
  if (per_psc_epti.empty()) throw DataError("invariance filter: no PSC groups supplied");
  const size_t n_windows = per_psc_epti.begin()->second.size();
  if (n_windows == 0) throw DataError("invariance filter: PSC groups are empty");
  for (const auto& [psc, windows] : per_psc_epti) {
    if (windows.size() != n_windows) {
      throw DataError("invariance filter: PSC '" + psc + "' supplies " + std::to_string(windows.size()) +
                      " windows, expected " + std::to_string(n_windows));
    }
    for (const auto& v : windows) {
      if (v.size() != catalog.size()) {
        throw DataError("invariance filter: E-PTI length mismatch under PSC '" + psc + "'");
      }
    }
  }

  InvarianceReport report;
  report.threshold = threshold;
  report.statistic = statistic;
  const double total_windows = static_cast<double>(per_psc_epti.size() * n_windows);
  for (const auto& event : catalog.events()) {
    std::vector<double> psc_means;
    psc_means.reserve(per_psc_epti.size());
    for (const auto& [psc, windows] : per_psc_epti) {
      double sum = 0.0;
      for (const auto& v : windows) sum += v[event.index];
      psc_means.push_back(sum / static_cast<double>(n_windows));
    }
    double grand = 0.0;
    for (const double m : psc_means) grand += m;
    grand /= static_cast<double>(psc_means.size());

    double value = 0.0;
    if (grand > 0.0) {
      if (statistic == InvarianceStatistic::kMeanDeviation) {
        for (const double m : psc_means) value = std::max(value, std::abs(m - grand) / grand);
      } else {
        double ss = 0.0;
        for (const auto& [psc, windows] : per_psc_epti) {
          for (const auto& v : windows) {
            const double d = v[event.index] - grand;
            ss += d * d;
          }
        }
        value = std::sqrt(ss / total_windows) / grand;
      }
    }
    EventInvariance stat;
    stat.event = event;
    stat.mean = grand;
    stat.max_relative_deviation = value;
    stat.invariant = value < threshold;
    if (stat.invariant) report.retained.push_back(event);
    report.per_event.push_back(std::move(stat));
  }
  return report;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // population variance
};

Moments column_moments(const Dataset& dataset, size_t event_index) {
  const double n = static_cast<double>(dataset.windows.size());
  Moments m;
  for (const auto& w : dataset.windows) m.mean += w.epti[event_index];
  m.mean /= n;
  for (const auto& w : dataset.windows) {
    const double d = w.epti[event_index] - m.mean;
    m.var += d * d;
  }
  m.var /= n;
  return m;
}

double pearson(const Dataset& dataset, size_t a, size_t b, const Moments& ma, const Moments& mb) {
  if (ma.var == 0.0 || mb.var == 0.0) return 0.0;  // constant columns carry no correlation
  double cov = 0.0;
  for (const auto& w : dataset.windows) cov += (w.epti[a] - ma.mean) * (w.epti[b] - mb.mean);
  cov /= static_cast<double>(dataset.windows.size());
  return cov / std::sqrt(ma.var * mb.var);
}

}  // namespace

std::vector<EventId> redundancy_prune(const Dataset& dataset, const std::vector<EventId>& candidates,
                                      double correlation_threshold, size_t max_features) {
  if (candidates.empty()) throw DataError("redundancy prune: no candidate events");
  if (dataset.windows.size() < 2) throw DataError("redundancy prune: need at least 2 windows");

  std::vector<Moments> moments(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) moments[i] = column_moments(dataset, candidates[i].index);

  std::vector<size_t> order(candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return moments[a].var > moments[b].var; });

  std::vector<EventId> retained;
  std::vector<size_t> retained_pos;
  for (const size_t i : order) {
    if (retained.size() >= max_features) break;
    bool redundant = false;
    for (const size_t j : retained_pos) {
      const double r = pearson(dataset, candidates[i].index, candidates[j].index, moments[i], moments[j]);
      if (std::abs(r) > correlation_threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) {
      retained.push_back(candidates[i]);
      retained_pos.push_back(i);
    }
  }
  return retained;
}

nlohmann::ordered_json report_to_json(const InvarianceReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["statistic"] =
      report.statistic == InvarianceStatistic::kMeanDeviation ? "mean-deviation" : "pooled-cv";
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : report.per_event) {
    events.push_back({{"index", e.event.index},
                      {"name", e.event.name},
                      {"mean", e.mean},
                      {"max_relative_deviation", e.max_relative_deviation},
                      {"invariant", e.invariant}});
  }
  j["events"] = std::move(events);
  auto retained = nlohmann::ordered_json::array();
  for (const auto& e : report.retained) retained.push_back(e.name);
  j["retained"] = std::move(retained);
  return j;
}

}  // namespace suitap::featsel
