#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "suitap/core.hpp"

namespace suitap::featsel {

struct EventInvariance {
  EventId event;
  double mean = 0.0;                    // grand mean of per-PSC means
  double max_relative_deviation = 0.0;  // max over PSCs of |psc_mean - mean| / mean
  bool invariant = false;
};

// Which insensitivity statistic gates an event:
//   kMeanDeviation: max over PSCs of |psc_mean - grand_mean| / grand_mean
//   kPooledCv:      stddev over all windows of all PSCs / grand_mean
enum class InvarianceStatistic { kMeanDeviation, kPooledCv };

struct InvarianceReport {
  double threshold = 0.10;
  InvarianceStatistic statistic = InvarianceStatistic::kMeanDeviation;
  std::vector<EventInvariance> per_event;  // catalog order
  std::vector<EventId> retained;           // invariant events, catalog order
};

// Flags an event as hardware-invariant when its chosen statistic stays below
// `threshold`. Events whose grand mean is zero carry no PSC signal and count
// as invariant. Every PSC must supply the same number of windows.
InvarianceReport invariance_filter(const EventCatalog& catalog,
                                   const std::map<std::string, std::vector<EptiVector>>& per_psc_epti,
                                   double threshold = 0.10,
                                   InvarianceStatistic statistic = InvarianceStatistic::kMeanDeviation);

// Greedy retention in descending variance order; a candidate is dropped when
// its absolute Pearson correlation with an already-retained event exceeds
// correlation_threshold. Output order is retention order, capped at
// max_features.
std::vector<EventId> redundancy_prune(const Dataset& dataset, const std::vector<EventId>& candidates,
                                      double correlation_threshold = 0.9, size_t max_features = 6);

nlohmann::ordered_json report_to_json(const InvarianceReport& report);

}  // namespace suitap::featsel
