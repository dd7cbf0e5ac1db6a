#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "suitap/errors.hpp"
#include "suitap/featsel.hpp"

using namespace suitap;

namespace {

// One window per PSC whose value IS the per-PSC mean, so deviations are exact.
std::map<std::string, std::vector<EptiVector>> two_psc_input(const std::vector<double>& means_a,
                                                             const std::vector<double>& means_b) {
  return {{"nl-no-no-no", {means_a}}, {"no-no-no-no", {means_b}}};
}

}  // namespace

TEST_CASE("an event identical under every PSC is invariant") {
  const auto catalog = EventCatalog::from_names({"E0"});
  const auto report = featsel::invariance_filter(catalog, two_psc_input({3.5}, {3.5}));
  CHECK(report.per_event[0].max_relative_deviation == 0.0);
  CHECK(report.per_event[0].invariant);
  REQUIRE(report.retained.size() == 1);
  CHECK(report.retained[0].name == "E0");
}

TEST_CASE("an event whose mean doubles under one PSC is rejected") {
  const auto catalog = EventCatalog::from_names({"E0"});
  const auto report = featsel::invariance_filter(catalog, two_psc_input({1.0}, {2.0}));
  // grand mean 1.5, deviation 0.5/1.5 = 1/3 >> 0.10
  CHECK(report.per_event[0].max_relative_deviation == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(report.per_event[0].invariant);
  CHECK(report.retained.empty());
}

TEST_CASE("zero-mean events count as invariant") {
  const auto catalog = EventCatalog::from_names({"E0"});
  const auto report = featsel::invariance_filter(catalog, two_psc_input({0.0}, {0.0}));
  CHECK(report.per_event[0].invariant);
  CHECK(report.per_event[0].mean == 0.0);
}

TEST_CASE("a planted deviation matrix keeps exactly the planted events") {
  // 12 events; 5 planted invariant (deviation 0.04), 7 not (deviation 0.16).
  std::vector<std::string> names;
  std::vector<double> a, b;
  std::set<std::string> planted;
  for (size_t e = 0; e < 12; ++e) {
    names.push_back("E" + std::to_string(e));
    const double mean = 1.0 + static_cast<double>(e);
    const double d = (e % 3 == 1) ? 0.04 : 0.16;
    if (e % 3 == 1) planted.insert(names.back());
    a.push_back(mean * (1.0 + d));
    b.push_back(mean * (1.0 - d));
  }
  const auto catalog = EventCatalog::from_names(names);
  const auto report = featsel::invariance_filter(catalog, two_psc_input(a, b), 0.10);
  std::set<std::string> retained;
  for (const auto& e : report.retained) retained.insert(e.name);
  CHECK(retained == planted);
}

TEST_CASE("invariance is scale-free") {
  rng::Stream stream(21);
  const auto catalog = EventCatalog::from_names({"E0", "E1", "E2"});
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EptiVector> group_a, group_b;
    for (int w = 0; w < 8; ++w) {
      EptiVector va(3), vb(3);
      for (size_t f = 0; f < 3; ++f) {
        va[f] = stream.next_double() * 10.0;
        vb[f] = stream.next_double() * 10.0;
      }
      group_a.push_back(va);
      group_b.push_back(vb);
    }
    std::map<std::string, std::vector<EptiVector>> input = {{"p0-a-b-c", group_a}, {"p1-a-b-c", group_b}};
    const auto before = featsel::invariance_filter(catalog, input, 0.10);

    const double c = 0.5 + stream.next_double() * 100.0;
    const size_t target = stream.index(3);
    for (auto& [psc, windows] : input) {
      for (auto& v : windows) v[target] *= c;
    }
    const auto after = featsel::invariance_filter(catalog, input, 0.10);
    CHECK(before.per_event[target].invariant == after.per_event[target].invariant);
  }
}

TEST_CASE("the pooled-CV statistic gates on spread, not mean shifts") {
  const auto catalog = EventCatalog::from_names({"E0"});
  // Identical per-PSC means but wide within-PSC spread: the mean-deviation
  // statistic passes, the pooled CV does not.
  std::map<std::string, std::vector<EptiVector>> input = {
      {"a-b-c-d", {{2.0}, {18.0}}},
      {"e-f-g-h", {{18.0}, {2.0}}},
  };
  const auto by_mean =
      featsel::invariance_filter(catalog, input, 0.10, featsel::InvarianceStatistic::kMeanDeviation);
  CHECK(by_mean.per_event[0].invariant);
  const auto by_cv =
      featsel::invariance_filter(catalog, input, 0.10, featsel::InvarianceStatistic::kPooledCv);
  CHECK_FALSE(by_cv.per_event[0].invariant);
  CHECK(by_cv.per_event[0].max_relative_deviation == doctest::Approx(0.8));  // sd 8 over mean 10
}

TEST_CASE("mismatched window counts across PSCs are rejected") {
  const auto catalog = EventCatalog::from_names({"E0"});
  std::map<std::string, std::vector<EptiVector>> input = {{"a-b-c-d", {{1.0}, {2.0}}}, {"e-f-g-h", {{1.0}}}};
  CHECK_THROWS_AS(featsel::invariance_filter(catalog, input), DataError);
  CHECK_THROWS_AS(featsel::invariance_filter(catalog, {}), DataError);
}

TEST_CASE("two perfectly correlated events keep exactly one") {
  Dataset ds = testutil::make_dataset(2, {"nl-no-no-no"});
  for (size_t i = 0; i < 16; ++i) {
    const double x = static_cast<double>(i);
    testutil::add_window(ds, "t", i, {x, 2.0 * x}, {1.0});  // r = 1, EV_1 has higher variance
  }
  const auto kept = featsel::redundancy_prune(ds, ds.events.events(), 0.9, 6);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].name == "EV_1");
}

TEST_CASE("six mutually uncorrelated events all survive") {
  rng::Stream stream(33);
  Dataset ds = testutil::make_dataset(6, {"nl-no-no-no"});
  for (size_t i = 0; i < 64; ++i) {
    EptiVector v(6);
    for (auto& x : v) x = stream.next_double() * 50.0;
    testutil::add_window(ds, "t", i, v, {1.0});
  }
  const auto kept = featsel::redundancy_prune(ds, ds.events.events(), 0.9, 6);
  CHECK(kept.size() == 6);
}

TEST_CASE("greedy retention matches the exhaustive max-variance uncorrelated subset") {
  // EV_0 and EV_1 are nearly collinear with var(EV_0) > var(EV_1); EV_2..EV_7
  // are independent with descending variance. The best size-6 subset under
  // the pairwise correlation cap is then {EV_0, EV_2, ..., EV_6}.
  rng::Stream stream(55);
  Dataset ds = testutil::make_dataset(8, {"nl-no-no-no"});
  const size_t n = 64;
  std::vector<EptiVector> rows(n, EptiVector(8, 0.0));
  for (size_t i = 0; i < n; ++i) {
    rows[i][0] = stream.gaussian(50.0, 10.0);
    rows[i][1] = 0.9 * rows[i][0] + stream.gaussian(5.0, 0.5);
    for (size_t f = 2; f < 8; ++f) {
      rows[i][f] = stream.gaussian(30.0, 9.0 - static_cast<double>(f));
    }
  }
  for (size_t i = 0; i < n; ++i) {
    for (auto& x : rows[i]) x = std::max(0.0, x);
    testutil::add_window(ds, "t", i, rows[i], {1.0});
  }

  const auto kept = featsel::redundancy_prune(ds, ds.events.events(), 0.9, 6);

  // Exhaustive search over all size-6 subsets: max total variance subject to
  // pairwise |r| <= 0.9.
  auto moments = [&](size_t f) {
    double mean = 0, var = 0;
    for (const auto& w : ds.windows) mean += w.epti[f];
    mean /= n;
    for (const auto& w : ds.windows) var += (w.epti[f] - mean) * (w.epti[f] - mean);
    return std::make_pair(mean, var / n);
  };
  auto corr = [&](size_t a, size_t b) {
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    double cov = 0;
    for (const auto& w : ds.windows) cov += (w.epti[a] - ma) * (w.epti[b] - mb);
    cov /= n;
    return cov / std::sqrt(va * vb);
  };
  double best_var = -1;
  uint32_t best_mask = 0;
  for (uint32_t mask = 0; mask < 256; ++mask) {
    if (__builtin_popcount(mask) != 6) continue;
    bool ok = true;
    double total = 0;
    for (size_t a = 0; a < 8 && ok; ++a) {
      if (!(mask & (1u << a))) continue;
      total += moments(a).second;
      for (size_t b = a + 1; b < 8 && ok; ++b) {
        if ((mask & (1u << b)) && std::abs(corr(a, b)) > 0.9) ok = false;
      }
    }
    if (ok && total > best_var) {
      best_var = total;
      best_mask = mask;
    }
  }
  std::set<std::string> expect;
  for (size_t f = 0; f < 8; ++f) {
    if (best_mask & (1u << f)) expect.insert("EV_" + std::to_string(f));
  }
  std::set<std::string> got;
  for (const auto& e : kept) got.insert(e.name);
  CHECK(got == expect);
}

TEST_CASE("pruned outputs respect the pairwise cap and the feature limit") {
  rng::Stream stream(77);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n_events = 4 + stream.index(8);
    Dataset ds = testutil::make_dataset(n_events, {"nl-no-no-no"});
    for (size_t i = 0; i < 40; ++i) {
      EptiVector v(n_events);
      for (auto& x : v) x = stream.next_double() * 20.0;
      if (n_events > 2 && stream.next_double() < 0.5) v[1] = v[0] * 1.5;  // force some redundancy
      testutil::add_window(ds, "t", i, v, {1.0});
    }
    const double cap = 0.8;
    const size_t max_features = 1 + stream.index(5);
    const auto kept = featsel::redundancy_prune(ds, ds.events.events(), cap, max_features);
    CHECK(kept.size() <= max_features);
    for (size_t a = 0; a < kept.size(); ++a) {
      for (size_t b = a + 1; b < kept.size(); ++b) {
        double ma = 0, mb = 0;
        for (const auto& w : ds.windows) {
          ma += w.epti[kept[a].index];
          mb += w.epti[kept[b].index];
        }
        ma /= 40;
        mb /= 40;
        double va = 0, vb = 0, cov = 0;
        for (const auto& w : ds.windows) {
          va += (w.epti[kept[a].index] - ma) * (w.epti[kept[a].index] - ma);
          vb += (w.epti[kept[b].index] - mb) * (w.epti[kept[b].index] - mb);
          cov += (w.epti[kept[a].index] - ma) * (w.epti[kept[b].index] - mb);
        }
        if (va > 0 && vb > 0) CHECK(std::abs(cov / std::sqrt(va * vb)) <= cap + 1e-12);
      }
    }
  }
}

TEST_CASE("filtering is deterministic") {
  const auto catalog = EventCatalog::from_names({"E0", "E1"});
  const auto input = two_psc_input({1.0, 5.0}, {1.05, 6.0});
  const auto r1 = featsel::invariance_filter(catalog, input);
  const auto r2 = featsel::invariance_filter(catalog, input);
  REQUIRE(r1.per_event.size() == r2.per_event.size());
  for (size_t i = 0; i < r1.per_event.size(); ++i) {
    CHECK(r1.per_event[i].max_relative_deviation == r2.per_event[i].max_relative_deviation);
    CHECK(r1.per_event[i].invariant == r2.per_event[i].invariant);
  }
}
