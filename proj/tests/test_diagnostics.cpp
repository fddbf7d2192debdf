#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blockgibbs/diagnostics.hpp"
#include "blockgibbs/rng.hpp"

using namespace blockgibbs;

namespace {

ChainTrace trace_from(const std::vector<std::vector<int>>& assignments) {
  ChainTrace trace;
  for (std::size_t t = 0; t < assignments.size(); ++t) {
    TraceRecord rec;
    rec.iteration = static_cast<long>(t);
    rec.assignment = assignments[t];
    rec.log_density = 0.0;
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace

TEST_CASE("psm of a single sample is an indicator matrix") {
  const auto trace = trace_from({{0, 0, 1, 2}});
  const auto p = psm(trace);
  CHECK(p.n == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(p.entries(i, i) == 1.0);
    for (int j = 0; j < 4; ++j) {
      CHECK((p.entries(i, j) == 0.0 || p.entries(i, j) == 1.0));
      CHECK(p.entries(i, j) == p.entries(j, i));
    }
  }
  CHECK(p.entries(0, 1) == 1.0);
  CHECK(p.entries(0, 2) == 0.0);
}

TEST_CASE("identical samples give the single-sample psm") {
  const std::vector<int> a = {0, 1, 1, 0};
  const auto one = psm(trace_from({a}));
  const auto many = psm(trace_from({a, a, a, a}));
  CHECK((one.entries - many.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alternating allocations give hand-counted co-clustering rates") {
  const std::vector<int> a = {0, 0, 1};
  const std::vector<int> b = {0, 1, 1};
  const auto p = psm(trace_from({a, b, a, b}));
  CHECK(p.entries(0, 1) == doctest::Approx(0.5));
  CHECK(p.entries(1, 2) == doctest::Approx(0.5));
  CHECK(p.entries(0, 2) == doctest::Approx(0.0));
  CHECK(p.entries(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("psm depends only on co-membership, not labels") {
  const auto p1 = psm(trace_from({{0, 0, 1, 2}, {0, 1, 1, 2}}));
  const auto p2 = psm(trace_from({{2, 2, 0, 1}, {1, 2, 2, 0}}));
  CHECK((p1.entries - p2.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psm of concatenated traces is the sample-weighted average") {
  Rng rng(3);
  std::vector<std::vector<int>> first, second;
  for (int t = 0; t < 7; ++t) {
    std::vector<int> a(5);
    for (int& x : a) x = static_cast<int>(rng.uniform_int(3));
    first.push_back(a);
  }
  for (int t = 0; t < 13; ++t) {
    std::vector<int> a(5);
    for (int& x : a) x = static_cast<int>(rng.uniform_int(3));
    second.push_back(a);
  }
  std::vector<std::vector<int>> both = first;
  both.insert(both.end(), second.begin(), second.end());
  const auto pa = psm(trace_from(first));
  const auto pb = psm(trace_from(second));
  const auto pc = psm(trace_from(both));
  const Eigen::MatrixXd expected = (7.0 * pa.entries + 13.0 * pb.entries) / 20.0;
  CHECK((pc.entries - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("psm respects burn-in and thinning and rejects empty retention") {
  const std::vector<int> a = {0, 0};
  const std::vector<int> b = {0, 1};
  const auto p = psm(trace_from({b, a, b, a}), 1, 2);  // retains records 1, 3
  CHECK(p.entries(0, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(psm(trace_from({a}), 5, 1), EmptyTrace);
}

TEST_CASE("acf of an iid indicator is near zero at lag one") {
  Rng rng(11);
  std::vector<std::vector<int>> assignments;
  for (int t = 0; t < 100000; ++t) {
    assignments.push_back({static_cast<int>(rng.uniform_int(2))});
  }
  const auto series = acf_binary(trace_from(assignments), 0, {1}, 5);
  CHECK(series.values[0] == 1.0);
  CHECK(std::abs(series.values[1]) < 0.02);
}

TEST_CASE("acf of a strictly alternating indicator is minus one at lag one") {
  std::vector<std::vector<int>> assignments;
  for (int t = 0; t < 10000; ++t) assignments.push_back({t % 2});
  const auto series = acf_binary(trace_from(assignments), 0, {1}, 3);
  CHECK(std::abs(series.values[1] + 1.0) < 2.0 / std::sqrt(10000.0));
}

TEST_CASE("acf of a sticky two-state chain matches the analytic rate") {
  // flip probability q gives lag-one autocorrelation 1 - 2q
  Rng rng(13);
  const double q = 0.05;
  std::vector<std::vector<int>> assignments;
  int current = 0;
  for (int t = 0; t < 100000; ++t) {
    if (rng.uniform() < q) current = 1 - current;
    assignments.push_back({current});
  }
  const auto series = acf_binary(trace_from(assignments), 0, {1}, 2);
  CHECK(std::abs(series.values[1] - 0.9) < 0.02);
}

TEST_CASE("acf magnitudes never exceed one") {
  Rng rng(17);
  std::vector<std::vector<int>> assignments;
  int current = 0;
  for (int t = 0; t < 500; ++t) {
    if (rng.uniform() < 0.3) current = 1 - current;
    assignments.push_back({current});
  }
  const auto series = acf_binary(trace_from(assignments), 0, {1}, 100);
  for (double v : series.values) CHECK(std::abs(v) <= 1.0 + 1e-12);
}

TEST_CASE("acf is invariant under complementing the component set") {
  Rng rng(19);
  std::vector<std::vector<int>> assignments;
  for (int t = 0; t < 2000; ++t) {
    assignments.push_back({static_cast<int>(rng.uniform_int(3))});
  }
  const auto trace = trace_from(assignments);
  const auto direct = acf_binary(trace, 0, {0}, 10);
  const auto complement = acf_binary(trace, 0, {1, 2}, 10);
  for (int lag = 0; lag <= 10; ++lag) {
    CHECK(std::abs(direct.values[lag] - complement.values[lag]) < 1e-12);
  }
}

TEST_CASE("acf rejects a constant series") {
  std::vector<std::vector<int>> assignments(100, {1});
  CHECK_THROWS_AS(acf_binary(trace_from(assignments), 0, {1}, 5), DegenerateSeries);
}

TEST_CASE("acceptance_report summarizes block moves") {
  ChainTrace trace;
  SUBCASE("no block moves") {
    trace.records.resize(3);
    const auto summary = acceptance_report(trace);
    CHECK(summary.moves == 0);
    CHECK(summary.rate == 0.0);
  }
  SUBCASE("all accepted") {
    for (int t = 0; t < 5; ++t) {
      TraceRecord rec;
      rec.block_move = BlockMoveRecord{{0, 1}, true, 1.0, 1};
      trace.records.push_back(rec);
    }
    const auto summary = acceptance_report(trace);
    CHECK(summary.moves == 5);
    CHECK(summary.rate == doctest::Approx(1.0));
  }
  SUBCASE("seven accepts and three rejects") {
    for (int t = 0; t < 10; ++t) {
      TraceRecord rec;
      rec.block_move = BlockMoveRecord{{0}, t < 7, 0.5, t < 7 ? 1 : 2};
      trace.records.push_back(rec);
    }
    const auto summary = acceptance_report(trace);
    CHECK(summary.moves == 10);
    CHECK(summary.rate == doctest::Approx(0.7));
    CHECK(summary.mean_ratio == doctest::Approx(0.5));
    CHECK(summary.retry_histogram.at(1) == 7);
    CHECK(summary.retry_histogram.at(2) == 3);
  }
}
