#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fairicl/embedder.hpp"
#include "fairicl/metrics.hpp"
#include "fixtures.hpp"
#include "metric_fixtures.hpp"
#include "published_scores.hpp"

using namespace fairicl;
using fairicl::testing::ScriptedBackend;
using fairicl::testing::toy_record;
using fairicl::testing::toy_schema;

namespace {

bool same(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= 1e-12;
}

LabeledOutcomes make(std::vector<int> y, std::vector<int> y_hat, std::vector<int> z) {
  return testing::MetricFixture{"", std::move(y), std::move(y_hat), std::move(z), 0, 0, 0, 0, false}
      .outcomes();
}

}  // namespace

TEST_CASE("fixtures against hand-computed values") {
  for (const auto& f : testing::metric_fixtures()) {
    CAPTURE(f.name);
    const auto o = f.outcomes();
    CHECK(same(performance_error(o), f.pi));
    CHECK(same(fairness_error(o), f.psi));
    CHECK(same(disparate_impact(o), f.di));
    CHECK(std::abs(kappa(o) - f.kappa) <= 1e-9 * std::max(1.0, f.kappa));
    CHECK(group_rates(o).degenerate == f.degenerate);

    const auto m = classification_report(o, 0.5);
    CHECK(same(m.pi, f.pi));
    CHECK(same(m.psi, f.psi));
    CHECK(m.degenerate_group == f.degenerate);
    CHECK(m.pi + m.accuracy == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(same(m.e, 0.5 * f.pi + 0.5 * f.psi));
    CHECK(m.kappa >= 0.0);
    CHECK(m.confusion[0].n + m.confusion[1].n == o.y.size());
  }
}

TEST_CASE("parity keeps kappa near zero") {
  for (const auto& f : testing::metric_fixtures()) {
    const auto g = group_rates(f.outcomes());
    if (g.degenerate || g.rate[0] != g.rate[1] || g.rate[0] == 0.0) continue;
    CAPTURE(f.name);
    CHECK(kappa(f.outcomes(), 1e-5) <= 1e-4);
    CHECK(kappa(f.outcomes(), 1e-5) <= 2e-5 / g.rate[1]);
  }
}

TEST_CASE("classification report oracles") {
  SUBCASE("2x2 by hand") {
    const auto m = classification_report(make({1, 1, 0, 0}, {1, 0, 1, 0}, {0, 0, 1, 1}));
    CHECK(m.accuracy == 0.5);
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == 0.5);
  }
  SUBCASE("perfect") {
    const auto m = classification_report(make({1, 0, 1, 0}, {1, 0, 1, 0}, {0, 0, 1, 1}));
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SUBCASE("single class") {
    const auto m = classification_report(make({1, 1, 1}, {1, 1, 1}, {0, 1, 0}));
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SUBCASE("INVALID predicts neither class") {
    // Class 1: predicted at 1,5,6 (2 hits), support 3. Class 0: predicted at
    // 3 only (1 hit), support 3.
    const auto m = classification_report(make({1, 1, 0, 0, 1, 0}, {1, -1, 0, -1, 1, 1}, {0, 0, 0, 1, 1, 1}));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.precision == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0));
    CHECK(m.recall == doctest::Approx((2.0 / 3.0 + 1.0 / 3.0) / 2.0));
    CHECK(m.f1 == doctest::Approx((2.0 / 3.0 + 0.5) / 2.0));
    CHECK(m.invalid == 2);
    CHECK(m.confusion[0].tp == 1);
    CHECK(m.confusion[0].tn == 1);
    CHECK(m.confusion[0].invalid == 1);
    CHECK(m.confusion[1].tp == 1);
    CHECK(m.confusion[1].fp == 1);
    CHECK(m.confusion[1].invalid == 1);
  }
  SUBCASE("all invalid has zero precision") {
    const auto m = classification_report(make({1, 0}, {-1, -1}, {0, 1}));
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.accuracy == 0.0);
  }
}

TEST_CASE("combined error") {
  CHECK(combined_error(0.254, 0.150, 0.5) == doctest::Approx(0.202));
  CHECK(combined_error(0.272, 0.228, 0.5) == doctest::Approx(0.250));
  CHECK(combined_error(0.3, 0.9, 1.0) == 0.3);
  CHECK(combined_error(0.3, 0.9, 0.0) == 0.9);
  CHECK_THROWS_AS(combined_error(0.1, 0.1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(combined_error(0.1, 0.1, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(combined_error(0.1, 0.1, std::nan("")), std::invalid_argument);

  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double a = 0.0; a <= 1.0; a += 0.125) {
      for (double b = a; b <= 1.0; b += 0.125) {
        for (double other = 0.0; other <= 1.0; other += 0.25) {
          CHECK(combined_error(a, other, alpha) <= combined_error(b, other, alpha));
          CHECK(combined_error(other, a, alpha) <= combined_error(other, b, alpha));
          const double e = combined_error(b, other, alpha);
          CHECK(e >= 0.0);
          CHECK(e <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("published scores are consistent with the error blend") {
  for (const auto& row : testing::published_rows()) {
    CAPTURE(row.dataset + "/" + row.method + "/" + row.model);
    const double e = combined_error(row.pi, row.psi, 0.5);
    if (testing::is_known_inconsistent(row)) {
      CHECK(e == doctest::Approx(0.195));
      CHECK(row.e == 0.148);
    } else {
      CHECK(std::abs(e - row.e) <= 0.0005 + 1e-12);
    }
  }
}

TEST_CASE("psi is symmetric under swapping z and bounded") {
  std::mt19937_64 engine(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + engine() % 30;
    LabeledOutcomes o, swapped;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = static_cast<int>(engine() % 2);
      const int z = static_cast<int>(engine() % 2);
      const auto r = engine() % 3;
      const Label hat = r == 2 ? Label::Invalid : static_cast<Label>(r);
      o.y.push_back(y);
      o.z.push_back(z);
      o.y_hat.push_back(hat);
      swapped.y.push_back(y);
      swapped.z.push_back(1 - z);
      swapped.y_hat.push_back(hat);
    }
    const double psi = fairness_error(o);
    CHECK(psi == fairness_error(swapped));
    CHECK(psi >= 0.0);
    CHECK(psi <= 1.0);
    const auto m = classification_report(o);
    CHECK(m.pi + m.accuracy == doctest::Approx(1.0));
    CHECK(m.e >= 0.0);
    CHECK(m.e <= 1.0);
    CHECK(m.kappa >= 0.0);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(performance_error(LabeledOutcomes{}), std::invalid_argument);
  CHECK_THROWS_AS(performance_error(make({1, 0}, {1}, {0, 1})), std::invalid_argument);
  CHECK_THROWS_AS(performance_error(make({2}, {1}, {0})), std::invalid_argument);
  CHECK_THROWS_AS(kappa(make({1}, {1}, {0}), 0.0), std::invalid_argument);
}

TEST_CASE("metrics JSON round trip") {
  for (const auto& f : testing::metric_fixtures()) {
    const auto m = classification_report(f.outcomes(), 0.3, 1e-4);
    const auto j = to_json(m);
    CHECK(j.at("averaging") == "support-weighted");
    if (std::isinf(m.di)) CHECK(j.at("di") == "inf");
    const auto back = metrics_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.accuracy == m.accuracy);
    CHECK(back.kappa == m.kappa);
    CHECK(back.di == m.di);
    CHECK(back.e == m.e);
    CHECK(back.alpha == 0.3);
    CHECK(back.rho == 1e-4);
    CHECK(back.degenerate_group == m.degenerate_group);
    CHECK(back.confusion[1].fp == m.confusion[1].fp);
  }
}

TEST_CASE("proxy error evaluation") {
  const auto schema = toy_schema();
  const Dataset train(schema, {toy_record(0, "red", 1, true, 1), toy_record(1, "red", 2, false, 1),
                               toy_record(2, "blue", 3, true, 0), toy_record(3, "blue", 4, false, 0),
                               toy_record(4, "green", 5, false, 1)});
  const std::vector<RecordId> proxy{0, 1, 2, 3, 1};

  SUBCASE("echo backend gives (1 - alpha) psi") {
    // Echoes the true label by looking the query up in the training set.
    auto backend = std::make_shared<ScriptedBackend>([&](const PromptSpec& spec) {
      std::string out;
      for (const auto& q : spec.query_texts) {
        for (const auto& r : train.records()) {
          if (to_text(r, schema, false) == q) out += schema.label_surface(r.y) + "\n";
        }
      }
      return out;
    });
    Predictor predictor(backend, schema);
    const auto ev = evaluate_proxy_error(train, proxy, std::vector<RecordId>{4}, 0.3, predictor);
    // z=1: positions 0, 2 (y 1, 0) -> rate 0.5; z=0: positions 1, 3, 4 (y 1, 0, 1) -> 2/3.
    CHECK(ev.metrics.pi == 0.0);
    CHECK(ev.metrics.psi == doctest::Approx(2.0 / 3.0 - 0.5));
    CHECK(ev.error == doctest::Approx(0.7 * (2.0 / 3.0 - 0.5)));
    CHECK(ev.prediction.labels.size() == proxy.size());
  }
  SUBCASE("no ICEs with the mock backend is alpha times the positive rate") {
    auto embedder = std::make_shared<const LocalEmbedder>(schema, train);
    Predictor predictor(std::make_shared<MockKnnBackend>(schema, embedder, 3), schema);
    const auto ev = evaluate_proxy_error(train, proxy, std::vector<RecordId>{}, 0.5, predictor);
    // Proxy labels 1, 1, 0, 0, 1: three of five positive, every prediction 0.
    CHECK(ev.error == doctest::Approx(0.5 * 3.0 / 5.0));
    CHECK(ev.metrics.psi == 0.0);
  }
  SUBCASE("requests run in the selection phase") {
    std::size_t sent = 0;
    auto backend = std::make_shared<ScriptedBackend>([&](const PromptSpec& spec) {
      sent = spec.query_texts.size();
      return std::string();
    });
    Predictor predictor(backend, schema);
    std::vector<CallPhase> phases;
    predictor.set_observer([&](const PromptSpec& spec, CallPhase p) {
      phases.push_back(p);
      CHECK(spec.ice_ids == std::vector<RecordId>{4, 2});
      CHECK(spec.query_ids == proxy);
    });
    const auto ev = evaluate_proxy_error(train, proxy, std::vector<RecordId>{4, 2}, 0.5, predictor);
    CHECK(phases == std::vector<CallPhase>{CallPhase::Selection});
    CHECK(sent == 4);  // the duplicated proxy text is sent once
    CHECK(ev.metrics.pi == 1.0);
  }
  CHECK_THROWS(evaluate_proxy_error(train, std::vector<RecordId>{}, std::vector<RecordId>{}, 0.5,
                                    *std::make_unique<Predictor>(
                                        std::make_shared<ScriptedBackend>([](const PromptSpec&) {
                                          return std::string();
                                        }),
                                        schema)));
}
