#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairicl/dataset.hpp"
#include "fairicl/predictor.hpp"

namespace fairicl {

inline constexpr double kDefaultRho = 1e-5;

/// Positional ground truth, predictions and sensitive attribute.
struct LabeledOutcomes {
  std::vector<int> y;
  std::vector<Label> y_hat;
  std::vector<int> z;

  // Throws std::invalid_argument on empty or ragged input, or values outside
  // {0, 1}.
  void validate() const;
};

// Positive-prediction rates per sensitive group. INVALID counts as a
// negative prediction; an empty group has rate 0 and sets `degenerate`.
struct GroupRates {
  std::array<std::size_t, 2> size{};
  std::array<std::size_t, 2> positives{};
  std::array<double, 2> rate{};
  bool degenerate = false;
};

struct GroupConfusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t invalid = 0;
  std::size_t n = 0;
};

struct MetricsBundle {
  std::size_t count = 0;
  std::size_t invalid = 0;
  double accuracy = 0.0;
  // Support-weighted averages over the two classes.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double pi = 0.0;
  double psi = 0.0;
  double di = 0.0;  // +inf when group 1 has no positive predictions
  double kappa = 0.0;
  double e = 0.0;
  double alpha = 0.5;
  double rho = kDefaultRho;
  bool degenerate_group = false;
  std::array<GroupConfusion, 2> confusion{};
};

// Fraction of positions with y_hat != y; INVALID is always wrong.
double performance_error(const LabeledOutcomes& o);
GroupRates group_rates(const LabeledOutcomes& o);
// |P(y_hat=1 | z=0) - P(y_hat=1 | z=1)|, 0 when a group is empty.
double fairness_error(const LabeledOutcomes& o);
// alpha * pi + (1 - alpha) * psi; throws std::invalid_argument unless
// alpha is in [0, 1].
double combined_error(double pi, double psi, double alpha);
// rate0 / rate1, or +inf when rate1 is 0.
double disparate_impact(const LabeledOutcomes& o);
// |1 - rate0 / (rate1 + rho)|
double kappa(const LabeledOutcomes& o, double rho = kDefaultRho);

MetricsBundle classification_report(const LabeledOutcomes& o, double alpha = 0.5,
                                    double rho = kDefaultRho);

nlohmann::json to_json(const MetricsBundle& m);
MetricsBundle metrics_from_json(const nlohmann::json& j);

struct ProxyEvaluation {
  double error = 0.0;
  MetricsBundle metrics;
  PredictionResult prediction;
};

/// Scores an ICE set against a batch's proxy (dynamic validation) set: the
/// proxy records are classified with `ice_ids` as demonstrations and compared
/// against their known training labels. `ice_ids` order is the prompt order.
ProxyEvaluation evaluate_proxy_error(const Dataset& train, std::span<const RecordId> proxy,
                                     std::span<const RecordId> ice_ids, double alpha,
                                     Predictor& predictor, double rho = kDefaultRho);

}  // namespace fairicl
