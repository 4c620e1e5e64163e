#include "fairicl/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fairicl {

void LabeledOutcomes::validate() const {
  if (y.empty()) throw std::invalid_argument("outcomes are empty");
  if (y.size() != y_hat.size() || y.size() != z.size()) {
    throw std::invalid_argument("outcomes have unequal lengths");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if ((y[i] != 0 && y[i] != 1) || (z[i] != 0 && z[i] != 1)) {
      throw std::invalid_argument("y and z must be 0 or 1 (position " + std::to_string(i) + ")");
    }
  }
}

double performance_error(const LabeledOutcomes& o) {
  o.validate();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < o.y.size(); ++i) {
    if (o.y_hat[i] == Label::Invalid || static_cast<int>(o.y_hat[i]) != o.y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(o.y.size());
}

GroupRates group_rates(const LabeledOutcomes& o) {
  o.validate();
  GroupRates g;
  for (std::size_t i = 0; i < o.y.size(); ++i) {
    const auto z = static_cast<std::size_t>(o.z[i]);
    ++g.size[z];
    if (o.y_hat[i] == Label::Positive) ++g.positives[z];
  }
  for (std::size_t z = 0; z < 2; ++z) {
    g.rate[z] = g.size[z] == 0 ? 0.0
                               : static_cast<double>(g.positives[z]) / static_cast<double>(g.size[z]);
  }
  g.degenerate = g.size[0] == 0 || g.size[1] == 0;
  return g;
}

double fairness_error(const LabeledOutcomes& o) {
  const auto g = group_rates(o);
  return g.degenerate ? 0.0 : std::abs(g.rate[0] - g.rate[1]);
}

double combined_error(double pi, double psi, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must be in [0, 1], got " + std::to_string(alpha));
  }
  return alpha * pi + (1.0 - alpha) * psi;
}

double disparate_impact(const LabeledOutcomes& o) {
  const auto g = group_rates(o);
  if (g.rate[1] == 0.0) return std::numeric_limits<double>::infinity();
  return g.rate[0] / g.rate[1];
}

double kappa(const LabeledOutcomes& o, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  const auto g = group_rates(o);
  return std::abs(1.0 - g.rate[0] / (g.rate[1] + rho));
}

MetricsBundle classification_report(const LabeledOutcomes& o, double alpha, double rho) {
  o.validate();
  MetricsBundle m;
  m.count = o.y.size();
  m.alpha = alpha;
  m.rho = rho;

  // Per-class counts for the weighted averages; INVALID predicts neither class.
  std::array<std::size_t, 2> support{};
  std::array<std::size_t, 2> predicted{};
  std::array<std::size_t, 2> hits{};
  for (std::size_t i = 0; i < m.count; ++i) {
    const int y = o.y[i];
    auto& c = m.confusion[static_cast<std::size_t>(o.z[i])];
    ++c.n;
    ++support[static_cast<std::size_t>(y)];
    if (o.y_hat[i] == Label::Invalid) {
      ++c.invalid;
      ++m.invalid;
      continue;
    }
    const int p = static_cast<int>(o.y_hat[i]);
    ++predicted[static_cast<std::size_t>(p)];
    if (p == y) ++hits[static_cast<std::size_t>(y)];
    if (p == 1 && y == 1) ++c.tp;
    if (p == 1 && y == 0) ++c.fp;
    if (p == 0 && y == 0) ++c.tn;
    if (p == 0 && y == 1) ++c.fn;
  }
  const auto n = static_cast<double>(m.count);
  m.accuracy = static_cast<double>(hits[0] + hits[1]) / n;
  for (std::size_t c = 0; c < 2; ++c) {
    const double precision =
        predicted[c] == 0 ? 0.0 : static_cast<double>(hits[c]) / static_cast<double>(predicted[c]);
    const double recall =
        support[c] == 0 ? 0.0 : static_cast<double>(hits[c]) / static_cast<double>(support[c]);
    const double f1 =
        precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    const double weight = static_cast<double>(support[c]) / n;
    m.precision += weight * precision;
    m.recall += weight * recall;
    m.f1 += weight * f1;
  }
  m.pi = performance_error(o);
  const auto g = group_rates(o);
  m.degenerate_group = g.degenerate;
  m.psi = fairness_error(o);
  m.di = disparate_impact(o);
  m.kappa = kappa(o, rho);
  m.e = combined_error(m.pi, m.psi, alpha);
  return m;
}

namespace {

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricsBundle& m) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& c : m.confusion) {
    groups.push_back({{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn},
                      {"invalid", c.invalid}, {"n", c.n}});
  }
  return {{"count", m.count},
          {"invalid", m.invalid},
          {"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"averaging", "support-weighted"},
          {"pi", m.pi},
          {"psi", m.psi},
          {"di", number_or_inf(m.di)},
          {"kappa", m.kappa},
          {"e", m.e},
          {"alpha", m.alpha},
          {"rho", m.rho},
          {"degenerate_group", m.degenerate_group},
          {"confusion_by_z", std::move(groups)}};
}

MetricsBundle metrics_from_json(const nlohmann::json& j) {
  MetricsBundle m;
  m.count = j.at("count").get<std::size_t>();
  m.invalid = j.at("invalid").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.pi = j.at("pi").get<double>();
  m.psi = j.at("psi").get<double>();
  m.di = number_from(j.at("di"));
  m.kappa = j.at("kappa").get<double>();
  m.e = j.at("e").get<double>();
  m.alpha = j.at("alpha").get<double>();
  m.rho = j.at("rho").get<double>();
  m.degenerate_group = j.at("degenerate_group").get<bool>();
  const auto& groups = j.at("confusion_by_z");
  for (std::size_t z = 0; z < 2; ++z) {
    auto& c = m.confusion[z];
    c.tp = groups.at(z).at("tp").get<std::size_t>();
    c.fp = groups.at(z).at("fp").get<std::size_t>();
    c.tn = groups.at(z).at("tn").get<std::size_t>();
    c.fn = groups.at(z).at("fn").get<std::size_t>();
    c.invalid = groups.at(z).at("invalid").get<std::size_t>();
    c.n = groups.at(z).at("n").get<std::size_t>();
  }
  return m;
}

ProxyEvaluation evaluate_proxy_error(const Dataset& train, std::span<const RecordId> proxy,
                                     std::span<const RecordId> ice_ids, double alpha,
                                     Predictor& predictor, double rho) {
  if (proxy.empty()) throw std::invalid_argument("proxy set is empty");
  std::vector<const Record*> ices;
  for (auto id : ice_ids) ices.push_back(&train.at(id));
  std::vector<const Record*> queries;
  LabeledOutcomes outcomes;
  for (auto id : proxy) {
    const auto& r = train.at(id);
    queries.push_back(&r);
    outcomes.y.push_back(r.y);
    outcomes.z.push_back(r.z);
  }
  ProxyEvaluation eval;
  eval.prediction = predictor.predict(make_prompt_spec(train.schema(), ices, queries),
                                      CallPhase::Selection);
  outcomes.y_hat = eval.prediction.labels;
  eval.metrics = classification_report(outcomes, alpha, rho);
  eval.error = eval.metrics.e;
  return eval;
}

}  // namespace fairicl
