#include "fairicl/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fairicl/rng.hpp"

namespace fairicl {

namespace {

struct Level {
  const char* name;
  double weight;  // contribution to the latent score
};

constexpr std::array<Level, 5> kEducation{{{"HS-grad", -0.9},
                                           {"Some-college", -0.4},
                                           {"Bachelors", 0.3},
                                           {"Masters", 0.8},
                                           {"Doctorate", 1.2}}};
constexpr std::array<Level, 6> kOccupation{{{"Handlers-cleaners", -0.9},
                                            {"Other-service", -0.7},
                                            {"Craft-repair", -0.2},
                                            {"Sales", 0.1},
                                            {"Prof-specialty", 0.6},
                                            {"Exec-managerial", 0.9}}};
constexpr std::array<const char*, 4> kRegion{"North", "South", "East", "West"};

double gaussian(rng::Engine& engine) {
  // Box-Muller on platform-stable uniforms.
  const double u1 = 1.0 - rng::uniform_unit(engine);
  const double u2 = rng::uniform_unit(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

Schema synthetic_schema() {
  Schema s;
  s.name = "synthetic";
  s.feature_names = {"age", "education", "occupation", "hours-per-week", "region", "sex"};
  s.numeric_features = {"age", "hours-per-week"};
  s.label_name = "income";
  s.label_positive_value = ">50K";
  s.label_negative_value = "<=50K";
  s.sensitive_name = "sex";
  s.sensitive_reference_value = "Male";
  s.task_instruction =
      "Each line describes a person. Predict whether their yearly income is above 50K. "
      "Answer >50K or <=50K.";
  return s;
}

Dataset generate_synthetic(std::size_t rows, std::uint64_t seed) {
  rng::Engine engine(rng::derive_seed(seed, {0x5717}));
  std::vector<Record> records;
  records.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    Record r;
    r.id = i;
    const bool male = rng::uniform_unit(engine) < 0.6;
    const auto age = 18 + static_cast<int>(rng::uniform_below(engine, 53));
    const auto hours = 10 + 5 * static_cast<int>(rng::uniform_below(engine, 13));
    const auto& edu = kEducation[rng::uniform_below(engine, kEducation.size())];
    const auto& occ = kOccupation[rng::uniform_below(engine, kOccupation.size())];
    const auto* region = kRegion[rng::uniform_below(engine, kRegion.size())];
    const double score = edu.weight + occ.weight + 0.8 * (age - 44) / 26.0 +
                         0.5 * (hours - 40) / 30.0 + (male ? 0.2 : -0.1) +
                         0.2 * gaussian(engine);
    r.y = score > 0.2 ? 1 : 0;
    r.z = male ? 1 : 0;
    r.features = {{"age", std::to_string(age)},
                  {"education", edu.name},
                  {"occupation", occ.name},
                  {"hours-per-week", std::to_string(hours)},
                  {"region", region},
                  {"sex", male ? "Male" : "Female"}};
    records.push_back(std::move(r));
  }
  return Dataset(synthetic_schema(), std::move(records));
}

}  // namespace fairicl
