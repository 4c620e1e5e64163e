#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fairicl/dataset.hpp"
#include "fairicl/predictor.hpp"

namespace fairicl::testing {

// Three features: one categorical, one numeric, and the sensitive column.
inline Schema toy_schema() {
  Schema s;
  s.name = "toy";
  s.feature_names = {"color", "size", "sex"};
  s.numeric_features = {"size"};
  s.label_name = "outcome";
  s.label_positive_value = "yes";
  s.label_negative_value = "no";
  s.sensitive_name = "sex";
  s.sensitive_reference_value = "M";
  s.task_instruction = "Decide the outcome.";
  return s;
}

inline Record toy_record(RecordId id, std::string color, int size, bool male, int y) {
  Record r;
  r.id = id;
  r.features = {{"color", std::move(color)}, {"size", std::to_string(size)}, {"sex", male ? "M" : "F"}};
  r.y = y;
  r.z = male ? 1 : 0;
  return r;
}

// `n` records with ids 0..n-1 drawn from a small fixed palette.
inline Dataset random_toy_dataset(std::size_t n, std::uint64_t seed) {
  static const char* kColors[] = {"red", "green", "blue", "amber", "violet"};
  std::mt19937_64 engine(seed);
  std::vector<Record> records;
  for (std::size_t i = 0; i < n; ++i) {
    const auto color = kColors[engine() % 5];
    const int size = static_cast<int>(engine() % 40);
    const bool male = engine() % 2 == 0;
    const int y = (size > 20) != (engine() % 5 == 0) ? 1 : 0;
    records.push_back(toy_record(i, color, size, male, y));
  }
  return Dataset(toy_schema(), std::move(records));
}

// Backend driven by a callback; counts completions.
class ScriptedBackend final : public Backend {
 public:
  using Script = std::function<std::string(const PromptSpec&)>;
  explicit ScriptedBackend(Script script, std::string id = "scripted")
      : script_(std::move(script)), id_(std::move(id)) {}

  std::string id() const override { return id_; }
  std::string complete(const PromptSpec& spec, const std::string&) override {
    ++calls;
    return script_(spec);
  }

  std::atomic<int> calls{0};

 private:
  Script script_;
  std::string id_;
};

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fairicl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fairicl::testing
