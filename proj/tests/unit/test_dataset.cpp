#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fairicl/dataset.hpp"
#include "fairicl/errors.hpp"
#include "fairicl/keyvalue.hpp"
#include "fairicl/synthetic.hpp"
#include "fixtures.hpp"

using namespace fairicl;
using fairicl::testing::toy_record;
using fairicl::testing::toy_schema;

namespace {

const char* kAdultHeader =
    "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,race,"
    "sex,capital-gain,capital-loss,hours-per-week,native-country,income\n";

}  // namespace

TEST_CASE("key-value parsing") {
  const auto kvs = parse_key_values("# comment\n a = 1 \n\n[llm]\nmodel = \"x, y\"\n");
  REQUIRE(kvs.size() == 2);
  CHECK(kvs[0].key == "a");
  CHECK(kvs[0].value == "1");
  CHECK(kvs[0].line == 2);
  CHECK(kvs[1].key == "llm.model");
  CHECK(kvs[1].value == "x, y");
  CHECK_THROWS_AS(parse_key_values("novalue\n"), ConfigError);
  CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("schema presets") {
  const auto adult = schema_preset("adult");
  CHECK(adult.feature_names.size() == 12);
  CHECK(std::find(adult.feature_names.begin(), adult.feature_names.end(), "education-num") ==
        adult.feature_names.end());
  CHECK(adult.label_positive_value == ">50K");
  CHECK(adult.label_negative_value == "<=50K");
  CHECK(adult.sensitive_reference_value == "Male");
  CHECK_FALSE(adult.task_instruction.empty());

  const auto compas = schema_preset("compas");
  CHECK(compas.label_name == "two_year_recid");
  CHECK(compas.label_positive_value == "1");
  std::set<std::string> unique(compas.feature_names.begin(), compas.feature_names.end());
  CHECK(unique.size() == compas.feature_names.size());
  CHECK(compas.is_numeric("priors_count"));
  CHECK_FALSE(compas.is_numeric("race"));

  CHECK_THROWS_AS(parse_schema("name = x\nfeatures = a\nlabel = a\nlabel_positive = 1\n"
                               "label_negative = 0\nsensitive = s\nsensitive_reference = r\n"),
                  SchemaError);
  CHECK_THROWS_AS(parse_schema("bogus = 1\n"), SchemaError);
}

TEST_CASE("load_csv maps Adult and COMPAS labels") {
  const auto adult = schema_preset("adult");
  const std::string row_hi =
      "39,State-gov,77516,Bachelors,13,Never-married,Adm-clerical,Not-in-family,White,Male,2174,0,40,"
      "United-States,>50K\n";
  const std::string row_lo =
      "50,Self-emp-not-inc,83311,Bachelors,13,Married-civ-spouse,Exec-managerial,Husband,White,"
      "Female,0,0,13,United-States,<=50K.\n";
  const auto result = parse_csv(std::string(kAdultHeader) + row_hi + row_lo, adult);
  REQUIRE(result.errors.empty());
  REQUIRE(result.dataset.size() == 2);
  CHECK(result.dataset.at(0).y == 1);
  CHECK(result.dataset.at(0).z == 1);
  CHECK(result.dataset.at(1).y == 0);
  CHECK(result.dataset.at(1).z == 0);
  CHECK(result.dataset.at(0).features.at("native-country") == "United-States");
  CHECK_FALSE(result.dataset.at(0).features.contains("fnlwgt"));

  const auto compas = schema_preset("compas");
  const auto c = parse_csv(
      "sex,age,age_cat,race,c_charge_degree,score_text,priors_count,decile_score,days_in_jail,"
      "two_year_recid\nMale,34,25 - 45,Other,F,Low,0,1,1,0\n",
      compas);
  REQUIRE(c.dataset.size() == 1);
  CHECK(c.dataset.at(0).y == 0);
  CHECK(c.dataset.at(0).z == 1);
}

TEST_CASE("load_csv edge cases") {
  const auto adult = schema_preset("adult");
  CHECK(parse_csv(kAdultHeader, adult).dataset.empty());
  CHECK_THROWS_AS(parse_csv("age,sex,income\n1,Male,>50K\n", adult), SchemaError);
  CHECK_THROWS_AS(parse_csv("", adult), SchemaError);

  const auto result = parse_csv(
      std::string(kAdultHeader) +
          "39,State-gov,1,Bachelors,13,Never-married,Adm-clerical,Not-in-family,White,Male,0,0,40,US,maybe\n"
          "39,State-gov,1,Bachelors,13,Never-married,Adm-clerical,Not-in-family,White,?,0,0,40,US,>50K\n"
          "39,State-gov\n"
          "39,State-gov,1,Bachelors,13,Never-married,Adm-clerical,Not-in-family,White,Female,0,0,40,US,>50K\n",
      adult);
  CHECK(result.errors.size() == 3);
  CHECK(result.errors[0].line == 2);
  REQUIRE(result.dataset.size() == 1);
  CHECK(result.dataset.at(0).id == 0);

  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", adult), SchemaError);
}

TEST_CASE("csv field splitting") {
  CHECK(split_csv_line(" a , \"b, c\" ,\"d\"\"e\"") == std::vector<std::string>{"a", "b, c", "d\"e"});
  CHECK(split_csv_line("") == std::vector<std::string>{""});
  CHECK(is_null_value(" ? "));
  CHECK(is_null_value(""));
  CHECK_FALSE(is_null_value("0"));
}

TEST_CASE("clean drops null rows and renumbers") {
  const auto schema = toy_schema();
  std::vector<Record> records;
  std::size_t expected = 0;
  for (RecordId i = 0; i < 10; ++i) {
    auto r = toy_record(i, "red", static_cast<int>(i), i % 2 == 0, 0);
    if (i == 1 || i == 4 || i == 8) {
      r.features["color"] = i == 4 ? "?" : "";
    } else {
      ++expected;
    }
    records.push_back(r);
  }
  const Dataset raw(schema, records);
  const auto cleaned = clean(raw);
  REQUIRE(cleaned.size() == expected);
  REQUIRE(cleaned.size() == 7);
  for (std::size_t i = 0; i < cleaned.size(); ++i) CHECK(cleaned.records()[i].id == i);
  CHECK(cleaned.records()[1].features.at("size") == "2");

  SUBCASE("idempotent") {
    const auto twice = clean(cleaned);
    REQUIRE(twice.size() == cleaned.size());
    for (std::size_t i = 0; i < twice.size(); ++i) {
      CHECK(twice.records()[i].id == cleaned.records()[i].id);
      CHECK(twice.records()[i].features == cleaned.records()[i].features);
    }
  }
  SUBCASE("identity without nulls") {
    const auto ds = testing::random_toy_dataset(25, 3);
    const auto c = clean(ds);
    REQUIRE(c.size() == ds.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c.records()[i].features == ds.records()[i].features);
      CHECK(c.records()[i].y == ds.records()[i].y);
    }
  }
}

TEST_CASE("split partitions deterministically") {
  for (std::uint64_t seed : {20u, 25u, 42u, 7u}) {
    const auto ds = testing::random_toy_dataset(53, seed);
    for (std::size_t n_test : {0u, 1u, 10u, 53u}) {
      const auto s = split(ds, seed, n_test);
      CHECK(s.test.size() == n_test);
      CHECK(s.train.size() + s.test.size() == ds.size());
      std::set<RecordId> ids;
      for (const auto& r : s.train.records()) ids.insert(r.id);
      for (const auto& r : s.test.records()) CHECK(ids.insert(r.id).second);
      CHECK(ids.size() == ds.size());

      const auto again = split(ds, seed, n_test);
      for (std::size_t i = 0; i < n_test; ++i) {
        CHECK(again.test.records()[i].id == s.test.records()[i].id);
      }
    }
  }
  const auto ds = testing::random_toy_dataset(10, 1);
  CHECK_THROWS_AS(split(ds, 1, 11), std::invalid_argument);
  const auto a = split(ds, 20, 5);
  const auto b = split(ds, 25, 5);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs |= a.test.records()[i].id != b.test.records()[i].id;
  CHECK(differs);
}

TEST_CASE("split sizes of the reference datasets") {
  // Row counts only matter here, so synthetic rows stand in for the real files.
  for (auto [rows, train] : {std::pair<std::size_t, std::size_t>{44869, 43869}, {5278, 4278}}) {
    const auto ds = generate_synthetic(rows, 1);
    const auto s = split(ds, 42, 1000);
    CHECK(s.train.size() == train);
    CHECK(s.test.size() == 1000);
  }
}

TEST_CASE("to_text layout") {
  Schema s = toy_schema();
  s.feature_names = {"age", "sex"};
  s.numeric_features = {"age"};
  Record r;
  r.id = 3;
  r.features = {{"age", "39"}, {"sex", "Male"}};
  r.y = 1;
  CHECK(to_text(r, s, false) == "age is 39, sex is Male");
  CHECK(to_text(r, s, true) == "age is 39, sex is Male, outcome is yes");

  const auto adult = schema_preset("adult");
  Record a;
  for (const auto& f : adult.feature_names) a.features[f] = "v";
  a.y = 1;
  const auto text = to_text(a, adult, true);
  CHECK(text.ends_with(", income is >50K"));
  CHECK(text.starts_with("age is v, workclass is v"));

  Record other = r;
  other.id = 99;
  CHECK(to_text(other, s, true) == to_text(r, s, true));
}

TEST_CASE("to_text is injective and parse_text inverts it") {
  const auto schema = toy_schema();
  const auto ds = testing::random_toy_dataset(200, 11);
  std::map<std::string, std::pair<std::map<std::string, std::string>, int>> seen;
  for (const auto& r : ds.records()) {
    const auto text = to_text(r, schema, true);
    const auto [it, inserted] = seen.emplace(text, std::make_pair(r.features, r.y));
    if (!inserted) {
      CHECK(it->second.first == r.features);
      CHECK(it->second.second == r.y);
    }
    const auto parsed = parse_text(text, schema);
    REQUIRE(parsed.has_value());
    CHECK(parsed->features == r.features);
    REQUIRE(parsed->label.has_value());
    CHECK(*parsed->label == r.y);

    const auto unlabeled = parse_text(to_text(r, schema, false), schema);
    REQUIRE(unlabeled.has_value());
    CHECK_FALSE(unlabeled->label.has_value());
  }
  // Values that contain commas and "is" still round-trip.
  auto tricky = toy_record(0, "red, or is it", 3, true, 0);
  const auto parsed = parse_text(to_text(tricky, schema, true), schema);
  REQUIRE(parsed.has_value());
  CHECK(parsed->features.at("color") == "red, or is it");
  CHECK_FALSE(parse_text("nonsense", schema).has_value());
}

TEST_CASE("dataset rejects duplicate ids") {
  const auto schema = toy_schema();
  CHECK_THROWS_AS(Dataset(schema, {toy_record(1, "a", 1, true, 0), toy_record(1, "b", 2, false, 1)}),
                  std::invalid_argument);
  const Dataset ds(schema, {toy_record(5, "a", 1, true, 0)});
  CHECK(ds.contains(5));
  CHECK_THROWS_AS(ds.at(6), std::out_of_range);
}

TEST_CASE("synthetic data is deterministic and two-group") {
  const auto a = generate_synthetic(300, 9);
  const auto b = generate_synthetic(300, 9);
  REQUIRE(a.size() == 300);
  std::size_t males = 0, positives = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records()[i].features == b.records()[i].features);
    CHECK(a.records()[i].y == b.records()[i].y);
    males += a.records()[i].z;
    positives += a.records()[i].y;
  }
  CHECK(males > 100);
  CHECK(males < 250);
  CHECK(positives > 50);
  CHECK(positives < 250);
  CHECK(clean(a).size() == a.size());
}
