#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fairad/data.hpp"
#include "fairad/losses.hpp"
#include "fairad/rng.hpp"
#include "testutil.hpp"

using namespace fairad;

namespace {

// TrainingView must not expose labels; EvaluationView must.
template <typename T, typename = void>
struct has_labels : std::false_type {};
template <typename T>
struct has_labels<T, std::void_t<decltype(std::declval<const T&>().labels)>>
    : std::true_type {};

static_assert(!has_labels<GroupedDataset::TrainingView>::value,
              "training view must not expose labels");
static_assert(has_labels<GroupedDataset::EvaluationView>::value,
              "evaluation view must expose labels");

std::string write_temp(const std::string& contents) {
  const std::string path = std::string(std::tmpnam(nullptr)) + ".csv";
  std::ofstream out(path);
  out << contents;
  return path;
}

CsvSchema fixture_schema() { return CsvSchema{"race", "reoffend", "B", "1"}; }

}  // namespace

TEST_CASE("csv fixture loads exactly") {
  const std::string path = write_temp(
      "age,income,race,reoffend\n"
      "1.5,2.0,B,1\n"
      "2.5,3.0,W,0\n"
      "0.5,-1.0,B,0\n"
      "4.5,0.25,W,1\n");
  const GroupedDataset ds = load_csv(path, fixture_schema());
  CHECK(ds.size() == 4);
  CHECK(ds.dim() == 2);
  CHECK(ds.feature_names() == std::vector<std::string>{"age", "income"});
  CHECK(ds.features()(0, 0) == 1.5);
  CHECK(ds.features()(3, 1) == 0.25);
  CHECK(ds.groups()[0] == Group::Protected);
  CHECK(ds.groups()[1] == Group::Unprotected);
  const auto eval = ds.evaluation_view();
  CHECK(eval.labels[0] == Label::Anomaly);
  CHECK(eval.labels[2] == Label::Normal);
  CHECK(ds.protected_count() == 2);
  std::remove(path.c_str());
}

TEST_CASE("csv error paths") {
  SUBCASE("missing label column is named") {
    const std::string path = write_temp("a,race\n1.0,B\n");
    CHECK_THROWS_WITH_AS(load_csv(path, fixture_schema()),
                         doctest::Contains("reoffend"), SchemaError);
    std::remove(path.c_str());
  }
  SUBCASE("non-numeric cell reports row and column") {
    const std::string path = write_temp(
        "age,race,reoffend\n"
        "1.0,B,1\n"
        "oops,W,0\n");
    CHECK_THROWS_WITH_AS(load_csv(path, fixture_schema()), doctest::Contains("row 3"),
                         ParseError);
    std::remove(path.c_str());
  }
  SUBCASE("a group must be non-empty") {
    const std::string path = write_temp(
        "age,race,reoffend\n"
        "1.0,W,1\n"
        "2.0,W,0\n");
    CHECK_THROWS_AS(load_csv(path, fixture_schema()), DegenerateDataError);
    std::remove(path.c_str());
  }
}

TEST_CASE("csv export round-trips") {
  SyntheticSpec spec;
  spec.dim = 3;
  spec.protected_count = 5;
  spec.unprotected_count = 9;
  spec.anomaly_rate_p = 0.2;
  spec.anomaly_rate_u = 0.25;
  spec.group_shift = {1.0, 0.0, 0.0};
  spec.anomaly_shift = {0.0, 2.0, 0.0};
  spec.seed = 11;
  const GroupedDataset ds = generate_synthetic(spec);
  const std::string path = std::string(std::tmpnam(nullptr)) + ".csv";
  save_csv(ds, path);
  const GroupedDataset back = load_csv(path, export_schema());
  CHECK(back.size() == ds.size());
  CHECK(back.features() == ds.features());
  CHECK(back.groups() == ds.groups());
  CHECK(back.evaluation_view().labels == ds.evaluation_view().labels);
  std::remove(path.c_str());
}

TEST_CASE("synthetic generation") {
  SyntheticSpec spec;
  spec.dim = 4;
  spec.protected_count = 250;
  spec.unprotected_count = 1000;
  spec.anomaly_rate_p = 0.1;
  spec.anomaly_rate_u = 0.1;
  spec.seed = 42;

  SUBCASE("deterministic per seed") {
    const GroupedDataset a = generate_synthetic(spec);
    const GroupedDataset b = generate_synthetic(spec);
    CHECK(a.features() == b.features());
    CHECK(a.groups() == b.groups());
    SyntheticSpec other = spec;
    other.seed = 43;
    const GroupedDataset c = generate_synthetic(other);
    CHECK_FALSE(a.features() == c.features());
  }
  SUBCASE("counts are exact") {
    const GroupedDataset ds = generate_synthetic(spec);
    CHECK(ds.protected_count() == 250);
    CHECK(ds.unprotected_count() == 1000);
    const auto eval = ds.evaluation_view();
    CHECK(eval.anomaly_count(Group::Protected) == 25);
    CHECK(eval.anomaly_count(Group::Unprotected) == 100);
  }
  SUBCASE("tiny groups are rejected") {
    SyntheticSpec bad = spec;
    bad.protected_count = 1;
    CHECK_THROWS_AS(generate_synthetic(bad), DegenerateDataError);
  }
}

TEST_CASE("ratio resampling") {
  SyntheticSpec spec;
  spec.dim = 3;
  spec.protected_count = 1000;
  spec.unprotected_count = 1000;
  spec.anomaly_rate_p = 0.1;
  spec.anomaly_rate_u = 0.1;
  spec.seed = 7;
  const GroupedDataset ds = generate_synthetic(spec);

  SUBCASE("1:1 on balanced data is the identity") {
    const GroupedDataset same = resample_ratio(ds, 1, 1, 99);
    CHECK(same.features() == ds.features());
    CHECK(same.groups() == ds.groups());
  }
  SUBCASE("4:1 keeps the unprotected side and quarters the protected") {
    const GroupedDataset out = resample_ratio(ds, 4, 1, 99);
    CHECK(out.unprotected_count() == 1000);
    CHECK(out.protected_count() == 250);
  }
  SUBCASE("anomaly rate preserved within one example") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const GroupedDataset out = resample_ratio(ds, 3, 1, seed);
      const auto eval = out.evaluation_view();
      const double rate_before = 0.1;
      const double rate_after =
          static_cast<double>(eval.anomaly_count(Group::Protected)) /
          static_cast<double>(out.protected_count());
      CHECK(std::fabs(rate_after - rate_before) <=
            1.0 / static_cast<double>(out.protected_count()));
    }
  }
  SUBCASE("deterministic per seed, different across seeds") {
    const GroupedDataset a = resample_ratio(ds, 4, 1, 5);
    const GroupedDataset b = resample_ratio(ds, 4, 1, 5);
    const GroupedDataset c = resample_ratio(ds, 4, 1, 6);
    CHECK(a.features() == b.features());
    CHECK_FALSE(a.features() == c.features());
  }
  SUBCASE("infeasible ratios raise a capacity error") {
    CHECK_THROWS_AS(resample_ratio(ds, 0, 1, 1), CapacityError);
    CHECK_THROWS_AS(resample_ratio(ds, 2000, 1, 1), CapacityError);
  }
}

TEST_CASE("standardization") {
  SUBCASE("two-point feature maps to plus and minus one") {
    Matrix f(2, 1, {0.0, 2.0});
    GroupedDataset ds(std::move(f), {Group::Protected, Group::Unprotected},
                      {Label::Normal, Label::Anomaly}, {"x"});
    const GroupedDataset out = standardize(ds);
    CHECK(out.features()(0, 0) == doctest::Approx(-1.0));
    CHECK(out.features()(1, 0) == doctest::Approx(1.0));
  }
  SUBCASE("mean and std after standardization") {
    Rng rng(21);
    Matrix f(50, 3);
    for (double& v : f.data()) v = rng.normal(3.0, 2.5);
    std::vector<Group> groups(50, Group::Unprotected);
    groups[0] = Group::Protected;
    GroupedDataset ds(std::move(f), groups, std::vector<Label>(50, Label::Normal),
                      {"a", "b", "c"});
    const GroupedDataset out = standardize(ds);
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0.0, var = 0.0;
      for (std::size_t i = 0; i < 50; ++i) mean += out.features()(i, j);
      mean /= 50.0;
      for (std::size_t i = 0; i < 50; ++i) {
        var += (out.features()(i, j) - mean) * (out.features()(i, j) - mean);
      }
      var /= 50.0;
      CHECK(std::fabs(mean) < 1e-9);
      CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
    SUBCASE("idempotence") {
      const GroupedDataset twice = standardize(out);
      for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          CHECK(twice.features()(i, j) ==
                doctest::Approx(out.features()(i, j)).epsilon(1e-9));
        }
      }
    }
  }
  SUBCASE("inverse round trip with a dropped constant feature") {
    std::vector<std::string> warnings;
    set_warning_sink([&warnings](const std::string& w) { warnings.push_back(w); });
    Matrix f(3, 2, {1.0, 5.0, 2.0, 5.0, 3.0, 5.0});
    GroupedDataset ds(std::move(f),
                      {Group::Protected, Group::Unprotected, Group::Unprotected},
                      {Label::Normal, Label::Normal, Label::Anomaly}, {"x", "const"});
    const GroupedDataset out = standardize(ds);
    CHECK(out.dim() == 1);
    CHECK(warnings.size() == 1);
    const Matrix restored = inverse_standardize(out.standardization(), out.features());
    CHECK(restored.cols() == 2);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(restored(i, 0) == doctest::Approx(ds.features()(i, 0)).epsilon(1e-9));
      CHECK(restored(i, 1) == doctest::Approx(5.0).epsilon(1e-9));
    }
    set_warning_sink([](const std::string&) {});
  }
  SUBCASE("all-constant data is rejected") {
    Matrix f(2, 1, {3.0, 3.0});
    GroupedDataset ds(std::move(f), {Group::Protected, Group::Unprotected},
                      {Label::Normal, Label::Anomaly}, {"x"});
    set_warning_sink([](const std::string&) {});
    CHECK_THROWS_AS(standardize(ds), DegenerateDataError);
  }
}
