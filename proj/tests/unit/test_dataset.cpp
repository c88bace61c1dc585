#include <doctest.h>

#include <fedcert/dataset.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace fedcert;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

}  // namespace

TEST_CASE("gen_synthetic shape, balance, determinism") {
  Dataset d = gen_synthetic(3, 10, 100, 0.5, 7);
  d.validate();
  CHECK(d.size() == 300);
  CHECK(d.dims == 10);
  CHECK(d.num_classes == 3);

  int per[3] = {0, 0, 0};
  for (int l : d.labels) per[l]++;
  CHECK(per[0] == 100);
  CHECK(per[1] == 100);
  CHECK(per[2] == 100);

  Dataset again = gen_synthetic(3, 10, 100, 0.5, 7);
  CHECK(again.features == d.features);
  CHECK(again.labels == d.labels);
  Dataset other = gen_synthetic(3, 10, 100, 0.5, 8);
  CHECK(other.features != d.features);
}

TEST_CASE("gen_synthetic classes sit on their axes at small spread") {
  Dataset d = gen_synthetic(3, 10, 100, 0.01, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto x = d.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < d.dims; ++j)
      if (x[j] > x[best]) best = j;
    CHECK(static_cast<int>(best) == d.labels[i]);
  }
}

TEST_CASE("gen_synthetic wraps class axes past dims") {
  // 5 classes in 3 dims: classes 3 and 4 reuse axes 0 and 1.
  Dataset d = gen_synthetic(5, 3, 10, 0.01, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] < 3) continue;
    auto x = d.row(i);
    std::size_t axis = static_cast<std::size_t>(d.labels[i]) % 3;
    CHECK(x[axis] > 0.5);
  }
}

TEST_CASE("partition_noniid preserves the example multiset") {
  Dataset d = gen_synthetic(3, 4, 200, 0.5, 11);
  auto parts = partition_noniid(d, 6, 0.5, 13);
  CHECK(parts.size() == 6);

  std::size_t total = 0;
  double feature_sum = 0.0;
  long label_sum = 0;
  for (const auto& p : parts) {
    p.validate();
    CHECK(p.dims == d.dims);
    CHECK(p.num_classes == d.num_classes);
    total += p.size();
    for (double v : p.features) feature_sum += v;
    for (int l : p.labels) label_sum += l;
  }
  CHECK(total == d.size());
  double want = 0.0;
  for (double v : d.features) want += v;
  CHECK(feature_sum == doctest::Approx(want).epsilon(1e-9));
  long want_labels = 0;
  for (int l : d.labels) want_labels += l;
  CHECK(label_sum == want_labels);
}

TEST_CASE("partition_noniid q=1 gives pure label buckets") {
  Dataset d = gen_synthetic(3, 4, 200, 0.5, 17);
  auto parts = partition_noniid(d, 6, 1.0, 19);
  // 6 clients, 3 labels: bucket b holds clients {2b, 2b+1}.
  for (std::size_t c = 0; c < 6; ++c)
    for (int l : parts[c].labels) CHECK(l == static_cast<int>(c / 2));
}

TEST_CASE("partition_noniid near-uniform at q=1/L") {
  Dataset d = gen_synthetic(3, 4, 200, 0.5, 23);
  auto parts = partition_noniid(d, 6, 1.0 / 3.0, 29);
  for (const auto& p : parts) {
    CHECK(p.size() > 50);   // expectation 100
    CHECK(p.size() < 150);
  }
}

TEST_CASE("partition_noniid rejects out-of-range q") {
  Dataset d = gen_synthetic(3, 4, 10, 0.5, 1);
  CHECK_THROWS_AS(partition_noniid(d, 3, 0.1, 1), std::domain_error);  // < 1/L
  CHECK_THROWS_AS(partition_noniid(d, 3, 1.5, 1), std::domain_error);
  CHECK_THROWS_AS(partition_noniid(d, 2, 0.5, 1),
                  std::invalid_argument);  // fewer clients than classes
}

TEST_CASE("load_csv parses rows and labels") {
  auto p = write_temp("fedcert_ok.csv", "1.0,2.0,0\n3.0,4.0,1\n");
  Dataset d = load_csv(p.string());
  CHECK(d.size() == 2);
  CHECK(d.dims == 2);
  CHECK(d.num_classes == 2);
  CHECK(d.row(0)[0] == 1.0);
  CHECK(d.row(1)[1] == 4.0);
  CHECK(d.labels == std::vector<int>{0, 1});
}

TEST_CASE("load_csv rejects malformed input") {
  CHECK_THROWS_AS(load_csv((write_temp("fedcert_e1.csv", "")).string()),
                  std::runtime_error);
  CHECK_THROWS_AS(load_csv((write_temp("fedcert_e2.csv", "1.0,0\n2.0,1.0,1\n")).string()),
                  std::runtime_error);
  CHECK_THROWS_AS(load_csv((write_temp("fedcert_e3.csv", "abc,0\n")).string()),
                  std::runtime_error);
  CHECK_THROWS_AS(load_csv((write_temp("fedcert_e4.csv", "1.0,0.5\n")).string()),
                  std::runtime_error);  // label must be a non-negative integer
  CHECK_THROWS_AS(load_csv((write_temp("fedcert_e5.csv", "7\n")).string()),
                  std::runtime_error);  // need at least one feature column
  CHECK_THROWS_AS(load_csv("/nonexistent/fedcert.csv"), std::runtime_error);
}

TEST_CASE("embed_trigger overwrites exactly the named coordinates") {
  std::vector<double> x(6, 0.5);
  TriggerSpec t{{0, 3}, {9.0, -1.0}, 1};
  t.validate(6, 3);
  auto y = embed_trigger(x, t);
  CHECK(y[0] == 9.0);
  CHECK(y[3] == -1.0);
  CHECK(y[1] == 0.5);
  CHECK(y[5] == 0.5);
  // idempotent
  CHECK(embed_trigger(y, t) == y);
}

TEST_CASE("trigger validation") {
  CHECK_THROWS_AS((TriggerSpec{{0, 0}, {1.0, 2.0}, 0}).validate(4, 2),
                  std::invalid_argument);  // duplicate index
  CHECK_THROWS_AS((TriggerSpec{{9}, {1.0}, 0}).validate(4, 2),
                  std::invalid_argument);  // index out of range
  CHECK_THROWS_AS((TriggerSpec{{0}, {1.0, 2.0}, 0}).validate(4, 2),
                  std::invalid_argument);  // length mismatch
  CHECK_THROWS_AS((TriggerSpec{{0}, {1.0}, 5}).validate(4, 2),
                  std::invalid_argument);  // target label out of range
}

TEST_CASE("scaler standardizes columns and survives constant features") {
  Dataset d;
  d.dims = 2;
  d.num_classes = 2;
  d.features = {1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0};
  d.labels = {0, 1, 0, 1};
  Scaler s = fit_scaler(d);
  CHECK(s.mean[0] == doctest::Approx(2.5));
  CHECK(s.mean[1] == doctest::Approx(5.0));
  CHECK(s.stddev[1] == 1.0);  // zero variance column gets unit scale

  Dataset z = apply_scaler(d, s);
  double m0 = 0.0, v0 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) m0 += z.row(i)[0];
  m0 /= 4.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double c = z.row(i)[0] - m0;
    v0 += c * c;
    CHECK(z.row(i)[1] == 0.0);  // constant column maps to zero
  }
  CHECK(m0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v0 / 4.0 == doctest::Approx(1.0).epsilon(1e-9));
}
