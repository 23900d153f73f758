#include "rmtkl/persist.hpp"
#include "rmtkl/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace rmtkl;

namespace {

std::vector<ExperimentRecord> sample_records() {
  std::vector<ExperimentRecord> out;
  for (int k = 0; k < 3; ++k) {
    ExperimentRecord r;
    r.config.n = 100 + k;
    r.config.q = 0.1 * (k + 1) + 1e-17;
    r.config.p = k == 2 ? 0.0 : 1.0 / 3.0 + k;
    r.config.population = k == 2 ? PopulationKind::identity : PopulationKind::inverse_wishart;
    r.config.replicates = 7;
    r.config.master_seed = 0xffffffffffffffffULL - static_cast<std::uint64_t>(k);
    r.config.metrics = {Metric::kl_sample, Metric::kl_oracle};
    r.effective_q = r.config.effective_q();
    for (auto m : r.config.metrics) {
      r.metrics.push_back({m, std::exp(-k - 0.123456789012345), 1e-300 * (k + 1), 7});
    }
    out.push_back(r);
  }
  // two consecutive records of the same cell stay separate because the metric repeats
  out.push_back(out.back());
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("records round-trip losslessly") {
  const auto recs = sample_records();
  std::stringstream ss;
  write_records(ss, recs);
  const std::string text = ss.str();
  CHECK(text.rfind(std::string(kRecordsHeader) + "\n", 0) == 0);
  const auto back = read_records(ss);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].config.n == recs[i].config.n);
    CHECK(same_bits(back[i].config.q, recs[i].config.q));
    CHECK(same_bits(back[i].config.p, recs[i].config.p));
    CHECK(back[i].config.population == recs[i].config.population);
    CHECK(back[i].config.master_seed == recs[i].config.master_seed);
    CHECK(same_bits(back[i].effective_q, recs[i].effective_q));
    REQUIRE(back[i].metrics.size() == recs[i].metrics.size());
    for (std::size_t j = 0; j < recs[i].metrics.size(); ++j) {
      CHECK(back[i].metrics[j].metric == recs[i].metrics[j].metric);
      CHECK(same_bits(back[i].metrics[j].mean, recs[i].metrics[j].mean));
      CHECK(same_bits(back[i].metrics[j].standard_error, recs[i].metrics[j].standard_error));
    }
  }
  std::ostringstream again;
  write_records(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("file round-trip for records and datasets") {
  const auto dir = std::filesystem::temp_directory_path() / "rmtkl_persist_test";
  std::filesystem::create_directories(dir);
  const auto recs = sample_records();
  save_records(dir / "r.csv", recs);
  CHECK(load_records(dir / "r.csv").size() == recs.size());

  RegressionDataset d;
  d.rows.push_back({0.3, 0.5, 0.75, 0.7, 0.0123456789012345678, 1e-5});
  d.rows.push_back({6.9, 0.95, 1.0, 0.99, 0.3, 0.0});
  save_dataset(dir / "d.csv", d);
  const auto back = load_dataset(dir / "d.csv");
  REQUIRE(back.size() == 2);
  CHECK(same_bits(back.rows[0].target_kl_norm, d.rows[0].target_kl_norm));
  CHECK(same_bits(back.rows[1].q, 6.9));
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), PersistError);
}

TEST_CASE("wrong header or schema is rejected") {
  std::istringstream bad("schema,n,q\nrmtkl-1,1,2\n");
  CHECK_THROWS_WITH_AS(read_records(bad), doctest::Contains("schema mismatch"), PersistError);
  std::istringstream bad_ds("q,qstar\n");
  CHECK_THROWS_AS(read_dataset(bad_ds), PersistError);
  std::istringstream wrong_row(std::string(kDatasetHeader) + "\nrmtds-0,1,2,3,4,5,6\n");
  CHECK_THROWS_AS(read_dataset(wrong_row), PersistError);
  std::istringstream short_row(std::string(kDatasetHeader) + "\nrmtds-1,1,2\n");
  CHECK_THROWS_AS(read_dataset(short_row), PersistError);
  std::istringstream junk(std::string(kDatasetHeader) + "\nrmtds-1,1,2,x,4,5,6\n");
  CHECK_THROWS_AS(read_dataset(junk), PersistError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_dataset(empty), PersistError);
}

TEST_CASE("17 significant digits round-trip bit-exactly") {
  RngStream rng(1, 1);
  for (int i = 0; i < 100000; ++i) {
    const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(200)) - 100);
    const std::string s = format_real(v);
    CHECK(same_bits(std::stod(s), v));
  }
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(same_bits(std::strtod(format_real(std::numeric_limits<double>::denorm_min()).c_str(), nullptr),
                  std::numeric_limits<double>::denorm_min()));
}
