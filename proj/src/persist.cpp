#include "rmtkl/persist.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

namespace rmtkl {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  return line;
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw PersistError(fmt::format("line {}: cannot parse column '{}' from '{}'", line_no, column, field));
  }
  return value;
}

void expect_header(std::istream& in, std::string_view header, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw PersistError(fmt::format("{}: missing header", what));
  }
  if (strip_cr(line) != header) {
    throw PersistError(fmt::format("{}: schema mismatch, expected header '{}', got '{}'", what, header, line));
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw PersistError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PersistError(fmt::format("cannot open '{}' for reading", path.string()));
  }
  return in;
}

bool same_cell(const ExperimentRecord& rec, Index n, double q, double p, Index replicates, std::uint64_t seed,
               double walltime) {
  return rec.config.n == n && rec.config.q == q && rec.config.p == p && rec.config.replicates == replicates &&
         rec.config.master_seed == seed && rec.walltime_s == walltime;
}

}  // namespace

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_records(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << kRecordsHeader << '\n';
  for (const auto& rec : records) {
    const auto& c = rec.config;
    const bool identity = c.population == PopulationKind::identity;
    const double p = identity ? 0.0 : c.p;
    for (const auto& m : rec.metrics) {
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", kRecordsSchema, c.n, format_real(c.q),
                         format_real(rec.effective_q), format_real(p), format_real(c.qstar()), c.replicates,
                         c.master_seed, to_string(m.metric), format_real(m.mean), format_real(m.standard_error),
                         format_real(rec.walltime_s));
    }
  }
}

std::vector<ExperimentRecord> read_records(std::istream& in) {
  expect_header(in, kRecordsHeader, "records CSV");
  std::vector<ExperimentRecord> records;
  std::string raw;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) {
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 12) {
      throw PersistError(fmt::format("line {}: expected 12 fields, got {}", line_no, f.size()));
    }
    if (f[0] != kRecordsSchema) {
      throw PersistError(fmt::format("line {}: schema '{}' is not {}", line_no, f[0], kRecordsSchema));
    }
    const auto n = parse_number<Index>(f[1], line_no, "n");
    const auto q = parse_number<double>(f[2], line_no, "q");
    const auto effective_q = parse_number<double>(f[3], line_no, "effective_q");
    const auto p = parse_number<double>(f[4], line_no, "p");
    const auto replicates = parse_number<Index>(f[6], line_no, "replicates");
    const auto seed = parse_number<std::uint64_t>(f[7], line_no, "seed");
    const auto metric = parse_metric(f[8]);
    if (!metric) {
      throw PersistError(fmt::format("line {}: unknown metric '{}'", line_no, f[8]));
    }
    MetricSummary summary;
    summary.metric = *metric;
    summary.mean = parse_number<double>(f[9], line_no, "mean");
    summary.standard_error = parse_number<double>(f[10], line_no, "stderr");
    summary.count = replicates;
    const auto walltime = parse_number<double>(f[11], line_no, "walltime_s");

    const bool continues = !records.empty() && same_cell(records.back(), n, q, p, replicates, seed, walltime) &&
                           records.back().find(*metric) == nullptr;
    if (!continues) {
      ExperimentRecord rec;
      rec.config.n = n;
      rec.config.q = q;
      rec.config.p = p;
      rec.config.population = p == 0.0 ? PopulationKind::identity : PopulationKind::inverse_wishart;
      rec.config.replicates = replicates;
      rec.config.master_seed = seed;
      rec.config.metrics.clear();
      rec.effective_q = effective_q;
      rec.walltime_s = walltime;
      records.push_back(std::move(rec));
    }
    records.back().config.metrics.push_back(*metric);
    records.back().metrics.push_back(summary);
  }
  return records;
}

void save_records(const std::filesystem::path& path, std::span<const ExperimentRecord> records) {
  auto out = open_for_write(path);
  write_records(out, records);
  if (!out) {
    throw PersistError(fmt::format("write to '{}' failed", path.string()));
  }
}

std::vector<ExperimentRecord> load_records(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_records(in);
}

void write_dataset(std::ostream& out, const RegressionDataset& dataset) {
  out << kDatasetHeader << '\n';
  for (const auto& row : dataset.rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", kDatasetSchema, format_real(row.q), format_real(row.qstar),
                       format_real(row.r_finite), format_real(row.r_asymptotic), format_real(row.target_kl_norm),
                       format_real(row.stderr_kl_norm));
  }
}

RegressionDataset read_dataset(std::istream& in) {
  expect_header(in, kDatasetHeader, "dataset CSV");
  RegressionDataset data;
  std::string raw;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) {
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 7) {
      throw PersistError(fmt::format("line {}: expected 7 fields, got {}", line_no, f.size()));
    }
    if (f[0] != kDatasetSchema) {
      throw PersistError(fmt::format("line {}: schema '{}' is not {}", line_no, f[0], kDatasetSchema));
    }
    RegressionRow row;
    row.q = parse_number<double>(f[1], line_no, "q");
    row.qstar = parse_number<double>(f[2], line_no, "qstar");
    row.r_finite = parse_number<double>(f[3], line_no, "r_finite");
    row.r_asymptotic = parse_number<double>(f[4], line_no, "r_asymptotic");
    row.target_kl_norm = parse_number<double>(f[5], line_no, "target_kl_norm");
    row.stderr_kl_norm = parse_number<double>(f[6], line_no, "stderr");
    data.rows.push_back(row);
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const RegressionDataset& dataset) {
  auto out = open_for_write(path);
  write_dataset(out, dataset);
  if (!out) {
    throw PersistError(fmt::format("write to '{}' failed", path.string()));
  }
}

RegressionDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return read_dataset(in);
}

}  // namespace rmtkl
