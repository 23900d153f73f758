#pragma once

// CSV persistence for experiment records and regression datasets.
//
// Records (schema rmtkl-1), one row per (record, metric):
//   schema,n,q,effective_q,p,qstar,replicates,seed,metric,mean,stderr,walltime_s
// Datasets (schema rmtds-1):
//   schema,q,qstar,r_finite,r_asymptotic,target_kl_norm,stderr
// Floats are written with 17 significant digits. An identity population is
// written as p = qstar = 0.

#include "rmtkl/montecarlo.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmtkl {

inline constexpr std::string_view kRecordsSchema = "rmtkl-1";
inline constexpr std::string_view kDatasetSchema = "rmtds-1";
inline constexpr std::string_view kRecordsHeader =
    "schema,n,q,effective_q,p,qstar,replicates,seed,metric,mean,stderr,walltime_s";
inline constexpr std::string_view kDatasetHeader = "schema,q,qstar,r_finite,r_asymptotic,target_kl_norm,stderr";

class PersistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "%.17g" formatting shared by every CSV writer.
std::string format_real(double value);

void write_records(std::ostream& out, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_records(std::istream& in);
void save_records(const std::filesystem::path& path, std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> load_records(const std::filesystem::path& path);

void write_dataset(std::ostream& out, const RegressionDataset& dataset);
RegressionDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const RegressionDataset& dataset);
RegressionDataset load_dataset(const std::filesystem::path& path);

}  // namespace rmtkl
