#ifndef PCAT_REPORT_HPP
#define PCAT_REPORT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcat/pcat.hpp"
#include "pcat/voxel_grid.hpp"

namespace pcat {

/// Dice overlap 2|A∩B| / (|A|+|B|); two empty masks compare as 1.0.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Squared Pearson correlation. Absent when either series has zero
/// variance (undefined rather than 0).
std::optional<double> pearson_r2(const std::vector<double>& x, const std::vector<double>& y);

/// Case status values, from best to worst:
/// ok, truncated, no-bifurcation, short-centerline, split-failed, io-error.
extern const std::array<const char*, 6> kCaseStatuses;

struct TerritoryOutcome {
  std::optional<PcatMeasurement> measurement;  // absent on failure
  std::string error_class;                     // empty when measured
  std::string error_message;
};

struct CaseRecord {
  std::string case_id;
  std::string status = "ok";  // worst across territories and case-level errors
  TerritoryOutcome rpcat;
  TerritoryOutcome lpcat;
  std::string error_class;  // case-level (io-error, split-failed), empty otherwise
  std::string error_message;
};

/// Decide the case status from its outcomes (worst wins).
std::string derive_case_status(const CaseRecord& record);

struct SeriesStats {
  std::uint64_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;  // population (divisor N)
  std::optional<std::array<double, 5>> five_number;  // min, q1, median, q3, max
};

struct TerritorySummary {
  SeriesStats attenuation_hu;
  SeriesStats volume_ml;
  std::vector<std::uint64_t> pooled_histogram;  // sum over ok cases
  int histogram_bin_hu = 5;
  HuWindow window;
};

struct CohortReport {
  std::uint64_t n_total = 0;
  std::map<std::string, std::uint64_t> status_counts;  // every status present
  TerritorySummary rpcat;
  TerritorySummary lpcat;
  // Squared correlations over ok cases: RPCAT vs LPCAT attenuation, and
  // attenuation vs volume within each territory.
  std::optional<double> r2_attenuation_rpcat_lpcat;
  std::optional<double> r2_attenuation_volume_rpcat;
  std::optional<double> r2_attenuation_volume_lpcat;
  std::vector<CaseRecord> cases;  // sorted by case_id
};

/// Cohort statistics over the records with status "ok"; failures are
/// tallied separately. Records are sorted by case_id before accumulation so
/// the result is independent of input order.
CohortReport aggregate(std::vector<CaseRecord> records);

}  // namespace pcat

#endif  // PCAT_REPORT_HPP
