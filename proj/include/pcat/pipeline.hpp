#ifndef PCAT_PIPELINE_HPP
#define PCAT_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "pcat/pcat.hpp"
#include "pcat/report.hpp"

namespace pcat {

/// Everything a `pcat measure` run needs. The CLI fills this from flags and
/// an optional config file; defaults are the published protocol values.
struct RunConfig {
  std::string image_path;
  std::string coronary_mask_path;
  std::string aorta_mask_path;  // empty = none
  ProtocolParams params;
  std::string output_dir = ".";
  bool emit_debug_masks = false;
};

struct ManifestEntry {
  std::string case_id;
  std::string image_path;
  std::string coronary_mask_path;
  std::string aorta_mask_path;  // empty = none
};

/// Parse the batch manifest CSV (case_id,image,coronary_mask[,aorta_mask]).
/// A leading header row is accepted. Duplicate case ids are rejected.
std::vector<ManifestEntry> read_manifest(const std::string& path);

/// Run the full measurement pipeline for one case. Pipeline failures are
/// captured in the record (per territory or case level), not thrown; only
/// programming errors propagate.
CaseRecord run_measure_case(const std::string& case_id, const RunConfig& config);

/// Serialize one case to the per-case JSON document (schema_version 1).
/// The timestamp lives in the "metadata" block so reports without it are
/// byte-reproducible.
std::string case_record_to_json(const CaseRecord& record, const ProtocolParams& params,
                                bool with_timestamp = true);

std::string cohort_report_to_json(const CohortReport& report, const ProtocolParams& params,
                                  bool with_timestamp = true);

/// One CSV line per case; `cases_csv_header()` gives the column names.
std::string cases_csv_header();
std::string case_record_to_csv(const CaseRecord& record);

std::string histograms_csv(const CohortReport& report);
std::string boxplot_csv(const CohortReport& report);

/// Read a per-case JSON document back into a record (used by `pcat report`).
CaseRecord case_record_from_json(const std::string& json_text);

struct BatchResult {
  CohortReport report;
  std::uint64_t warning_count = 0;  // cases that did not end "ok"
};

/// Run every manifest case (worker pool of `workers` threads; 0 = one per
/// hardware thread), write per-case JSONs into the output directory, then
/// aggregate. Case failures are isolated; they become failure records.
BatchResult run_batch(const std::vector<ManifestEntry>& manifest, const RunConfig& base_config,
                      int workers = 0);

/// Write report.json, cases.csv, histograms.csv and boxplot.csv.
void write_report_files(const CohortReport& report, const ProtocolParams& params,
                        const std::string& output_dir, bool with_timestamp = true);

void write_case_files(const CaseRecord& record, const ProtocolParams& params,
                      const std::string& output_dir, bool with_timestamp = true);

}  // namespace pcat

#endif  // PCAT_PIPELINE_HPP
