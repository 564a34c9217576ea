#include "pcat/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pcat/errors.hpp"
#include "pcat/nifti.hpp"
#include "pcat/version.hpp"

namespace pcat {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

json window_json(const HuWindow& w) { return json::array({w.lo, w.hi}); }

json params_json(const ProtocolParams& p) {
  json j;
  j["skip_mm"] = p.skip_mm;
  j["segment_mm"] = p.segment_mm;
  j["hu_window"] = window_json(p.window);
  j["spur_mm"] = p.spur_mm;
  j["min_component_voxels"] = p.min_component_voxels;
  j["region_mode"] = region_mode_name(p.region_mode);
  j["lm_search_mm"] = p.lm_search_mm;
  j["histogram_bin_hu"] = p.histogram_bin_hu;
  j["sd_convention"] = "population";
  return j;
}

json measurement_json(const PcatMeasurement& m) {
  json j;
  if (m.mean_attenuation_hu)
    j["mean_attenuation_hu"] = *m.mean_attenuation_hu;
  else
    j["mean_attenuation_hu"] = nullptr;
  j["volume_ml"] = m.volume_ml;
  j["voxel_count"] = m.voxel_count;
  j["truncated"] = m.truncated;
  j["histogram"] = {{"lo_hu", m.window.lo},
                    {"hi_hu", m.window.hi},
                    {"bin_hu", m.histogram_bin_hu},
                    {"counts", m.histogram}};
  return j;
}

PcatMeasurement measurement_from_json(const json& j) {
  PcatMeasurement m;
  if (!j.at("mean_attenuation_hu").is_null())
    m.mean_attenuation_hu = j.at("mean_attenuation_hu").get<double>();
  m.volume_ml = j.at("volume_ml").get<double>();
  m.voxel_count = j.at("voxel_count").get<std::uint64_t>();
  m.truncated = j.at("truncated").get<bool>();
  const auto& h = j.at("histogram");
  m.window.lo = h.at("lo_hu").get<double>();
  m.window.hi = h.at("hi_hu").get<double>();
  m.histogram_bin_hu = h.at("bin_hu").get<int>();
  m.histogram = h.at("counts").get<std::vector<std::uint64_t>>();
  return m;
}

json territory_json(const TerritoryOutcome& outcome) {
  if (!outcome.error_class.empty())
    return json{{"error", {{"class", outcome.error_class}, {"message", outcome.error_message}}}};
  if (!outcome.measurement) return nullptr;
  return measurement_json(*outcome.measurement);
}

TerritoryOutcome territory_from_json(const json& j) {
  TerritoryOutcome outcome;
  if (j.is_null()) return outcome;
  if (j.contains("error")) {
    outcome.error_class = j.at("error").at("class").get<std::string>();
    outcome.error_message = j.at("error").value("message", "");
    return outcome;
  }
  outcome.measurement = measurement_from_json(j);
  return outcome;
}

json metadata_json(bool with_timestamp) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kVersion;
  if (with_timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::ostringstream out;
    out << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
    j["generated_at"] = out.str();
  }
  return j;
}

json stats_json(const SeriesStats& s) {
  json j;
  j["n"] = s.n;
  j["mean"] = s.mean ? json(*s.mean) : json(nullptr);
  j["sd"] = s.sd ? json(*s.sd) : json(nullptr);
  if (s.five_number) {
    j["five_number"] = *s.five_number;
  } else {
    j["five_number"] = nullptr;
  }
  return j;
}

json territory_summary_json(const TerritorySummary& t) {
  json j;
  j["attenuation_hu"] = stats_json(t.attenuation_hu);
  j["volume_ml"] = stats_json(t.volume_ml);
  j["pooled_histogram"] = {{"lo_hu", t.window.lo},
                           {"hi_hu", t.window.hi},
                           {"bin_hu", t.histogram_bin_hu},
                           {"counts", t.pooled_histogram}};
  return j;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (first && !fields.empty() && fields[0] == "case_id") {
      first = false;
      continue;  // header row
    }
    first = false;
    if (fields.size() < 3)
      throw ConfigError("manifest line " + std::to_string(line_no) +
                        ": expected case_id,image,coronary_mask[,aorta_mask]");
    ManifestEntry entry;
    entry.case_id = fields[0];
    entry.image_path = fields[1];
    entry.coronary_mask_path = fields[2];
    if (fields.size() > 3) entry.aorta_mask_path = fields[3];
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) throw ConfigError("empty manifest '" + path + "'");
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.case_id);
  std::sort(ids.begin(), ids.end());
  const auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end()) throw ConfigError("duplicate case id '" + *dup + "' in manifest");
  return entries;
}

namespace {

void write_debug_outputs(const std::string& dir, const std::string& case_id,
                         const SplitResult& split, const TerritoryAnalysis& rpcat,
                         const TerritoryAnalysis& lpcat) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(dir) / (case_id + "_debug");
  fs::create_directories(base);
  save_mask((base / "rca_mask.nii.gz").string(), split.rca);
  save_mask((base / "lca_mask.nii.gz").string(), split.lca);

  const auto graph_mask = [](const SkeletonGraph& g) {
    BinaryMask m(g.dims, g.spacing, g.origin, 0);
    for (const std::size_t v : g.voxels) m[v] = 1;
    return m;
  };
  save_mask((base / "rca_skeleton.nii.gz").string(), graph_mask(rpcat.graph));
  save_mask((base / "lca_skeleton.nii.gz").string(), graph_mask(lpcat.graph));

  const auto region_mask = [](const PcatRegion& r) {
    BinaryMask m(r.dims, r.spacing, r.origin, 0);
    for (const std::size_t v : r.voxels) m[v] = 1;
    return m;
  };
  save_mask((base / "rpcat_region.nii.gz").string(), region_mask(rpcat.region));
  save_mask((base / "lpcat_region.nii.gz").string(), region_mask(lpcat.region));

  const auto graph_json = [](const SkeletonGraph& g) {
    json nodes = json::array();
    for (std::uint32_t n = 0; n < g.node_count(); ++n) {
      json entry;
      entry["voxel"] = g.voxels[n];
      entry["world_mm"] = g.node_world(n);
      entry["degree"] = g.degree(n);
      entry["neighbors"] = g.adjacency[n];
      nodes.push_back(entry);
    }
    return json{{"nodes", nodes}};
  };
  std::ofstream rj(base / "rca_graph.json");
  rj << graph_json(rpcat.graph).dump(2) << "\n";
  std::ofstream lj(base / "lca_graph.json");
  lj << graph_json(lpcat.graph).dump(2) << "\n";
}

}  // namespace

CaseRecord run_measure_case(const std::string& case_id, const RunConfig& config) {
  CaseRecord record;
  record.case_id = case_id;

  ImageGrid image;
  BinaryMask coronary;
  std::optional<BinaryMask> aorta;
  try {
    image = load_volume(config.image_path);
    coronary = load_mask(config.coronary_mask_path);
    if (!config.aorta_mask_path.empty()) aorta = load_mask(config.aorta_mask_path);
  } catch (const PcatError& e) {
    record.error_class = e.error_class();
    record.error_message = e.what();
    record.status = derive_case_status(record);
    return record;
  }
  const BinaryMask* aorta_ptr = aorta ? &*aorta : nullptr;

  SplitResult split;
  try {
    split = split_arteries(coronary, aorta_ptr, config.params);
  } catch (const PcatError& e) {
    record.error_class = e.error_class();
    record.error_message = e.what();
    record.status = derive_case_status(record);
    return record;
  }

  std::optional<TerritoryAnalysis> rpcat, lpcat;
  try {
    rpcat = analyze_rpcat(image, split.rca, aorta_ptr, config.params);
    record.rpcat.measurement = rpcat->measurement;
  } catch (const PcatError& e) {
    record.rpcat.error_class = e.error_class();
    record.rpcat.error_message = e.what();
  }
  try {
    lpcat = analyze_lpcat(image, split.lca, aorta_ptr, config.params);
    record.lpcat.measurement = lpcat->measurement;
  } catch (const PcatError& e) {
    record.lpcat.error_class = e.error_class();
    record.lpcat.error_message = e.what();
  }

  if (config.emit_debug_masks && rpcat && lpcat)
    write_debug_outputs(config.output_dir, case_id, split, *rpcat, *lpcat);

  record.status = derive_case_status(record);
  return record;
}

std::string case_record_to_json(const CaseRecord& record, const ProtocolParams& params,
                                bool with_timestamp) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["case_id"] = record.case_id;
  j["status"] = record.status;
  if (!record.error_class.empty())
    j["error"] = {{"class", record.error_class}, {"message", record.error_message}};
  else
    j["error"] = nullptr;
  j["parameters"] = params_json(params);
  j["rpcat"] = territory_json(record.rpcat);
  j["lpcat"] = territory_json(record.lpcat);
  j["metadata"] = metadata_json(with_timestamp);
  return j.dump(2) + "\n";
}

CaseRecord case_record_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("invalid case JSON: ") + e.what());
  }
  try {
    CaseRecord record;
    record.case_id = j.at("case_id").get<std::string>();
    record.status = j.value("status", "ok");
    if (j.contains("error") && !j.at("error").is_null()) {
      record.error_class = j.at("error").at("class").get<std::string>();
      record.error_message = j.at("error").value("message", "");
    }
    record.rpcat = territory_from_json(j.value("rpcat", json(nullptr)));
    record.lpcat = territory_from_json(j.value("lpcat", json(nullptr)));
    return record;
  } catch (const json::exception& e) {
    throw IoError(std::string("case JSON missing field: ") + e.what());
  }
}

std::string cohort_report_to_json(const CohortReport& report, const ProtocolParams& params,
                                  bool with_timestamp) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["n_total"] = report.n_total;
  j["status_counts"] = report.status_counts;
  j["territories"] = {{"rpcat", territory_summary_json(report.rpcat)},
                      {"lpcat", territory_summary_json(report.lpcat)}};
  j["correlations"] = {
      {"rpcat_vs_lpcat_attenuation_r2", report.r2_attenuation_rpcat_lpcat
                                            ? json(*report.r2_attenuation_rpcat_lpcat)
                                            : json(nullptr)},
      {"rpcat_attenuation_vs_volume_r2", report.r2_attenuation_volume_rpcat
                                             ? json(*report.r2_attenuation_volume_rpcat)
                                             : json(nullptr)},
      {"lpcat_attenuation_vs_volume_r2", report.r2_attenuation_volume_lpcat
                                             ? json(*report.r2_attenuation_volume_lpcat)
                                             : json(nullptr)}};
  j["parameters"] = params_json(params);
  json cases = json::array();
  for (const auto& record : report.cases) {
    json c;
    c["case_id"] = record.case_id;
    c["status"] = record.status;
    if (!record.error_class.empty())
      c["error"] = {{"class", record.error_class}, {"message", record.error_message}};
    else
      c["error"] = nullptr;
    c["rpcat"] = territory_json(record.rpcat);
    c["lpcat"] = territory_json(record.lpcat);
    cases.push_back(c);
  }
  j["cases"] = cases;
  j["metadata"] = metadata_json(with_timestamp);
  return j.dump(2) + "\n";
}

std::string cases_csv_header() {
  return "case_id,status,error_class,"
         "rpcat_mean_hu,rpcat_volume_ml,rpcat_voxel_count,rpcat_truncated,"
         "lpcat_mean_hu,lpcat_volume_ml,lpcat_voxel_count,lpcat_truncated";
}

std::string case_record_to_csv(const CaseRecord& record) {
  const auto territory_fields = [](const TerritoryOutcome& outcome) {
    if (!outcome.measurement) return std::string(",,,");
    const PcatMeasurement& m = *outcome.measurement;
    std::string s;
    s += (m.mean_attenuation_hu ? fmt(*m.mean_attenuation_hu) : "") + ",";
    s += fmt(m.volume_ml) + ",";
    s += std::to_string(m.voxel_count) + ",";
    s += m.truncated ? "true" : "false";
    return s;
  };
  std::string error_class = record.error_class;
  if (error_class.empty() && !record.rpcat.error_class.empty())
    error_class = record.rpcat.error_class;
  if (error_class.empty() && !record.lpcat.error_class.empty())
    error_class = record.lpcat.error_class;
  return record.case_id + "," + record.status + "," + error_class + "," +
         territory_fields(record.rpcat) + "," + territory_fields(record.lpcat);
}

std::string histograms_csv(const CohortReport& report) {
  std::string out = "territory,bin_lo_hu,bin_hi_hu,count\n";
  const auto emit = [&out](const char* name, const TerritorySummary& t) {
    for (std::size_t b = 0; b < t.pooled_histogram.size(); ++b) {
      const double lo = t.window.lo + static_cast<double>(b) * t.histogram_bin_hu;
      const double hi = std::min(t.window.hi, lo + t.histogram_bin_hu);
      out += std::string(name) + "," + fmt(lo) + "," + fmt(hi) + "," +
             std::to_string(t.pooled_histogram[b]) + "\n";
    }
  };
  emit("rpcat", report.rpcat);
  emit("lpcat", report.lpcat);
  return out;
}

std::string boxplot_csv(const CohortReport& report) {
  std::string out = "territory,metric,min,q1,median,q3,max\n";
  const auto emit = [&out](const char* name, const char* metric, const SeriesStats& s) {
    if (!s.five_number) return;
    const auto& f = *s.five_number;
    out += std::string(name) + "," + metric + "," + fmt(f[0]) + "," + fmt(f[1]) + "," +
           fmt(f[2]) + "," + fmt(f[3]) + "," + fmt(f[4]) + "\n";
  };
  emit("rpcat", "attenuation_hu", report.rpcat.attenuation_hu);
  emit("rpcat", "volume_ml", report.rpcat.volume_ml);
  emit("lpcat", "attenuation_hu", report.lpcat.attenuation_hu);
  emit("lpcat", "volume_ml", report.lpcat.volume_ml);
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
}

}  // namespace

void write_case_files(const CaseRecord& record, const ProtocolParams& params,
                      const std::string& output_dir, bool with_timestamp) {
  std::filesystem::create_directories(output_dir);
  const auto path = std::filesystem::path(output_dir) / (record.case_id + ".json");
  write_text(path.string(), case_record_to_json(record, params, with_timestamp));
}

BatchResult run_batch(const std::vector<ManifestEntry>& manifest, const RunConfig& base_config,
                      int workers) {
  if (manifest.empty()) throw ConfigError("empty manifest");
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
  }
  workers = std::min<int>(workers, static_cast<int>(manifest.size()));

  std::vector<CaseRecord> records(manifest.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.size()) return;
      RunConfig config = base_config;
      config.image_path = manifest[i].image_path;
      config.coronary_mask_path = manifest[i].coronary_mask_path;
      config.aorta_mask_path = manifest[i].aorta_mask_path;
      records[i] = run_measure_case(manifest[i].case_id, config);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BatchResult result;
  for (const auto& r : records)
    if (r.status != "ok") ++result.warning_count;
  result.report = aggregate(std::move(records));
  return result;
}

void write_report_files(const CohortReport& report, const ProtocolParams& params,
                        const std::string& output_dir, bool with_timestamp) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  write_text((fs::path(output_dir) / "report.json").string(),
             cohort_report_to_json(report, params, with_timestamp));
  std::string csv = cases_csv_header() + "\n";
  for (const auto& record : report.cases) csv += case_record_to_csv(record) + "\n";
  write_text((fs::path(output_dir) / "cases.csv").string(), csv);
  write_text((fs::path(output_dir) / "histograms.csv").string(), histograms_csv(report));
  write_text((fs::path(output_dir) / "boxplot.csv").string(), boxplot_csv(report));
}

}  // namespace pcat
