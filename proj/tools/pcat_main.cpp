#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "pcat/errors.hpp"
#include "pcat/nifti.hpp"
#include "pcat/phantom.hpp"
#include "pcat/pipeline.hpp"
#include "pcat/version.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success/partial, 1 usage, 2 fatal I/O, 3 config invalid,
// 4 measurement failure (split-failed, no-bifurcation, short-centerline, ...).
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitConfig = 3;
constexpr int kExitMeasurement = 4;

void print_error(const std::string& error_class, const std::string& message) {
  std::cerr << "pcat: error [" << error_class << "] " << message << "\n";
}

int exit_code_for(const std::string& error_class) {
  if (error_class.empty()) return kExitOk;
  if (error_class == "io-error") return kExitIo;
  if (error_class == "config-invalid") return kExitConfig;
  return kExitMeasurement;
}

void add_protocol_options(CLI::App* cmd, pcat::ProtocolParams& params, std::string& region_mode) {
  cmd->add_option("--skip-mm", params.skip_mm, "Offset distal to the ostium before measuring (RPCAT)")
      ->capture_default_str();
  cmd->add_option("--segment-mm", params.segment_mm, "Measured segment length")
      ->capture_default_str();
  cmd->add_option("--hu-lo", params.window.lo, "Lower HU window bound (inclusive)")
      ->capture_default_str();
  cmd->add_option("--hu-hi", params.window.hi, "Upper HU window bound (inclusive)")
      ->capture_default_str();
  cmd->add_option("--spur-mm", params.spur_mm, "Centerline spur-pruning threshold")
      ->capture_default_str();
  cmd->add_option("--min-component-voxels", params.min_component_voxels,
                  "Smallest component accepted by the artery split")
      ->capture_default_str();
  cmd->add_option("--region-mode", region_mode,
                  "Sweep radius rule: sphere-of-diameter or fixed-annulus-5mm")
      ->check(CLI::IsMember({"sphere-of-diameter", "fixed-annulus-5mm"}))
      ->capture_default_str();
  cmd->add_option("--lm-search-mm", params.lm_search_mm,
                  "How far from the ostium to look for the LM bifurcation")
      ->capture_default_str();
  cmd->add_option("--histogram-bin-hu", params.histogram_bin_hu, "Histogram bin width in HU")
      ->capture_default_str();
  cmd->set_config("--config", "", "Read options from a key=value config file");
}

std::string derive_error_class(const pcat::CaseRecord& record) {
  if (!record.error_class.empty()) return record.error_class;
  if (!record.rpcat.error_class.empty()) return record.rpcat.error_class;
  if (!record.lpcat.error_class.empty()) return record.lpcat.error_class;
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated pericoronary adipose tissue (PCAT) measurement for cardiac CTA"};
  app.set_version_flag("--version", std::string(pcat::kVersion));
  app.require_subcommand(1);

  int exit_code = kExitOk;

  // --- measure -------------------------------------------------------------
  auto* measure = app.add_subcommand(
      "measure", "Measure RPCAT and LPCAT for one volume + coronary mask");
  auto measure_cfg = std::make_shared<pcat::RunConfig>();
  auto measure_case_id = std::make_shared<std::string>();
  auto measure_mode = std::make_shared<std::string>("sphere-of-diameter");
  measure->add_option("--image", measure_cfg->image_path, "CCTA volume (.nii/.nii.gz)")
      ->required();
  measure->add_option("--coronary-mask", measure_cfg->coronary_mask_path,
                      "Combined coronary segmentation mask")
      ->required();
  measure->add_option("--aorta-mask", measure_cfg->aorta_mask_path,
                      "Optional aorta mask (anchors the ostium search)");
  measure->add_option("--case-id", *measure_case_id, "Case identifier (default: image stem)");
  measure->add_option("-o,--output-dir", measure_cfg->output_dir, "Output directory")
      ->capture_default_str();
  measure->add_flag("--emit-debug-masks", measure_cfg->emit_debug_masks,
                    "Also write split masks, skeletons and swept regions");
  add_protocol_options(measure, measure_cfg->params, *measure_mode);
  measure->callback([&, measure_cfg, measure_case_id, measure_mode]() {
    measure_cfg->params.region_mode = pcat::region_mode_from_name(*measure_mode);
    std::string case_id = *measure_case_id;
    if (case_id.empty()) {
      case_id = fs::path(measure_cfg->image_path).filename().string();
      for (const char* suffix : {".nii.gz", ".nii"}) {
        const std::string s(suffix);
        if (case_id.size() > s.size() &&
            case_id.compare(case_id.size() - s.size(), s.size(), s) == 0)
          case_id = case_id.substr(0, case_id.size() - s.size());
      }
    }
    const pcat::CaseRecord record = pcat::run_measure_case(case_id, *measure_cfg);
    pcat::write_case_files(record, measure_cfg->params, measure_cfg->output_dir);
    const std::string error_class = derive_error_class(record);
    if (!error_class.empty()) {
      print_error(error_class, record.error_message.empty()
                                   ? record.rpcat.error_message + record.lpcat.error_message
                                   : record.error_message);
    }
    std::cout << (fs::path(measure_cfg->output_dir) / (case_id + ".json")).string() << "\n";
    exit_code = exit_code_for(error_class);
  });

  // --- batch ---------------------------------------------------------------
  auto* batch = app.add_subcommand("batch", "Measure every case in a manifest CSV");
  auto batch_cfg = std::make_shared<pcat::RunConfig>();
  auto batch_manifest = std::make_shared<std::string>();
  auto batch_mode = std::make_shared<std::string>("sphere-of-diameter");
  auto batch_workers = std::make_shared<int>(0);
  batch->add_option("--manifest", *batch_manifest,
                    "CSV with columns case_id,image,coronary_mask[,aorta_mask]")
      ->required();
  batch->add_option("-o,--output-dir", batch_cfg->output_dir, "Output directory")
      ->capture_default_str();
  batch->add_option("--workers", *batch_workers, "Worker threads (0 = all hardware threads)")
      ->envname("PCAT_WORKERS")
      ->capture_default_str();
  add_protocol_options(batch, batch_cfg->params, *batch_mode);
  batch->callback([&, batch_cfg, batch_manifest, batch_mode, batch_workers]() {
    batch_cfg->params.region_mode = pcat::region_mode_from_name(*batch_mode);
    const auto manifest = pcat::read_manifest(*batch_manifest);
    const pcat::BatchResult result = pcat::run_batch(manifest, *batch_cfg, *batch_workers);
    for (const auto& record : result.report.cases)
      pcat::write_case_files(record, batch_cfg->params, batch_cfg->output_dir);
    pcat::write_report_files(result.report, batch_cfg->params, batch_cfg->output_dir);
    if (result.warning_count > 0)
      std::cerr << "pcat: warning: " << result.warning_count << " of "
                << result.report.n_total << " case(s) did not complete cleanly\n";
    std::cout << (fs::path(batch_cfg->output_dir) / "report.json").string() << "\n";
  });

  // --- split ---------------------------------------------------------------
  auto* split = app.add_subcommand(
      "split", "Separate a combined coronary mask into RCA and LCA components");
  auto split_coronary = std::make_shared<std::string>();
  auto split_aorta = std::make_shared<std::string>();
  auto split_outdir = std::make_shared<std::string>(".");
  auto split_params = std::make_shared<pcat::ProtocolParams>();
  split->add_option("--coronary-mask", *split_coronary, "Combined coronary mask")->required();
  split->add_option("--aorta-mask", *split_aorta, "Optional aorta mask");
  split->add_option("-o,--output-dir", *split_outdir, "Output directory")->capture_default_str();
  split->add_option("--min-component-voxels", split_params->min_component_voxels,
                    "Smallest component accepted")
      ->capture_default_str();
  split->callback([&, split_coronary, split_aorta, split_outdir, split_params]() {
    const pcat::BinaryMask coronary = pcat::load_mask(*split_coronary);
    std::optional<pcat::BinaryMask> aorta;
    if (!split_aorta->empty()) aorta = pcat::load_mask(*split_aorta);
    const pcat::SplitResult result =
        pcat::split_arteries(coronary, aorta ? &*aorta : nullptr, *split_params);
    fs::create_directories(*split_outdir);
    pcat::save_mask((fs::path(*split_outdir) / "rca_mask.nii.gz").string(), result.rca);
    pcat::save_mask((fs::path(*split_outdir) / "lca_mask.nii.gz").string(), result.lca);
    std::cout << (fs::path(*split_outdir) / "rca_mask.nii.gz").string() << "\n"
              << (fs::path(*split_outdir) / "lca_mask.nii.gz").string() << "\n";
  });

  // --- phantom ---------------------------------------------------------------
  auto* phantom = app.add_subcommand(
      "phantom", "Render a synthetic vessel phantom to a NIfTI triplet");
  auto phantom_spec_path = std::make_shared<std::string>();
  auto phantom_preset = std::make_shared<std::string>();
  auto phantom_outdir = std::make_shared<std::string>(".");
  phantom->add_option("--spec", *phantom_spec_path, "Phantom spec JSON file");
  phantom->add_option("--preset", *phantom_preset, "Built-in phantom")
      ->check(CLI::IsMember({"straight", "y", "two-vessel"}));
  phantom->add_option("-o,--output-dir", *phantom_outdir, "Output directory")
      ->capture_default_str();
  phantom->callback([&, phantom_spec_path, phantom_preset, phantom_outdir]() {
    pcat::PhantomSpec spec;
    if (!phantom_spec_path->empty()) {
      std::ifstream in(*phantom_spec_path);
      if (!in) throw pcat::IoError("cannot open phantom spec '" + *phantom_spec_path + "'");
      std::stringstream buffer;
      buffer << in.rdbuf();
      spec = pcat::phantom_from_json(buffer.str());
    } else if (*phantom_preset == "straight") {
      spec = pcat::straight_tube_phantom();
    } else if (*phantom_preset == "y") {
      spec = pcat::y_phantom();
    } else if (*phantom_preset == "two-vessel") {
      spec = pcat::two_vessel_phantom();
    } else {
      throw pcat::ConfigError("phantom: give either --spec or --preset");
    }
    const pcat::PhantomVolumes volumes = pcat::render(spec);
    fs::create_directories(*phantom_outdir);
    const fs::path dir(*phantom_outdir);
    pcat::save_volume((dir / "image.nii.gz").string(), volumes.image);
    pcat::save_mask((dir / "vessel_mask.nii.gz").string(), volumes.vessel_mask);
    pcat::save_mask((dir / "aorta_mask.nii.gz").string(), volumes.aorta_mask);
    std::ofstream echo(dir / "spec.json");
    echo << pcat::phantom_to_json(spec);
    std::cout << (dir / "image.nii.gz").string() << "\n";
  });

  // --- report ----------------------------------------------------------------
  auto* report = app.add_subcommand(
      "report", "Aggregate per-case JSON outputs into a cohort report");
  auto report_inputs = std::make_shared<std::vector<std::string>>();
  auto report_outdir = std::make_shared<std::string>(".");
  report->add_option("--cases", *report_inputs,
                     "Per-case JSON files, or a directory containing them")
      ->required();
  report->add_option("-o,--output-dir", *report_outdir, "Output directory")
      ->capture_default_str();
  report->callback([&, report_inputs, report_outdir]() {
    std::vector<std::string> files;
    for (const auto& input : *report_inputs) {
      if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input))
          if (entry.path().extension() == ".json") files.push_back(entry.path().string());
      } else {
        files.push_back(input);
      }
    }
    std::sort(files.begin(), files.end());
    std::vector<pcat::CaseRecord> records;
    for (const auto& file : files) {
      std::ifstream in(file);
      if (!in) throw pcat::IoError("cannot open case file '" + file + "'");
      std::stringstream buffer;
      buffer << in.rdbuf();
      try {
        records.push_back(pcat::case_record_from_json(buffer.str()));
      } catch (const pcat::IoError&) {
        std::cerr << "pcat: warning: skipping '" << file << "' (not a case record)\n";
      }
    }
    if (records.empty()) throw pcat::ConfigError("no case records found");
    const pcat::CohortReport cohort = pcat::aggregate(std::move(records));
    pcat::write_report_files(cohort, pcat::ProtocolParams{}, *report_outdir);
    std::cout << (fs::path(*report_outdir) / "report.json").string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ConfigError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const pcat::IoError& e) {
    print_error(e.error_class(), e.what());
    return kExitIo;
  } catch (const pcat::ConfigError& e) {
    print_error(e.error_class(), e.what());
    return kExitConfig;
  } catch (const pcat::PcatError& e) {
    print_error(e.error_class(), e.what());
    return kExitMeasurement;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitMeasurement;
  }
  return exit_code;
}
