#include "pcat/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcat/errors.hpp"

namespace pcat {

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_geometry(b)) throw GeometryMismatchError("dice: mask geometry differs");
  std::uint64_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool va = a[i] != 0, vb = b[i] != 0;
    na += va;
    nb += vb;
    inter += va && vb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::optional<double> pearson_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r2: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson_r2: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return (sxy * sxy) / (sxx * syy);
}

const std::array<const char*, 6> kCaseStatuses = {
    "ok", "truncated", "no-bifurcation", "short-centerline", "split-failed", "io-error"};

namespace {

int status_rank(const std::string& status) {
  for (std::size_t i = 0; i < kCaseStatuses.size(); ++i)
    if (status == kCaseStatuses[i]) return static_cast<int>(i);
  return static_cast<int>(kCaseStatuses.size());  // unknown ranks worst
}

std::string territory_status(const TerritoryOutcome& outcome) {
  if (!outcome.error_class.empty()) return outcome.error_class;
  if (outcome.measurement && outcome.measurement->truncated) return "truncated";
  return "ok";
}

SeriesStats series_stats(const std::vector<double>& values) {
  SeriesStats s;
  s.n = values.size();
  if (values.empty()) return s;
  double mean = 0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());  // population SD
  s.mean = mean;
  s.sd = std::sqrt(var);

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
  };
  s.five_number = {sorted.front(), quantile(0.25), quantile(0.5), quantile(0.75), sorted.back()};
  return s;
}

}  // namespace

std::string derive_case_status(const CaseRecord& record) {
  std::string status = "ok";
  if (!record.error_class.empty()) status = record.error_class;
  for (const auto* outcome : {&record.rpcat, &record.lpcat}) {
    const std::string ts = territory_status(*outcome);
    if (status_rank(ts) > status_rank(status)) status = ts;
  }
  return status;
}

CohortReport aggregate(std::vector<CaseRecord> records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::sort(records.begin(), records.end(),
            [](const CaseRecord& a, const CaseRecord& b) { return a.case_id < b.case_id; });

  CohortReport report;
  report.n_total = records.size();
  for (const auto* status : kCaseStatuses) report.status_counts[status] = 0;

  std::vector<double> r_att, r_vol, l_att, l_vol, pair_r, pair_l;
  bool window_set = false;
  for (auto& record : records) {
    record.status = derive_case_status(record);
    auto it = report.status_counts.find(record.status);
    if (it == report.status_counts.end())
      it = report.status_counts.emplace(record.status, 0).first;
    ++it->second;
    if (record.status != "ok") continue;
    if (!record.rpcat.measurement || !record.lpcat.measurement) continue;

    const PcatMeasurement& r = *record.rpcat.measurement;
    const PcatMeasurement& l = *record.lpcat.measurement;
    if (!window_set) {
      report.rpcat.window = r.window;
      report.lpcat.window = l.window;
      report.rpcat.histogram_bin_hu = r.histogram_bin_hu;
      report.lpcat.histogram_bin_hu = l.histogram_bin_hu;
      report.rpcat.pooled_histogram.assign(r.histogram.size(), 0);
      report.lpcat.pooled_histogram.assign(l.histogram.size(), 0);
      window_set = true;
    }
    if (r.mean_attenuation_hu) {
      r_att.push_back(*r.mean_attenuation_hu);
      r_vol.push_back(r.volume_ml);
    }
    if (l.mean_attenuation_hu) {
      l_att.push_back(*l.mean_attenuation_hu);
      l_vol.push_back(l.volume_ml);
    }
    if (r.mean_attenuation_hu && l.mean_attenuation_hu) {
      pair_r.push_back(*r.mean_attenuation_hu);
      pair_l.push_back(*l.mean_attenuation_hu);
    }
    for (std::size_t b = 0; b < r.histogram.size() && b < report.rpcat.pooled_histogram.size(); ++b)
      report.rpcat.pooled_histogram[b] += r.histogram[b];
    for (std::size_t b = 0; b < l.histogram.size() && b < report.lpcat.pooled_histogram.size(); ++b)
      report.lpcat.pooled_histogram[b] += l.histogram[b];
  }

  report.rpcat.attenuation_hu = series_stats(r_att);
  report.rpcat.volume_ml = series_stats(r_vol);
  report.lpcat.attenuation_hu = series_stats(l_att);
  report.lpcat.volume_ml = series_stats(l_vol);

  if (pair_r.size() >= 2) report.r2_attenuation_rpcat_lpcat = pearson_r2(pair_r, pair_l);
  if (r_att.size() >= 2) report.r2_attenuation_volume_rpcat = pearson_r2(r_att, r_vol);
  if (l_att.size() >= 2) report.r2_attenuation_volume_lpcat = pearson_r2(l_att, l_vol);

  report.cases = std::move(records);
  return report;
}

}  // namespace pcat
