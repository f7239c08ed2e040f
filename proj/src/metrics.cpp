#include "sbhd/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "sbhd/errors.hpp"
#include "sbhd/hazard.hpp"
#include "sbhd/uncertainty.hpp"

namespace sbhd {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(std::optional<double> v) {
  if (!v) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

nlohmann::json json_opt(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

using Field = std::optional<double> MetricValues::*;
constexpr Field kFields[] = {&MetricValues::precision, &MetricValues::sensitivity, &MetricValues::accuracy,
                             &MetricValues::miou, &MetricValues::screening_rate};
constexpr const char* kFieldNames[] = {"precision", "sensitivity", "accuracy", "miou", "screening_rate"};

// Mean over the rows where the value is defined.
struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(std::optional<double> v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> value() const { return n ? std::optional(sum / static_cast<double>(n)) : std::nullopt; }
};

double axis_value(const ImageMeta& meta, BinAxis axis) {
  switch (axis) {
    case BinAxis::kGsd: return meta.gsd;
    case BinAxis::kViewingAngle: return meta.viewing_angle;
    case BinAxis::kVisibilityRatio: return meta.visibility_ratio;
  }
  return 0.0;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  true_safe += o.true_safe;
  false_safe += o.false_safe;
  true_unsafe += o.true_unsafe;
  false_unsafe += o.false_unsafe;
  screened_safe += o.screened_safe;
  screened_unsafe += o.screened_unsafe;
  valid_pixels += o.valid_pixels;
  return *this;
}

bool ConfusionCounts::consistent() const {
  return false_unsafe >= screened_safe &&
         valid_pixels == true_safe + false_safe + true_unsafe + (false_unsafe - screened_safe);
}

ConfusionCounts accumulate(const Grid<std::uint8_t>& prediction, const PixelLabelMap& truth, const EvalMode& mode) {
  if (!prediction.same_shape(truth.labels) || !truth.shadow.same_shape(truth.labels))
    throw StructuralError("accumulate: prediction and truth shapes differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const std::uint8_t t = truth.labels.values()[i];
    if (t == code(Safety::kInvalid)) continue;
    if (mode.ignore_shadows && truth.shadow.values()[i]) continue;
    if (t != code(Safety::kSafe) && t != code(Safety::kUnsafe))
      throw StructuralError("accumulate: truth code " + std::to_string(t) + " is not 0, 1 or 255");
    const bool truly_safe = t == code(Safety::kSafe);
    switch (prediction.values()[i]) {
      case code(Safety::kSafe):
        ++(truly_safe ? c.true_safe : c.false_safe);
        ++c.valid_pixels;
        break;
      case code(Safety::kUnsafe):
        ++(truly_safe ? c.false_unsafe : c.true_unsafe);
        ++c.valid_pixels;
        break;
      case kScreenedCode:
        if (!mode.with_uncertainty)
          throw StructuralError("accumulate: screened prediction code outside with-uncertainty mode");
        if (truly_safe) {
          ++c.screened_safe;
          ++c.false_unsafe;
        } else {
          ++c.screened_unsafe;
        }
        break;
      default:
        throw StructuralError("accumulate: prediction code " + std::to_string(prediction.values()[i]) +
                              " at a labeled pixel");
    }
  }
  return c;
}

MetricValues compute_metrics(const ConfusionCounts& c) {
  MetricValues m;
  m.precision = ratio(c.true_safe, c.true_safe + c.false_safe);
  m.sensitivity = ratio(c.true_safe, c.true_safe + c.false_unsafe);
  m.accuracy = ratio(c.true_safe + c.true_unsafe, c.valid_pixels);
  const auto iou_safe = ratio(c.true_safe, c.valid_pixels - c.true_unsafe);
  const auto iou_unsafe = ratio(c.true_unsafe, c.valid_pixels - c.true_safe);
  if (iou_safe && iou_unsafe) m.miou = 0.5 * (*iou_safe + *iou_unsafe);
  m.screening_rate = ratio(c.screened(), c.valid_pixels + c.screened());
  return m;
}

MetricsRow make_row(std::string image_id, const ConfusionCounts& counts, std::optional<ImageMeta> meta,
                    std::optional<double> mean_entropy) {
  return MetricsRow{std::move(image_id), counts, compute_metrics(counts), meta, mean_entropy};
}

MetricsReport build_report(std::vector<MetricsRow> images, const EvalMode& mode) {
  MetricsReport report;
  report.mode = mode;
  ConfusionCounts total;
  Mean entropy;
  Mean averaged[std::size(kFields)];
  for (const MetricsRow& row : images) {
    total += row.counts;
    entropy.add(row.mean_entropy);
    for (std::size_t k = 0; k < std::size(kFields); ++k) averaged[k].add(row.metrics.*kFields[k]);
  }
  report.pooled = make_row("__pooled__", total, std::nullopt, entropy.value());
  for (std::size_t k = 0; k < std::size(kFields); ++k) report.image_averaged.*kFields[k] = averaged[k].value();
  report.images = std::move(images);
  return report;
}

BinAxis parse_bin_axis(const std::string& name) {
  if (name == "gsd") return BinAxis::kGsd;
  if (name == "viewing_angle") return BinAxis::kViewingAngle;
  if (name == "visibility_ratio") return BinAxis::kVisibilityRatio;
  throw StructuralError("unknown bin axis '" + name + "' (expected gsd, viewing_angle or visibility_ratio)");
}

std::string to_string(BinAxis axis) {
  switch (axis) {
    case BinAxis::kGsd: return "gsd";
    case BinAxis::kViewingAngle: return "viewing_angle";
    case BinAxis::kVisibilityRatio: return "visibility_ratio";
  }
  return "?";
}

BinnedTable bin_report(std::span<const MetricsRow> rows, BinAxis axis, std::span<const double> edges) {
  if (edges.size() < 2) throw StructuralError("bin_report: need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw StructuralError("bin_report: bin edges must be strictly increasing");

  const std::size_t n_bins = edges.size() - 1;
  std::vector<std::array<Mean, std::size(kFields)>> sums(n_bins);
  std::vector<Mean> entropy(n_bins);
  BinnedTable table;
  table.axis = axis;
  table.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    table.bins[b].lower = edges[b];
    table.bins[b].upper = edges[b + 1];
  }
  for (const MetricsRow& row : rows) {
    if (!row.meta) throw StructuralError("bin_report: row '" + row.image_id + "' has no image metadata");
    const double v = axis_value(*row.meta, axis);
    if (v < edges.front() || v > edges.back()) continue;
    std::size_t b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
    b = std::min(b, n_bins - 1);  // v == last edge
    ++table.bins[b].count;
    for (std::size_t k = 0; k < std::size(kFields); ++k) sums[b][k].add(row.metrics.*kFields[k]);
    entropy[b].add(row.mean_entropy);
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    for (std::size_t k = 0; k < std::size(kFields); ++k) table.bins[b].means.*kFields[k] = sums[b][k].value();
    table.bins[b].mean_entropy = entropy[b].value();
  }
  return table;
}

std::string format_report_csv(const MetricsReport& report) {
  std::string out =
      "image_id,true_safe,false_safe,true_unsafe,false_unsafe,screened_safe,screened_unsafe,valid_pixels,"
      "precision,sensitivity,accuracy,miou,screening_rate,mean_entropy,gsd,imaging_depth,viewing_angle,"
      "visibility_ratio\n";
  auto line = [&](const std::string& id, const ConfusionCounts* c, const MetricValues& m,
                  std::optional<double> entropy, const std::optional<ImageMeta>& meta) {
    out += id;
    if (c) {
      for (auto v : {c->true_safe, c->false_safe, c->true_unsafe, c->false_unsafe, c->screened_safe,
                     c->screened_unsafe, c->valid_pixels})
        out += "," + std::to_string(v);
    } else {
      out += ",null,null,null,null,null,null,null";
    }
    for (Field f : kFields) out += "," + fmt(m.*f);
    out += "," + fmt(entropy);
    if (meta) {
      out += "," + fmt(meta->gsd) + "," + fmt(meta->imaging_depth) + "," + fmt(meta->viewing_angle) + "," +
             fmt(meta->visibility_ratio);
    } else {
      out += ",null,null,null,null";
    }
    out += "\n";
  };
  for (const MetricsRow& row : report.images) line(row.image_id, &row.counts, row.metrics, row.mean_entropy, row.meta);
  line(report.pooled.image_id, &report.pooled.counts, report.pooled.metrics, report.pooled.mean_entropy,
       std::nullopt);
  line("__image_mean__", nullptr, report.image_averaged, report.pooled.mean_entropy, std::nullopt);
  return out;
}

std::string format_bins_csv(const BinnedTable& table) {
  std::string out = "axis,lower,upper,count,status,precision,sensitivity,accuracy,miou,screening_rate,mean_entropy\n";
  for (const BinRow& b : table.bins) {
    out += to_string(table.axis) + "," + fmt(b.lower) + "," + fmt(b.upper) + "," + std::to_string(b.count) + "," +
           (b.count == 0 ? "empty" : "ok");
    for (Field f : kFields) out += "," + fmt(b.means.*f);
    out += "," + fmt(b.mean_entropy) + "\n";
  }
  return out;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  auto values = [](const MetricValues& m) {
    nlohmann::json j;
    for (std::size_t k = 0; k < std::size(kFields); ++k) j[kFieldNames[k]] = json_opt(m.*kFields[k]);
    return j;
  };
  auto counts = [](const ConfusionCounts& c) {
    return nlohmann::json{{"true_safe", c.true_safe},         {"false_safe", c.false_safe},
                          {"true_unsafe", c.true_unsafe},     {"false_unsafe", c.false_unsafe},
                          {"screened_safe", c.screened_safe}, {"screened_unsafe", c.screened_unsafe},
                          {"valid_pixels", c.valid_pixels}};
  };
  nlohmann::json doc;
  doc["mode"] = {{"with_uncertainty", report.mode.with_uncertainty}, {"ignore_shadows", report.mode.ignore_shadows}};
  doc["images"] = nlohmann::json::array();
  for (const MetricsRow& row : report.images) {
    nlohmann::json r{{"image_id", row.image_id},
                     {"counts", counts(row.counts)},
                     {"metrics", values(row.metrics)},
                     {"mean_entropy", json_opt(row.mean_entropy)}};
    if (row.meta)
      r["meta"] = {{"gsd", row.meta->gsd},
                   {"imaging_depth", row.meta->imaging_depth},
                   {"viewing_angle", row.meta->viewing_angle},
                   {"visibility_ratio", row.meta->visibility_ratio}};
    else
      r["meta"] = nullptr;
    doc["images"].push_back(std::move(r));
  }
  doc["pooled"] = {{"counts", counts(report.pooled.counts)}, {"metrics", values(report.pooled.metrics)}};
  doc["image_averaged"] = values(report.image_averaged);
  return doc;
}

}  // namespace sbhd
