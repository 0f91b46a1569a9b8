#include "bubbleglare/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bubbleglare/colorspace.hpp"
#include "bubbleglare/errors.hpp"

namespace bubbleglare {

using nlohmann::ordered_json;

void GroundTruth::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("ground truth size must be positive");
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    if (polygons[i].size() < 3)
      throw std::invalid_argument("ground truth polygon " + std::to_string(i) + " has fewer than 3 vertices");
    for (const auto& p : polygons[i])
      if (p.x() < 0 || p.y() < 0 || p.x() > static_cast<double>(height) || p.y() > static_cast<double>(width))
        throw std::invalid_argument("ground truth polygon " + std::to_string(i) + " leaves the image");
  }
}

GroundTruth GroundTruth::parse(std::string_view text) {
  GroundTruth gt;
  try {
    const auto j = nlohmann::json::parse(text);
    gt.width = j.at("size").at(0).get<Index>();
    gt.height = j.at("size").at(1).get<Index>();
    for (const auto& poly : j.at("polygons")) {
      Polygon p;
      for (const auto& v : poly) p.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      gt.polygons.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("ground truth: ") + ex.what());
  }
  gt.validate();
  return gt;
}

GroundTruth GroundTruth::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground truth " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string GroundTruth::to_json() const {
  ordered_json j;
  j["size"] = {width, height};
  j["polygons"] = ordered_json::array();
  for (const auto& poly : polygons) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : poly) pts.push_back({p.x(), p.y()});
    j["polygons"].push_back(std::move(pts));
  }
  return j.dump();
}

BinaryMask rasterize(const GroundTruth& gt, Index width, Index height, std::vector<std::string>* warnings) {
  gt.validate();
  const double sy = static_cast<double>(height) / static_cast<double>(gt.height);
  const double sx = static_cast<double>(width) / static_cast<double>(gt.width);
  BinaryMask mask(width, height);
  for (std::size_t i = 0; i < gt.polygons.size(); ++i) {
    Polygon scaled;
    for (const auto& p : gt.polygons[i]) scaled.emplace_back(p.x() * sy, p.y() * sx);
    if (std::abs(signed_area(scaled)) < 1e-12) {
      if (warnings) warnings->push_back("ground truth polygon " + std::to_string(i) + " is degenerate; skipped");
      continue;
    }
    // Union of polygons: each is filled on its own so overlaps do not cancel.
    const Polygon* one = &scaled;
    paint_runs(mask.bits(), fill_even_odd(std::span<const Polygon>(one, 1), width, height, 0.5));
  }
  return mask;
}

double iou(const BinaryMask& pred, const BinaryMask& truth) {
  if (!pred.same_shape(truth)) throw std::invalid_argument("IoU needs masks of equal size");
  const Index inter = (pred.bits() && truth.bits()).count();
  const Index uni = (pred.bits() || truth.bits()).count();
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(std::span<const double> ious) {
  if (ious.empty()) throw std::invalid_argument("mIoU of an empty list");
  double sum = 0.0;
  for (double v : ious) sum += v;
  return sum / static_cast<double>(ious.size());
}

double undetection_rate(std::span<const double> ious, double threshold) {
  if (ious.empty()) throw std::invalid_argument("undetection rate of an empty list");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in (0, 1)");
  const auto misses = std::count_if(ious.begin(), ious.end(), [&](double v) { return v < threshold; });
  return 100.0 * static_cast<double>(misses) / static_cast<double>(ious.size());
}

EvalReport summarize(std::vector<ImageScore> scores, std::span<const double> thresholds) {
  EvalReport report;
  std::vector<double> values;
  for (const auto& s : scores) values.push_back(s.iou);
  report.per_image = std::move(scores);
  report.n_images = static_cast<int>(values.size());
  report.miou = miou(values);
  for (double t : thresholds) report.undetection.push_back({t, undetection_rate(values, t)});
  return report;
}

EvalReport evaluate_run(const DatasetManifest& manifest, const std::map<int, FramePrediction>& predictions,
                        std::span<const double> thresholds) {
  std::vector<ImageScore> scores;
  int unlabeled = 0;
  for (const auto& entry : manifest.entries()) {
    if (!entry.truth) {
      ++unlabeled;
      continue;
    }
    auto it = predictions.find(entry.frame);
    if (it == predictions.end())
      throw EvaluationError("no prediction for labeled frame " + std::to_string(entry.frame));
    const BinaryMask& pred = it->second.mask;
    const BinaryMask truth = rasterize(GroundTruth::load(*entry.truth), pred.width(), pred.height());
    scores.push_back({entry.frame, iou(pred, truth), it->second.instances});
  }
  if (scores.empty()) throw EvaluationError("manifest has no labeled frames");
  EvalReport report = summarize(std::move(scores), thresholds);
  report.n_unlabeled = unlabeled;
  return report;
}

namespace {

ordered_json report_json(const EvalReport& r) {
  ordered_json j;
  j["spec"] = r.spec_name;
  j["submask"] = r.submask_enabled;
  j["variant"] = r.variant;
  j["miou"] = r.miou;
  j["n_images"] = r.n_images;
  j["n_unlabeled"] = r.n_unlabeled;
  j["undetection"] = ordered_json::array();
  for (const auto& u : r.undetection) j["undetection"].push_back({{"threshold", u.threshold}, {"percent", u.percent}});
  j["per_image"] = ordered_json::array();
  for (const auto& s : r.per_image)
    j["per_image"].push_back({{"frame", s.frame}, {"iou", s.iou}, {"instances", s.instances}});
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.spec_name = j.at("spec").get<std::string>();
  r.submask_enabled = j.at("submask").get<bool>();
  r.variant = j.value("variant", std::string());
  r.miou = j.at("miou").get<double>();
  r.n_images = j.at("n_images").get<int>();
  r.n_unlabeled = j.value("n_unlabeled", 0);
  for (const auto& u : j.at("undetection")) r.undetection.push_back({u.at("threshold"), u.at("percent")});
  for (const auto& s : j.at("per_image")) r.per_image.push_back({s.at("frame"), s.at("iou"), s.value("instances", 0)});
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2); }

ReportTables emit_report_tables(std::span<const EvalReport> reports) {
  // Row order: standard combinations first, then everything else as it appears.
  std::vector<std::string> rows;
  for (const auto& name : standard_channel_specs())
    for (const auto& r : reports)
      if (r.row_name() == name) {
        rows.push_back(name);
        break;
      }
  for (const auto& r : reports)
    if (std::find(rows.begin(), rows.end(), r.row_name()) == rows.end()) rows.push_back(r.row_name());

  auto find = [&](const std::string& row, bool submask) -> const EvalReport* {
    for (const auto& r : reports)
      if (r.row_name() == row && r.submask_enabled == submask) return &r;
    return nullptr;
  };

  std::vector<double> thresholds;
  for (const auto& r : reports)
    for (const auto& u : r.undetection)
      if (std::find(thresholds.begin(), thresholds.end(), u.threshold) == thresholds.end())
        thresholds.push_back(u.threshold);

  std::size_t name_w = 20;
  for (const auto& row : rows) name_w = std::max(name_w, row.size() + 2);

  std::ostringstream text;
  ordered_json table1 = ordered_json::array();
  ordered_json table2 = ordered_json::array();

  text << "mIoU by channel combination\n";
  text << pad("Image color space", name_w) << pad("w/o sub-mask", 14) << "w/ sub-mask\n";
  for (const auto& row : rows) {
    const EvalReport* off = find(row, false);
    const EvalReport* on = find(row, true);
    text << pad(row, name_w) << pad(off ? fixed(off->miou, 4) : "-", 14) << (on ? fixed(on->miou, 4) : "-") << "\n";
    table1.push_back({{"spec", row},
                      {"without_submask", off ? ordered_json(off->miou) : ordered_json(nullptr)},
                      {"with_submask", on ? ordered_json(on->miou) : ordered_json(nullptr)}});
  }

  text << "\nUndetection rate [%]\n" << pad("Image color space", name_w);
  for (double t : thresholds) text << pad("IoU < " + fixed(t, 1), 14);
  text << "\n";
  for (const auto& row : rows) {
    const EvalReport* r = find(row, true);
    if (!r) r = find(row, false);
    text << pad(row, name_w);
    ordered_json rates = ordered_json::array();
    for (double t : thresholds) {
      auto it = std::find_if(r->undetection.begin(), r->undetection.end(),
                             [&](const UndetectionRate& u) { return u.threshold == t; });
      text << pad(it != r->undetection.end() ? fixed(it->percent, 2) : "-", 14);
      if (it != r->undetection.end()) rates.push_back({{"threshold", t}, {"percent", it->percent}});
    }
    text << "\n";
    table2.push_back({{"spec", row}, {"submask", r->submask_enabled}, {"undetection", rates}});
  }

  ordered_json j;
  j["table1"] = std::move(table1);
  j["table2"] = std::move(table2);
  j["reports"] = ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  std::string out = text.str();
  for (std::size_t pos; (pos = out.find(" \n")) != std::string::npos;) out.erase(pos, 1);
  return {std::move(out), j.dump(2) + "\n"};
}

std::vector<EvalReport> parse_reports_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<EvalReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("report JSON: ") + ex.what());
  }
}

}  // namespace bubbleglare
