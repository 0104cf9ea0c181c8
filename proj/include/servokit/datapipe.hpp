#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "servokit/corners.hpp"
#include "servokit/csvio.hpp"
#include "servokit/errors.hpp"
#include "servokit/image.hpp"
#include "servokit/rng.hpp"

namespace servokit {

enum class LabelUnits { pixels, normalized };

inline std::string units_name(LabelUnits units) {
  return units == LabelUnits::pixels ? "pixels" : "normalized";
}

inline LabelUnits units_from_string(const std::string& s) {
  if (s == "pixels") return LabelUnits::pixels;
  if (s == "normalized") return LabelUnits::normalized;
  throw IoError("unknown label units '" + s + "'");
}

/// Corner labels for one image; id is the image filename.
struct LabeledImage {
  std::string id;
  CornerQuad corners;
  LabelUnits units = LabelUnits::pixels;
};

inline const char* kLabelsCsvHeader = "id,u1,v1,u2,v2,u3,v3,u4,v4,units";

inline std::string labels_to_csv(const std::vector<LabeledImage>& items) {
  std::string out(kLabelsCsvHeader);
  out += '\n';
  for (const auto& item : items) {
    out += item.id;
    for (const auto& p : item.corners.points) {
      out += ',';
      out += format_double(p.u);
      out += ',';
      out += format_double(p.v);
    }
    out += ',';
    out += units_name(item.units);
    out += '\n';
  }
  return out;
}

inline std::vector<LabeledImage> labels_from_csv_text(
    const std::vector<std::string>& lines, const std::string& where) {
  if (lines.empty() || split_csv_line(lines[0]) != split_csv_line(kLabelsCsvHeader))
    throw IoError("bad label CSV header in " + where);
  std::vector<LabeledImage> items;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = split_csv_line(lines[n]);
    if (fields.size() != 10)
      throw IoError("bad label row " + std::to_string(n + 1) + " in " + where);
    LabeledImage item;
    item.id = fields[0];
    for (int i = 0; i < 4; ++i) {
      item.corners.points[i].u = csv_double(fields[1 + 2 * i], where);
      item.corners.points[i].v = csv_double(fields[2 + 2 * i], where);
    }
    item.units = units_from_string(fields[9]);
    if (item.units == LabelUnits::normalized)
      for (const auto& p : item.corners.points)
        if (p.u < 0.0 || p.u > 1.0 || p.v < 0.0 || p.v > 1.0)
          throw IoError("normalized label outside [0,1] in " + where);
    items.push_back(std::move(item));
  }
  return items;
}

inline std::vector<LabeledImage> read_labels_csv(const std::string& path) {
  return labels_from_csv_text(read_text_lines(path), path);
}

enum class AugmentOp { rot180, hflip, vflip };

inline std::string augment_op_name(AugmentOp op) {
  switch (op) {
    case AugmentOp::rot180: return "rot180";
    case AugmentOp::hflip: return "hflip";
    default: return "vflip";
  }
}

inline AugmentOp augment_op_from_string(const std::string& s) {
  if (s == "rot180") return AugmentOp::rot180;
  if (s == "hflip") return AugmentOp::hflip;
  if (s == "vflip") return AugmentOp::vflip;
  throw ConfigError("unknown augmentation op '" + s + "'");
}

/// img001.pgm -> img001_hflip.pgm
inline std::string augmented_id(const std::string& id, AugmentOp op) {
  const auto dot = id.rfind('.');
  const std::string stem = dot == std::string::npos ? id : id.substr(0, dot);
  const std::string ext = dot == std::string::npos ? "" : id.substr(dot);
  return stem + "_" + augment_op_name(op) + ext;
}

/**
 * Flip or rotate an image together with its corner labels. Labels map as
 * hflip: (W-1-u, v); vflip: (u, H-1-v); rot180: both. The mapped corners
 * are re-canonicalized so TL..BL keep their semantic roles.
 */
inline std::pair<RasterImage, LabeledImage> augment(const RasterImage& img,
                                                    const LabeledImage& item,
                                                    AugmentOp op) {
  if (item.units != LabelUnits::pixels)
    throw UnitMismatchError("augment requires pixel-unit labels; denormalize first");
  for (const auto& p : item.corners.points)
    if (p.u < 0.0 || p.u > img.width - 1 || p.v < 0.0 || p.v > img.height - 1)
      throw ContractError("label outside image bounds");

  RasterImage out_img;
  std::array<PixelPoint, 4> pts = item.corners.points;
  const double wmax = img.width - 1.0, hmax = img.height - 1.0;
  switch (op) {
    case AugmentOp::hflip:
      out_img = hflip_image(img);
      for (auto& p : pts) p.u = wmax - p.u;
      break;
    case AugmentOp::vflip:
      out_img = vflip_image(img);
      for (auto& p : pts) p.v = hmax - p.v;
      break;
    default:
      out_img = rot180_image(img);
      for (auto& p : pts) {
        p.u = wmax - p.u;
        p.v = hmax - p.v;
      }
      break;
  }
  LabeledImage out_item;
  out_item.id = augmented_id(item.id, op);
  out_item.corners = reorder_canonical(pts);
  out_item.units = LabelUnits::pixels;
  return {std::move(out_img), std::move(out_item)};
}

inline LabeledImage normalize_labels(const LabeledImage& item, int width,
                                     int height) {
  if (item.units != LabelUnits::pixels)
    throw UnitMismatchError("normalize_labels expects pixel units");
  if (width <= 0 || height <= 0) throw ContractError("bad image dims");
  LabeledImage out = item;
  for (auto& p : out.corners.points) {
    p.u /= width;
    p.v /= height;
  }
  out.units = LabelUnits::normalized;
  return out;
}

inline LabeledImage denormalize_labels(const LabeledImage& item, int width,
                                       int height) {
  if (item.units != LabelUnits::normalized)
    throw UnitMismatchError("denormalize_labels expects normalized units");
  if (width <= 0 || height <= 0) throw ContractError("bad image dims");
  LabeledImage out = item;
  for (auto& p : out.corners.points) {
    p.u *= width;
    p.v *= height;
  }
  out.units = LabelUnits::pixels;
  return out;
}

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

/// Seeded shuffle, then the first ceil(frac*n) ids become the validation
/// set. Pure function of (ids, frac, seed).
inline SplitResult split_train_val(const std::vector<std::string>& ids,
                                   double frac, std::uint64_t seed) {
  if (ids.empty()) throw ContractError("split_train_val: empty id list");
  if (!(frac > 0.0) || !(frac < 1.0))
    throw ContractError("split_train_val: frac must be in (0,1)");
  std::vector<std::string> shuffled = ids;
  SplitRng rng(seed);
  rng.shuffle(shuffled);
  const double n = static_cast<double>(ids.size());
  // The 1e-9 guard keeps ceil() from absorbing float slop in frac*n.
  auto val_count =
      static_cast<std::size_t>(std::ceil(frac * n - 1e-9));
  val_count = std::clamp<std::size_t>(val_count, 1, ids.size() - 1);
  SplitResult result;
  result.val.assign(shuffled.begin(), shuffled.begin() + val_count);
  result.train.assign(shuffled.begin() + val_count, shuffled.end());
  return result;
}

/// K-fold assignment: seeded shuffle, then round-robin (shuffled[i] lands
/// in fold i mod k). Round r uses fold r as the test set.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;  ///< original input order
  std::vector<int> fold_of;      ///< parallel to ids

  int fold(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return fold_of[i];
    throw IdMismatchError("id not in fold plan: " + id);
  }

  std::vector<std::string> test_ids(int round) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (fold_of[i] == round) out.push_back(ids[i]);
    return out;
  }

  std::vector<std::string> train_ids(int round) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (fold_of[i] != round) out.push_back(ids[i]);
    return out;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
  }
};

inline FoldPlan kfold_partition(const std::vector<std::string>& ids, int k,
                                std::uint64_t seed) {
  if (k < 2) throw ContractError("kfold_partition: k must be >= 2");
  if (static_cast<std::size_t>(k) > ids.size())
    throw ContractError("kfold_partition: k exceeds item count");
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
    throw ContractError("kfold_partition: duplicate ids");
  std::vector<std::string> shuffled = ids;
  SplitRng rng(seed);
  rng.shuffle(shuffled);
  std::map<std::string, int> fold_by_id;
  for (std::size_t i = 0; i < shuffled.size(); ++i)
    fold_by_id[shuffled[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.ids = ids;
  plan.fold_of.reserve(ids.size());
  for (const auto& id : ids) plan.fold_of.push_back(fold_by_id[id]);
  return plan;
}

inline const char* kFoldsCsvHeader = "id,fold";

inline std::string folds_to_csv(const FoldPlan& plan) {
  std::string out(kFoldsCsvHeader);
  out += '\n';
  for (std::size_t i = 0; i < plan.ids.size(); ++i) {
    out += plan.ids[i];
    out += ',';
    out += format_int(plan.fold_of[i]);
    out += '\n';
  }
  return out;
}

/// Per-corner mean absolute error in normalized units.
struct EvalReport {
  std::array<double, 4> per_corner{};
  double overall = 0.0;
  int worst_corner = 0;
};

/**
 * MAE between predicted and true corner labels. Per corner, each image
 * contributes mean(|du|, |dv|); the overall figure is the mean of the four
 * per-corner values. Both sides must be normalized and cover the same ids.
 */
inline EvalReport evaluate(const std::vector<LabeledImage>& pred,
                           const std::vector<LabeledImage>& truth) {
  if (truth.empty()) throw ContractError("evaluate: empty truth set");
  std::map<std::string, const LabeledImage*> by_id;
  for (const auto& item : pred) {
    if (item.units != LabelUnits::normalized)
      throw UnitMismatchError("evaluate expects normalized predictions");
    if (!by_id.emplace(item.id, &item).second)
      throw IdMismatchError("duplicate prediction id: " + item.id);
  }
  if (pred.size() != truth.size())
    throw IdMismatchError("prediction and truth id sets differ in size");
  EvalReport report;
  std::array<double, 4> sums{};
  for (const auto& t : truth) {
    if (t.units != LabelUnits::normalized)
      throw UnitMismatchError("evaluate expects normalized truth labels");
    const auto it = by_id.find(t.id);
    if (it == by_id.end())
      throw IdMismatchError("missing prediction for id: " + t.id);
    for (int c = 0; c < 4; ++c) {
      const double du =
          std::abs(it->second->corners.points[c].u - t.corners.points[c].u);
      const double dv =
          std::abs(it->second->corners.points[c].v - t.corners.points[c].v);
      sums[c] += (du + dv) / 2.0;
    }
  }
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    report.per_corner[c] = sums[c] / static_cast<double>(truth.size());
    total += report.per_corner[c];
    if (report.per_corner[c] > report.per_corner[report.worst_corner])
      report.worst_corner = c;
  }
  report.overall = total / 4.0;
  return report;
}

}  // namespace servokit
