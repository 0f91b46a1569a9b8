#include "bubbleglare/marching_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bubbleglare {

namespace {

// Cell edges.
enum Edge : int { kTop = 0, kRight = 1, kBottom = 2, kLeft = 3 };

struct SegmentPair {
  int count;
  std::array<std::array<int, 2>, 2> seg;
};

// Case index: TL*8 + TR*4 + BR*2 + BL. Saddles 5 and 10 hold the separated form.
constexpr std::array<SegmentPair, 16> kTable = {{
    {0, {}},
    {1, {{{kLeft, kBottom}}}},
    {1, {{{kBottom, kRight}}}},
    {1, {{{kLeft, kRight}}}},
    {1, {{{kTop, kRight}}}},
    {2, {{{kTop, kRight}, {kLeft, kBottom}}}},
    {1, {{{kTop, kBottom}}}},
    {1, {{{kTop, kLeft}}}},
    {1, {{{kTop, kLeft}}}},
    {1, {{{kTop, kBottom}}}},
    {2, {{{kTop, kLeft}, {kBottom, kRight}}}},
    {1, {{{kTop, kRight}}}},
    {1, {{{kLeft, kRight}}}},
    {1, {{{kBottom, kRight}}}},
    {1, {{{kLeft, kBottom}}}},
    {0, {}},
}};

// Joined forms of the saddles: the dark corners are cut off instead.
constexpr SegmentPair kJoined5 = {2, {{{kTop, kLeft}, {kBottom, kRight}}}};
constexpr SegmentPair kJoined10 = {2, {{{kTop, kRight}, {kLeft, kBottom}}}};

constexpr double kEdgeMargin = 1e-3;

class Contourer {
 public:
  Contourer(const Grid& gray, double threshold) : g_(gray), thr_(threshold) {
    h_ = gray.rows();
    w_ = gray.cols();
    pad_ = std::min(gray.minCoeff(), threshold) - 1.0;
    // Padded vertex grid spans rows/cols -1..h and -1..w.
    pw_ = w_ + 2;
    ph_ = h_ + 2;
    edge_segments_.assign(static_cast<std::size_t>(ph_ * pw_ * 2), {-1, -1});
  }

  double value(Index r, Index c) const {
    if (r < 0 || c < 0 || r >= h_ || c >= w_) return pad_;
    return g_(r, c);
  }
  bool fg(Index r, Index c) const { return value(r, c) >= thr_; }

  // Horizontal edge (r,c)-(r,c+1) has orientation 0, vertical (r,c)-(r+1,c) has 1.
  Index edge_id(Index r, Index c, int orient) const { return ((r + 1) * pw_ + (c + 1)) * 2 + orient; }

  Index cell_edge(Index r, Index c, int e) const {
    switch (e) {
      case kTop: return edge_id(r, c, 0);
      case kBottom: return edge_id(r + 1, c, 0);
      case kLeft: return edge_id(r, c, 1);
      default: return edge_id(r, c + 1, 1);
    }
  }

  Point crossing(Index id) const {
    const int orient = static_cast<int>(id % 2);
    const Index cell = id / 2;
    const Index r = cell / pw_ - 1;
    const Index c = cell % pw_ - 1;
    const Index r1 = orient == 0 ? r : r + 1;
    const Index c1 = orient == 0 ? c + 1 : c;
    const double v0 = value(r, c);
    const double v1 = value(r1, c1);
    double t = (thr_ - v0) / (v1 - v0);
    t = std::clamp(t, kEdgeMargin, 1.0 - kEdgeMargin);
    return {r + t * static_cast<double>(r1 - r), c + t * static_cast<double>(c1 - c)};
  }

  // Foreground endpoint of a crossing edge.
  Point foreground_vertex(Index id) const {
    const int orient = static_cast<int>(id % 2);
    const Index cell = id / 2;
    const Index r = cell / pw_ - 1;
    const Index c = cell % pw_ - 1;
    if (fg(r, c)) return {double(r), double(c)};
    return orient == 0 ? Point(double(r), double(c + 1)) : Point(double(r + 1), double(c));
  }

  void add_segment(Index a, Index b) {
    const int id = static_cast<int>(segments_.size());
    segments_.push_back({a, b});
    for (Index e : {a, b}) {
      auto& slot = edge_segments_[static_cast<std::size_t>(e)];
      (slot[0] < 0 ? slot[0] : slot[1]) = id;
    }
  }

  void build_segments(SaddleRule rule) {
    for (Index r = -1; r < h_; ++r) {
      for (Index c = -1; c < w_; ++c) {
        const int code = (fg(r, c) ? 8 : 0) | (fg(r, c + 1) ? 4 : 0) | (fg(r + 1, c + 1) ? 2 : 0) |
                         (fg(r + 1, c) ? 1 : 0);
        const SegmentPair* entry = &kTable[code];
        if (rule == SaddleRule::CellAverage && (code == 5 || code == 10)) {
          const double centre = 0.25 * (value(r, c) + value(r, c + 1) + value(r + 1, c + 1) + value(r + 1, c));
          if (centre >= thr_) entry = code == 5 ? &kJoined5 : &kJoined10;
        }
        for (int s = 0; s < entry->count; ++s)
          add_segment(cell_edge(r, c, entry->seg[s][0]), cell_edge(r, c, entry->seg[s][1]));
      }
    }
  }

  // Closed loops as edge-id sequences.
  std::vector<std::vector<Index>> link() const {
    std::vector<std::vector<Index>> loops;
    std::vector<char> used(segments_.size(), 0);
    for (std::size_t s0 = 0; s0 < segments_.size(); ++s0) {
      if (used[s0]) continue;
      std::vector<Index> loop;
      std::size_t s = s0;
      Index at = segments_[s0][0];
      loop.push_back(at);
      while (!used[s]) {
        used[s] = 1;
        const Index next = segments_[s][0] == at ? segments_[s][1] : segments_[s][0];
        at = next;
        loop.push_back(at);
        const auto& slot = edge_segments_[static_cast<std::size_t>(at)];
        const int other = slot[0] == static_cast<int>(s) ? slot[1] : slot[0];
        if (other < 0) break;
        s = static_cast<std::size_t>(other);
      }
      loops.push_back(std::move(loop));
    }
    return loops;
  }

  Index height() const { return h_; }
  Index width() const { return w_; }

 private:
  const Grid& g_;
  double thr_;
  double pad_;
  Index h_, w_, ph_, pw_;
  std::vector<std::array<Index, 2>> segments_;
  std::vector<std::array<int, 2>> edge_segments_;
};

std::array<double, 4> bounding_box(const Polygon& poly) {
  std::array<double, 4> box = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                               -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : poly) {
    box[0] = std::min(box[0], p.x());
    box[1] = std::min(box[1], p.y());
    box[2] = std::max(box[2], p.x());
    box[3] = std::max(box[3], p.y());
  }
  return box;
}

bool box_contains(const std::array<double, 4>& box, const Point& p) {
  return p.x() >= box[0] && p.x() <= box[2] && p.y() >= box[1] && p.y() <= box[3];
}

}  // namespace

std::vector<ContourInstance> marching_squares(const Grid& gray, double threshold, SaddleRule saddle) {
  if (gray.rows() < 2 || gray.cols() < 2) throw std::invalid_argument("marching squares needs at least a 2x2 grid");
  if (!gray.allFinite()) throw std::invalid_argument("marching squares input must be finite");
  // No vertex below the threshold means no sign change anywhere in the grid.
  if ((gray >= threshold).all()) return {};
  Contourer contourer(gray, threshold);
  contourer.build_segments(saddle);

  struct Loop {
    Polygon poly;
    std::array<double, 4> box;
    double abs_area;
    bool outer;
  };
  std::vector<Loop> loops;
  for (const auto& ids : contourer.link()) {
    Loop loop;
    loop.poly.reserve(ids.size());
    for (Index id : ids) loop.poly.push_back(contourer.crossing(id));
    loop.box = bounding_box(loop.poly);
    loop.abs_area = std::abs(signed_area(loop.poly));
    // Outer boundaries enclose their foreground side; holes enclose background.
    loop.outer = point_in_polygon(contourer.foreground_vertex(ids.front()), loop.poly);
    loops.push_back(std::move(loop));
  }

  std::vector<std::size_t> outer_idx;
  for (std::size_t i = 0; i < loops.size(); ++i)
    if (loops[i].outer) outer_idx.push_back(i);
  std::vector<std::size_t> by_area = outer_idx;
  std::stable_sort(by_area.begin(), by_area.end(),
                   [&](std::size_t a, std::size_t b) { return loops[a].abs_area < loops[b].abs_area; });

  // Each hole belongs to the smallest outer boundary around it.
  std::vector<std::vector<std::size_t>> holes_of(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (loops[i].outer) continue;
    const Point& p = loops[i].poly.front();
    for (std::size_t o : by_area) {
      if (loops[o].abs_area <= loops[i].abs_area) continue;
      if (box_contains(loops[o].box, p) && point_in_polygon(p, loops[o].poly)) {
        holes_of[o].push_back(i);
        break;
      }
    }
  }

  std::vector<ContourInstance> out;
  out.reserve(outer_idx.size());
  int next_id = 1;
  for (std::size_t o : outer_idx) {
    ContourInstance inst;
    inst.instance_id = next_id++;
    std::vector<Polygon> rings = {loops[o].poly};
    for (std::size_t hidx : holes_of[o]) rings.push_back(loops[hidx].poly);
    inst.region = fill_even_odd(rings, contourer.width(), contourer.height(), 0.0);
    inst.area = run_area(inst.region);
    double sum = 0.0;
    for (const auto& run : inst.region) sum += gray.row(run.row).segment(run.col_begin, run.col_end - run.col_begin).sum();
    inst.region_mean = inst.area > 0 ? sum / static_cast<double>(inst.area) : 0.0;
    inst.bbox = loops[o].box;
    inst.contour = std::move(rings.front());
    for (std::size_t k = 1; k < rings.size(); ++k) inst.holes.push_back(std::move(rings[k]));
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<ContourInstance> marching_squares(const Grid& gray, SaddleRule saddle) {
  if (gray.size() == 0) throw std::invalid_argument("marching squares needs at least a 2x2 grid");
  return marching_squares(gray, gray.mean(), saddle);
}

}  // namespace bubbleglare
