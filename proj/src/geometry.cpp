#include "sbm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sbm::geom {

namespace {

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

// Proper or touching intersection between two closed segments.
bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  auto orient = [](Point2 a, Point2 b, Point2 c) {
    double v = cross(b - a, c - a);
    if (v > kEps) return 1;
    if (v < -kEps) return -1;
    return 0;
  };
  auto on_segment = [](Point2 a, Point2 b, Point2 c) {
    return std::min(a.x, b.x) - kEps <= c.x && c.x <= std::max(a.x, b.x) + kEps &&
           std::min(a.y, b.y) - kEps <= c.y && c.y <= std::max(a.y, b.y) + kEps;
  };
  int o1 = orient(p1, p2, q1);
  int o2 = orient(p1, p2, q2);
  int o3 = orient(q1, q2, p1);
  int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

// Keeps the part of `poly` on the left of (or on) the directed line a->b.
std::vector<Point2> clip_halfplane(const std::vector<Point2>& poly, Point2 a,
                                   Point2 b) {
  std::vector<Point2> out;
  if (poly.empty()) return out;
  Point2 dir = b - a;
  auto side = [&](Point2 p) { return cross(dir, p - a); };
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Point2 cur = poly[i];
    Point2 nxt = poly[(i + 1) % n];
    double sc = side(cur);
    double sn = side(nxt);
    if (sc >= -kEps) out.push_back(cur);
    if ((sc > kEps && sn < -kEps) || (sc < -kEps && sn > kEps)) {
      double t = sc / (sc - sn);
      out.push_back(cur + (nxt - cur) * t);
    }
  }
  return out;
}

}  // namespace

double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a) { return std::hypot(a.x, a.y); }
double distance(Point2 a, Point2 b) { return norm(a - b); }

double normalize_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

double signed_area(const std::vector<Point2>& v) {
  double s = 0.0;
  size_t n = v.size();
  for (size_t i = 0; i < n; ++i) {
    Point2 a = v[i];
    Point2 b = v[(i + 1) % n];
    s += cross(a, b);
  }
  return 0.5 * s;
}

Polygon::Polygon(std::vector<Point2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3)
    throw std::invalid_argument("Polygon: need at least 3 vertices");
  for (Point2 p : vertices_)
    if (!finite(p)) throw std::invalid_argument("Polygon: non-finite vertex");
  double a = signed_area(vertices_);
  if (std::abs(a) < kEps)
    throw std::invalid_argument("Polygon: degenerate (zero area)");
  if (a < 0) std::reverse(vertices_.begin(), vertices_.end());
  // Simplicity: no two non-adjacent edges may intersect.
  size_t n = vertices_.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(vertices_[i], vertices_[(i + 1) % n], vertices_[j],
                             vertices_[(j + 1) % n]))
        throw std::invalid_argument("Polygon: self-intersecting");
    }
  }
}

Point2 Polygon::edge_start(int i) const {
  if (i < 0 || i >= num_edges()) throw std::out_of_range("edge index");
  return vertices_[i];
}

Point2 Polygon::edge_end(int i) const {
  if (i < 0 || i >= num_edges()) throw std::out_of_range("edge index");
  return vertices_[(i + 1) % vertices_.size()];
}

OrientedRect::OrientedRect(Point2 c, double w, double d, double a)
    : center(c), width(w), depth(d), angle(normalize_angle(a)) {
  if (!(w > 0.0) || !(d > 0.0))
    throw std::invalid_argument("OrientedRect: non-positive size");
}

std::vector<Point2> OrientedRect::corners() const {
  Point2 u{std::cos(angle), std::sin(angle)};
  Point2 v{-u.y, u.x};
  Point2 hw = u * (0.5 * width);
  Point2 hd = v * (0.5 * depth);
  return {center - hw - hd, center + hw - hd, center + hw + hd, center - hw + hd};
}

bool OccupancyGrid::locate(Point2 p, int& ix, int& iy) const {
  ix = static_cast<int>(std::floor((p.x - origin.x) / resolution));
  iy = static_cast<int>(std::floor((p.y - origin.y) / resolution));
  return ix >= 0 && ix < nx && iy >= 0 && iy < ny;
}

double polygon_area(const Polygon& p) { return signed_area(p.vertices()); }

double polygon_perimeter(const Polygon& p) {
  double s = 0.0;
  for (int i = 0; i < p.num_edges(); ++i)
    s += distance(p.edge_start(i), p.edge_end(i));
  return s;
}

double compactness(const Polygon& p) {
  double a = polygon_area(p);
  double per = polygon_perimeter(p);
  return 4.0 * M_PI * a / (per * per);
}

OrientedRect rect_from_wall_frame(const Polygon& room, int edge_index, double t,
                                  double delta, double width, double depth,
                                  double rho) {
  if (edge_index < 0 || edge_index >= room.num_edges())
    throw std::out_of_range("rect_from_wall_frame: edge index");
  Point2 x1 = room.edge_start(edge_index);
  Point2 x2 = room.edge_end(edge_index);
  Point2 d = x2 - x1;
  double len = norm(d);
  if (len < kEps) throw std::invalid_argument("rect_from_wall_frame: zero edge");
  Point2 dir = d * (1.0 / len);
  Point2 n{-dir.y, dir.x};  // left normal = interior side for CCW rooms
  Point2 anchor = x1 + d * t;
  Point2 center = anchor + n * delta;
  double angle = std::atan2(dir.y, dir.x) + rho;
  return OrientedRect(center, width, depth, angle);
}

void wall_frame_from_rect(const Polygon& room, int edge_index,
                          const OrientedRect& r, double& t, double& delta,
                          double& rho) {
  if (edge_index < 0 || edge_index >= room.num_edges())
    throw std::out_of_range("wall_frame_from_rect: edge index");
  Point2 x1 = room.edge_start(edge_index);
  Point2 x2 = room.edge_end(edge_index);
  Point2 d = x2 - x1;
  double len = norm(d);
  if (len < kEps) throw std::invalid_argument("wall_frame_from_rect: zero edge");
  Point2 dir = d * (1.0 / len);
  Point2 n{-dir.y, dir.x};
  Point2 rel = r.center - x1;
  t = dot(rel, dir) / len;
  delta = dot(rel, n);
  rho = normalize_angle(r.angle - std::atan2(dir.y, dir.x));
}

double polygon_clip_convex_area(const std::vector<Point2>& subject,
                                const std::vector<Point2>& convex_clip) {
  std::vector<Point2> poly = subject;
  size_t n = convex_clip.size();
  for (size_t i = 0; i < n && !poly.empty(); ++i)
    poly = clip_halfplane(poly, convex_clip[i], convex_clip[(i + 1) % n]);
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, signed_area(poly));
}

double rect_intersection_area(const OrientedRect& a, const OrientedRect& b) {
  double area = polygon_clip_convex_area(a.corners(), b.corners());
  return area < kEps ? 0.0 : area;
}

double rect_outside_polygon_area(const OrientedRect& r, const Polygon& room) {
  // The rect is convex, so clipping the (possibly non-convex) room against it
  // yields the exact inside area; Sutherland-Hodgman degenerate bridges have
  // zero width and do not affect the shoelace sum.
  double inside = polygon_clip_convex_area(room.vertices(), r.corners());
  double outside = std::max(0.0, r.area() - inside);
  return outside < kEps ? 0.0 : outside;
}

bool point_in_polygon(Point2 p, const Polygon& poly) {
  const auto& v = poly.vertices();
  size_t n = v.size();
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      double x_int =
          v[j].x + (p.y - v[j].y) / (v[i].y - v[j].y) * (v[i].x - v[j].x);
      if (p.x < x_int) inside = !inside;
    }
  }
  return inside;
}

double point_to_segment_distance(Point2 p, Point2 a, Point2 b) {
  Point2 d = b - a;
  double len2 = dot(d, d);
  if (len2 < kEps * kEps) return distance(p, a);
  double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return distance(p, a + d * t);
}

double point_to_polygon_boundary_distance(Point2 p, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < poly.num_edges(); ++i)
    best = std::min(best, point_to_segment_distance(p, poly.edge_start(i),
                                                    poly.edge_end(i)));
  return best;
}

double point_to_rect_distance(Point2 p, const OrientedRect& r) {
  // Distance in the rect's local frame; zero inside.
  Point2 u{std::cos(r.angle), std::sin(r.angle)};
  Point2 v{-u.y, u.x};
  Point2 rel = p - r.center;
  double lx = std::abs(dot(rel, u)) - 0.5 * r.width;
  double ly = std::abs(dot(rel, v)) - 0.5 * r.depth;
  double dx = std::max(lx, 0.0);
  double dy = std::max(ly, 0.0);
  return std::hypot(dx, dy);
}

bool segment_inside_polygon(Point2 a, Point2 b, const Polygon& poly) {
  if (!point_in_polygon(a, poly) || !point_in_polygon(b, poly)) return false;
  for (int i = 0; i < poly.num_edges(); ++i)
    if (segments_intersect(a, b, poly.edge_start(i), poly.edge_end(i)))
      return false;
  return true;
}

void polygon_bbox(const Polygon& p, Point2& lo, Point2& hi) {
  lo = {std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity()};
  hi = {-lo.x, -lo.y};
  for (Point2 v : p.vertices()) {
    lo.x = std::min(lo.x, v.x);
    lo.y = std::min(lo.y, v.y);
    hi.x = std::max(hi.x, v.x);
    hi.y = std::max(hi.y, v.y);
  }
}

OccupancyGrid rasterize(const Polygon& room,
                        const std::vector<OrientedRect>& obstacles,
                        double resolution, double inflation) {
  if (!(resolution > 0.0)) throw std::invalid_argument("rasterize: resolution");
  if (inflation < 0.0) throw std::invalid_argument("rasterize: inflation");
  Point2 lo, hi;
  polygon_bbox(room, lo, hi);
  double w = hi.x - lo.x;
  double h = hi.y - lo.y;
  if (w < kEps || h < kEps)
    throw std::invalid_argument("rasterize: degenerate bounding box");

  OccupancyGrid g;
  g.resolution = resolution;
  g.origin = {lo.x - resolution, lo.y - resolution};
  g.nx = static_cast<int>(std::ceil(w / resolution)) + 2;
  g.ny = static_cast<int>(std::ceil(h / resolution)) + 2;
  g.blocked.assign(static_cast<size_t>(g.nx) * g.ny, 0);

  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      Point2 c = g.cell_center(ix, iy);
      bool blocked = !point_in_polygon(c, room);
      if (!blocked && inflation > 0.0 &&
          point_to_polygon_boundary_distance(c, room) <= inflation)
        blocked = true;
      if (!blocked) {
        for (const OrientedRect& r : obstacles) {
          if (point_to_rect_distance(c, r) <= inflation) {
            blocked = true;
            break;
          }
        }
      }
      g.blocked[iy * g.nx + ix] = blocked ? 1 : 0;
    }
  }
  return g;
}

}  // namespace sbm::geom
