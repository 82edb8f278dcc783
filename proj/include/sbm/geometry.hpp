#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sbm::geom {

// Geometric tolerance for equality checks at room scale (meters).
constexpr double kEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }

double dot(Point2 a, Point2 b);
double cross(Point2 a, Point2 b);
double norm(Point2 a);
double distance(Point2 a, Point2 b);

// Normalizes an angle to [-pi, pi).
double normalize_angle(double a);

// Signed shoelace area of a raw vertex list (positive for CCW).
double signed_area(const std::vector<Point2>& vertices);

// Simple polygon with counter-clockwise orientation. The constructor
// validates finiteness, vertex count, non-degeneracy and simplicity, and
// reverses clockwise input so the stored ring is always CCW.
class Polygon {
 public:
  explicit Polygon(std::vector<Point2> vertices);

  const std::vector<Point2>& vertices() const { return vertices_; }
  int num_edges() const { return static_cast<int>(vertices_.size()); }
  Point2 edge_start(int i) const;
  Point2 edge_end(int i) const;

 private:
  std::vector<Point2> vertices_;
};

// World-frame footprint of an entity: center, width along the local x axis,
// depth along the local y axis, rotation angle in [-pi, pi).
struct OrientedRect {
  Point2 center;
  double width = 0.0;
  double depth = 0.0;
  double angle = 0.0;

  OrientedRect(Point2 c, double w, double d, double a);
  double area() const { return width * depth; }
  // Corners in CCW order.
  std::vector<Point2> corners() const;
};

struct OccupancyGrid {
  Point2 origin;       // world position of the grid's min corner
  double resolution;   // meters per cell
  int nx = 0;
  int ny = 0;
  std::vector<uint8_t> blocked;  // row-major [iy * nx + ix], 1 = blocked

  bool is_blocked(int ix, int iy) const { return blocked[iy * nx + ix] != 0; }
  Point2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * resolution, origin.y + (iy + 0.5) * resolution};
  }
  // Cell containing a world point; false if outside the grid.
  bool locate(Point2 p, int& ix, int& iy) const;
};

double polygon_area(const Polygon& p);
double polygon_perimeter(const Polygon& p);

// Isoperimetric ratio 4*pi*A / P^2, in (0, 1]; 1 for a circle.
double compactness(const Polygon& p);

// Wall-referenced frame: anchor at x1 + t*(x2-x1) on edge `edge_index`,
// interior normal is the left-hand normal of the edge direction (CCW room
// means the interior lies on the left), center offset by delta along that
// normal, rect angle = edge angle + rho.
OrientedRect rect_from_wall_frame(const Polygon& room, int edge_index, double t,
                                  double delta, double width, double depth,
                                  double rho);

// Inverse of rect_from_wall_frame; round trip is identity within kEps.
void wall_frame_from_rect(const Polygon& room, int edge_index,
                          const OrientedRect& r, double& t, double& delta,
                          double& rho);

double rect_intersection_area(const OrientedRect& a, const OrientedRect& b);

// Area of r lying outside the room polygon.
double rect_outside_polygon_area(const OrientedRect& r, const Polygon& room);

// Area of the intersection of a simple CCW polygon with a convex CCW clip
// polygon (Sutherland-Hodgman; exact up to floating-point rounding).
double polygon_clip_convex_area(const std::vector<Point2>& subject,
                                const std::vector<Point2>& convex_clip);

bool point_in_polygon(Point2 p, const Polygon& poly);
double point_to_segment_distance(Point2 p, Point2 a, Point2 b);
double point_to_polygon_boundary_distance(Point2 p, const Polygon& poly);
double point_to_rect_distance(Point2 p, const OrientedRect& r);

// True if the open segment a-b lies entirely inside the polygon.
bool segment_inside_polygon(Point2 a, Point2 b, const Polygon& poly);

void polygon_bbox(const Polygon& p, Point2& lo, Point2& hi);

// Discretizes the room for grid search. A cell is blocked iff its center is
// outside the room, or within `inflation` of any obstacle or of the room
// boundary (agent-radius inflation). The grid covers the room bounding box
// plus a one-cell margin.
OccupancyGrid rasterize(const Polygon& room,
                        const std::vector<OrientedRect>& obstacles,
                        double resolution, double inflation);

}  // namespace sbm::geom
