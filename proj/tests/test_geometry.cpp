#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbm/geometry.hpp"
#include "sbm/rng.hpp"

using namespace sbm::geom;

namespace {

Polygon unit_square() {
  return Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

Polygon rect(double w, double h) {
  return Polygon({{0, 0}, {w, 0}, {w, h}, {0, h}});
}

Polygon l_shape() {
  return Polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
}

OrientedRect axis_square(double cx, double cy, double side = 1.0) {
  return OrientedRect({cx, cy}, side, side, 0.0);
}

}  // namespace

TEST_CASE("polygon area") {
  CHECK(polygon_area(unit_square()) == doctest::Approx(1.0));
  CHECK(polygon_area(rect(4, 3)) == doctest::Approx(12.0));
  CHECK(polygon_area(l_shape()) == doctest::Approx(3.0));
}

TEST_CASE("signed area flips under reversal, constructor normalizes to CCW") {
  std::vector<Point2> ccw = {{0, 0}, {2, 0}, {2, 1}, {0, 1}};
  std::vector<Point2> cw(ccw.rbegin(), ccw.rend());
  CHECK(signed_area(ccw) == doctest::Approx(2.0));
  CHECK(signed_area(cw) == doctest::Approx(-2.0));
  Polygon p(cw);
  CHECK(polygon_area(p) == doctest::Approx(2.0));
}

TEST_CASE("degenerate polygon rejected") {
  CHECK_THROWS(Polygon({{0, 0}, {1, 1}, {2, 2}}));
  CHECK_THROWS(Polygon({{0, 0}, {1, 0}}));
  // self-intersecting bowtie
  CHECK_THROWS(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}));
}

TEST_CASE("polygon perimeter") {
  CHECK(polygon_perimeter(unit_square()) == doctest::Approx(4.0));
  CHECK(polygon_perimeter(rect(4, 3)) == doctest::Approx(14.0));
  CHECK(polygon_perimeter(l_shape()) == doctest::Approx(8.0));
}

TEST_CASE("compactness") {
  CHECK(compactness(unit_square()) == doctest::Approx(M_PI / 4.0));
  CHECK(compactness(rect(4, 1)) == doctest::Approx(4.0 * M_PI * 4.0 / 100.0));
  // regular hexagon with side 1: A = 3*sqrt(3)/2, P = 6
  std::vector<Point2> hex;
  for (int i = 0; i < 6; ++i)
    hex.push_back({std::cos(i * M_PI / 3.0), std::sin(i * M_PI / 3.0)});
  CHECK(compactness(Polygon(hex)) ==
        doctest::Approx(4.0 * M_PI * 1.5 * std::sqrt(3.0) / 36.0).epsilon(1e-9));
  CHECK(compactness(Polygon(hex)) == doctest::Approx(0.9069).epsilon(1e-4));
}

TEST_CASE("rect_from_wall_frame examples") {
  Polygon room({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  SUBCASE("endpoint case") {
    auto r = rect_from_wall_frame(room, 0, 0.0, 0.0, 1.0, 1.0, 0.0);
    CHECK(r.center.x == doctest::Approx(0.0));
    CHECK(r.center.y == doctest::Approx(0.0));
  }
  SUBCASE("quarter way, offset half") {
    auto r = rect_from_wall_frame(room, 0, 0.25, 0.5, 1.0, 1.0, 0.3);
    CHECK(r.center.x == doctest::Approx(1.0));
    CHECK(r.center.y == doctest::Approx(0.5));
    CHECK(r.angle == doctest::Approx(0.3));
  }
  SUBCASE("vertical edge, left normal points into the room") {
    auto r = rect_from_wall_frame(room, 1, 0.5, 1.0, 1.0, 1.0, 0.0);
    CHECK(r.center.x == doctest::Approx(3.0));
    CHECK(r.center.y == doctest::Approx(2.0));
  }
  SUBCASE("edge index out of range") {
    CHECK_THROWS(rect_from_wall_frame(room, 4, 0.5, 0.0, 1, 1, 0));
  }
}

TEST_CASE("wall frame round trip") {
  Polygon room({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  SUBCASE("midpoint, zero offset") {
    auto r = rect_from_wall_frame(room, 2, 0.5, 0.0, 1.0, 0.5, 0.1);
    double t, delta, rho;
    wall_frame_from_rect(room, 2, r, t, delta, rho);
    CHECK(t == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(delta) < 1e-9);
    CHECK(rho == doctest::Approx(0.1).epsilon(1e-9));
  }
  SUBCASE("1000 random frames round trip within 1e-9") {
    auto rng = sbm::make_rng(42);
    Polygon lroom({{0, 0}, {3, 0}, {3, 2}, {1.5, 2}, {1.5, 3}, {0, 3}});
    for (int i = 0; i < 1000; ++i) {
      int j = sbm::uniform_int(rng, 0, lroom.num_edges() - 1);
      double t = sbm::uniform(rng, 0.0, 1.0);
      double delta = sbm::uniform(rng, -0.5, 1.5);
      double rho = sbm::uniform(rng, -3.0, 3.0);
      auto r = rect_from_wall_frame(lroom, j, t, delta, 0.8, 0.6, rho);
      double t2, d2, rho2;
      wall_frame_from_rect(lroom, j, r, t2, d2, rho2);
      CHECK(std::abs(t - t2) < 1e-9);
      CHECK(std::abs(delta - d2) < 1e-9);
      CHECK(std::abs(normalize_angle(rho - rho2)) < 1e-9);
    }
  }
}

TEST_CASE("rect intersection area") {
  CHECK(rect_intersection_area(axis_square(0, 0), axis_square(5, 5)) ==
        doctest::Approx(0.0));
  CHECK(rect_intersection_area(axis_square(0, 0), axis_square(0, 0)) ==
        doctest::Approx(1.0));
  CHECK(rect_intersection_area(axis_square(0, 0), axis_square(0.5, 0)) ==
        doctest::Approx(0.5));
}

TEST_CASE("rect intersection is symmetric and bounded") {
  auto rng = sbm::make_rng(7);
  for (int i = 0; i < 200; ++i) {
    OrientedRect a({sbm::uniform(rng, -2, 2), sbm::uniform(rng, -2, 2)},
                   sbm::uniform(rng, 0.2, 2.0), sbm::uniform(rng, 0.2, 2.0),
                   sbm::uniform(rng, -3, 3));
    OrientedRect b({sbm::uniform(rng, -2, 2), sbm::uniform(rng, -2, 2)},
                   sbm::uniform(rng, 0.2, 2.0), sbm::uniform(rng, 0.2, 2.0),
                   sbm::uniform(rng, -3, 3));
    double ab = rect_intersection_area(a, b);
    double ba = rect_intersection_area(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab <= std::min(a.area(), b.area()) + 1e-9);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("rect outside polygon area") {
  Polygon room({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  CHECK(rect_outside_polygon_area(axis_square(2, 2), room) ==
        doctest::Approx(0.0));
  CHECK(rect_outside_polygon_area(axis_square(10, 10), room) ==
        doctest::Approx(1.0));
  // straddling the x=0 wall, half out
  CHECK(rect_outside_polygon_area(axis_square(0, 2), room) ==
        doctest::Approx(0.5));
}

TEST_CASE("outside + inside area equals rect area, non-convex room") {
  Polygon room({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  auto rng = sbm::make_rng(11);
  for (int i = 0; i < 200; ++i) {
    OrientedRect r({sbm::uniform(rng, -1, 3), sbm::uniform(rng, -1, 3)},
                   sbm::uniform(rng, 0.2, 1.5), sbm::uniform(rng, 0.2, 1.5),
                   sbm::uniform(rng, -3, 3));
    double outside = rect_outside_polygon_area(r, room);
    double inside = polygon_clip_convex_area(room.vertices(), r.corners());
    CHECK(outside + inside == doctest::Approx(r.area()).epsilon(1e-9));
  }
  // rect covering the notch corner: the [1,1.5]x[1,1.5] quadrant is outside
  OrientedRect notch({1.0, 1.0}, 1.0, 1.0, 0.0);
  CHECK(rect_outside_polygon_area(notch, room) == doctest::Approx(0.25));
}

TEST_CASE("rasterize empty room") {
  Polygon room({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  auto g = rasterize(room, {}, 0.1, 0.0);
  // every interior cell center must be free
  int blocked_interior = 0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      Point2 c = g.cell_center(ix, iy);
      bool interior = c.x > 0 && c.x < 4 && c.y > 0 && c.y < 4;
      if (interior && g.is_blocked(ix, iy)) ++blocked_interior;
    }
  CHECK(blocked_interior == 0);
}

TEST_CASE("rasterize fully covered room") {
  Polygon room({{0, 0}, {2, 0}, {2, 2}, {0, 2}});
  auto g = rasterize(room, {OrientedRect({1, 1}, 3, 3, 0)}, 0.1, 0.0);
  for (int i = 0; i < g.nx * g.ny; ++i) CHECK(g.blocked[i] == 1);
}

TEST_CASE("rasterize blocked cell count for a unit obstacle") {
  Polygon room({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
  OrientedRect obstacle({2, 2}, 1, 1, 0);
  auto g = rasterize(room, {obstacle}, 0.1, 0.0);
  int count = 0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      Point2 c = g.cell_center(ix, iy);
      if (c.x > 0.05 && c.x < 3.95 && c.y > 0.05 && c.y < 3.95 &&
          g.is_blocked(ix, iy))
        ++count;
    }
  // cells whose centers land in the 1x1 obstacle: 10x10 plus boundary slack
  CHECK(count >= 81);
  CHECK(count <= 121);
}

TEST_CASE("rasterize monotone in inflation") {
  Polygon room({{0, 0}, {4, 0}, {4, 3}, {0, 3}});
  std::vector<OrientedRect> obs = {OrientedRect({1, 1}, 0.8, 0.6, 0.4)};
  auto g0 = rasterize(room, obs, 0.1, 0.05);
  auto g1 = rasterize(room, obs, 0.1, 0.25);
  REQUIRE(g0.blocked.size() == g1.blocked.size());
  for (size_t i = 0; i < g0.blocked.size(); ++i)
    if (g0.blocked[i]) CHECK(g1.blocked[i]);
}

TEST_CASE("segment inside polygon") {
  Polygon room({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  CHECK(segment_inside_polygon({0.2, 0.2}, {1.8, 0.8}, room));
  CHECK_FALSE(segment_inside_polygon({0.5, 1.8}, {1.8, 0.5}, room));
  CHECK_FALSE(segment_inside_polygon({0.5, 0.5}, {3.0, 0.5}, room));
}
