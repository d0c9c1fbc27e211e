#pragma once

// Planar polygon primitives shared by subspace extraction and the constraint
// model. Orientation convention: "counter-clockwise" means positive signed
// area in the coordinates as given (x right, y down for image pixels).

#include <span>
#include <vector>

namespace smartscan::geometry {

inline constexpr double kConvexityEps = 1e-9;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend auto operator<=>(const Point2&, const Point2&) = default;
    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}
inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
double distance(const Point2& a, const Point2& b);
double point_segment_distance(const Point2& p, const Point2& a, const Point2& b);

using Ring = std::vector<Point2>;

double signed_area(std::span<const Point2> ring);
double area(std::span<const Point2> ring);
/// Area centroid; falls back to the vertex mean for zero-area rings.
Point2 centroid(std::span<const Point2> ring);

/// Every consecutive edge pair turns left by at least -eps, the ring has
/// >= 3 vertices, no repeats and positive area.
bool is_convex(std::span<const Point2> ring, double eps = kConvexityEps);

enum class Location { inside, boundary, outside };

/// Point-in-polygon for simple (possibly non-convex) rings; points within
/// `eps` of an edge are reported as boundary.
Location locate(const Point2& q, std::span<const Point2> ring, double eps = 1e-9);

/// Distance from p to the polygon boundary.
double boundary_distance(const Point2& p, std::span<const Point2> ring);

class ConvexPolygon {
public:
    ConvexPolygon() = default;

    /// Validates the invariants; throws DegenerateGeometryError.
    static ConvexPolygon from_vertices(Ring vertices);

    const Ring& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    double area() const { return geometry::area(vertices_); }

    friend bool operator==(const ConvexPolygon&, const ConvexPolygon&) = default;

private:
    explicit ConvexPolygon(Ring v) : vertices_(std::move(v)) {}
    Ring vertices_;
};

/// Andrew's monotone chain. Counter-clockwise, collinear points dropped,
/// lexicographically least vertex first. Throws DegenerateGeometryError for
/// fewer than 3 distinct or all-collinear points.
ConvexPolygon convex_hull(std::span<const Point2> points);

/// Keeps the part of `ring` (convex) with a*x + b*y <= c.
Ring clip_halfplane(std::span<const Point2> ring, double a, double b, double c);

/// Removes consecutive duplicates (within tol) and collinear vertices.
Ring clean_ring(std::span<const Point2> ring, double tol);

}  // namespace smartscan::geometry
