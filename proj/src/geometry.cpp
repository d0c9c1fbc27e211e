#include "smartscan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "smartscan/error.hpp"

namespace smartscan::geometry {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double point_segment_distance(const Point2& p, const Point2& a, const Point2& b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

double signed_area(std::span<const Point2> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return s / 2.0;
}

double area(std::span<const Point2> ring) { return std::abs(signed_area(ring)); }

Point2 centroid(std::span<const Point2> ring) {
    const std::size_t n = ring.size();
    if (n == 0) return {};
    const double a = signed_area(ring);
    if (a == 0.0) {
        Point2 m;
        for (const auto& p : ring) m = m + p;
        return m * (1.0 / static_cast<double>(n));
    }
    // Shift to the first vertex to limit cancellation on large coordinates.
    const Point2 o = ring[0];
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 p = ring[i] - o;
        const Point2 q = ring[(i + 1) % n] - o;
        const double w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    return {o.x + cx / (6.0 * a), o.y + cy / (6.0 * a)};
}

bool is_convex(std::span<const Point2> ring, double eps) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (ring[i] == ring[j]) return false;
        }
    }
    if (!(signed_area(ring) > 0.0)) return false;
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        const Point2& c = ring[(i + 2) % n];
        if (cross(a, b, c) < -eps) return false;
        const Point2 u = b - a, v = c - b;
        turning += std::atan2(u.x * v.y - u.y * v.x, dot(u, v));
    }
    // A simple convex ring turns exactly once; star-shaped self-overlaps turn more.
    return std::abs(turning - 2.0 * std::numbers::pi) < 1e-6;
}

Location locate(const Point2& q, std::span<const Point2> ring, double eps) {
    const std::size_t n = ring.size();
    if (n == 0) return Location::outside;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = ring[i];
        const Point2& b = ring[j];
        if (point_segment_distance(q, a, b) <= eps) return Location::boundary;
        if ((a.y > q.y) != (b.y > q.y)) {
            const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (q.x < x) inside = !inside;
        }
    }
    return inside ? Location::inside : Location::outside;
}

double boundary_distance(const Point2& p, std::span<const Point2> ring) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % n]));
    }
    return best;
}

ConvexPolygon ConvexPolygon::from_vertices(Ring vertices) {
    if (vertices.size() < 3) throw DegenerateGeometryError("polygon needs at least 3 vertices");
    if (!is_convex(vertices)) throw DegenerateGeometryError("polygon is not convex and counter-clockwise");
    return ConvexPolygon(std::move(vertices));
}

ConvexPolygon convex_hull(std::span<const Point2> points) {
    Ring pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) throw DegenerateGeometryError("convex hull needs at least 3 distinct points");
    Ring hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) throw DegenerateGeometryError("convex hull of collinear points");
    return ConvexPolygon::from_vertices(std::move(hull));
}

Ring clip_halfplane(std::span<const Point2> ring, double a, double b, double c) {
    Ring out;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = ring[i];
        const Point2& q = ring[(i + 1) % n];
        const double fp = a * p.x + b * p.y - c;
        const double fq = a * q.x + b * q.y - c;
        if (fp <= 0.0) out.push_back(p);
        if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
            const double t = fp / (fp - fq);
            out.push_back(p + (q - p) * t);
        }
    }
    return out;
}

Ring clean_ring(std::span<const Point2> ring, double tol) {
    Ring pts;
    for (const auto& p : ring) {
        if (pts.empty() || distance(pts.back(), p) > tol) pts.push_back(p);
    }
    while (pts.size() > 1 && distance(pts.front(), pts.back()) <= tol) pts.pop_back();
    bool changed = true;
    while (changed && pts.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Point2& prev = pts[(i + pts.size() - 1) % pts.size()];
            const Point2& next = pts[(i + 1) % pts.size()];
            const double len = distance(prev, next);
            if (len == 0.0 || std::abs(cross(prev, pts[i], next)) <= tol * len) {
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return pts;
}

}  // namespace smartscan::geometry
