#include "smartscan/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartscan/error.hpp"

namespace smartscan::post {

using geometry::ConvexPolygon;
using geometry::Point2;

void PostprocessParams::validate() const {
    if (crf_iterations < 0) throw BadRequestError("crf_iterations must be >= 0");
    if (!(crf_unary_confidence > 0.5 && crf_unary_confidence < 1.0)) {
        throw BadRequestError("crf_unary_confidence must lie in (0.5, 1)");
    }
    if (!(crf_pairwise_weight >= 0.0)) throw BadRequestError("crf_pairwise_weight must be >= 0");
    if (!(min_area >= 0.0)) throw BadRequestError("min_area must be >= 0");
    if (!(deadspace_tau > 0.0 && deadspace_tau < 1.0)) throw BadRequestError("deadspace_tau must lie in (0, 1)");
    if (max_split_depth < 0) throw BadRequestError("max_split_depth must be >= 0");
    if (!(rdp_epsilon >= 0.0)) throw BadRequestError("rdp_epsilon must be >= 0");
}

BinaryMask crf_refine(const BinaryMask& m, const PostprocessParams& prm) {
    prm.validate();
    const int W = m.width(), H = m.height();
    const int T = prm.crf_iterations;
    int minx = W, miny = H, maxx = -1, maxy = -1;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!m.at(x, y)) continue;
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
    }
    if (maxx < 0 || T == 0) return m;
    // After t sweeps a pixel farther than t from every foreground pixel still
    // believes background, so only a window of margin 2T+1 around the
    // foreground needs evaluating; edge effects of the window travel one
    // pixel per sweep and never reach the pixels that can change.
    const int margin = 2 * T + 1;
    const int x0 = std::max(0, minx - margin), x1 = std::min(W, maxx + margin + 1);
    const int y0 = std::max(0, miny - margin), y1 = std::min(H, maxy + margin + 1);
    const int w = x1 - x0, h = y1 - y0;
    const double p = prm.crf_unary_confidence;
    const double u = std::log(p / (1.0 - p));
    const double pw = prm.crf_pairwise_weight;
    std::vector<double> q(static_cast<std::size_t>(w) * h), next(q.size());
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) q[idx(x, y)] = m.at(x0 + x, y0 + y) ? p : 1.0 - p;
    }
    for (int t = 0; t < T; ++t) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                if (x > 0) s += 2.0 * q[idx(x - 1, y)] - 1.0;
                if (x + 1 < w) s += 2.0 * q[idx(x + 1, y)] - 1.0;
                if (y > 0) s += 2.0 * q[idx(x, y - 1)] - 1.0;
                if (y + 1 < h) s += 2.0 * q[idx(x, y + 1)] - 1.0;
                const double logit = (m.at(x0 + x, y0 + y) ? u : -u) + pw * s;
                next[idx(x, y)] = 1.0 / (1.0 + std::exp(-logit));
            }
        }
        q.swap(next);
    }
    BinaryMask out(W, H);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.set(x0 + x, y0 + y, q[idx(x, y)] > 0.5 ? 1 : 0);
    }
    return out;
}

std::vector<Component> connected_components(const BinaryMask& m) {
    const int W = m.width(), H = m.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(W) * H, 0);
    auto idx = [W](int x, int y) { return static_cast<std::size_t>(y) * W + x; };
    std::vector<Component> out;
    std::vector<Pixel> stack;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!m.at(x, y) || seen[idx(x, y)]) continue;
            Component c;
            stack.push_back({x, y});
            seen[idx(x, y)] = 1;
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                c.pixels.push_back(p);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx, ny = p.y + dy;
                        if ((dx == 0 && dy == 0) || !m.in_bounds(nx, ny)) continue;
                        if (!m.at(nx, ny) || seen[idx(nx, ny)]) continue;
                        seen[idx(nx, ny)] = 1;
                        stack.push_back({nx, ny});
                    }
                }
            }
            std::sort(c.pixels.begin(), c.pixels.end(),
                      [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
            out.push_back(std::move(c));
        }
    }
    return out;
}

namespace {

// Clockwise on screen (y down): E, SE, S, SW, W, NW, N, NE.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d) {
        if (kDx[d] == dx && kDy[d] == dy) return d;
    }
    return -1;
}

/// Component pixels rasterized into their padded bounding box, with per-row
/// prefix counts for range queries.
struct LocalRaster {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    std::vector<std::uint8_t> bits;
    std::vector<int> prefix;  // (w + 1) entries per row

    explicit LocalRaster(const std::vector<Pixel>& pixels) {
        int minx = std::numeric_limits<int>::max(), miny = minx;
        int maxx = std::numeric_limits<int>::min(), maxy = maxx;
        for (const auto& p : pixels) {
            minx = std::min(minx, p.x);
            maxx = std::max(maxx, p.x);
            miny = std::min(miny, p.y);
            maxy = std::max(maxy, p.y);
        }
        x0 = minx - 1;
        y0 = miny - 1;
        w = maxx - minx + 3;
        h = maxy - miny + 3;
        bits.assign(static_cast<std::size_t>(w) * h, 0);
        for (const auto& p : pixels) bits[static_cast<std::size_t>(p.y - y0) * w + (p.x - x0)] = 1;
        prefix.assign(static_cast<std::size_t>(w + 1) * h, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                prefix[static_cast<std::size_t>(y) * (w + 1) + x + 1] =
                    prefix[static_cast<std::size_t>(y) * (w + 1) + x] + bits[static_cast<std::size_t>(y) * w + x];
            }
        }
    }

    bool at(int gx, int gy) const {
        const int x = gx - x0, y = gy - y0;
        if (x < 0 || y < 0 || x >= w || y >= h) return false;
        return bits[static_cast<std::size_t>(y) * w + x] != 0;
    }

    /// Pixels set in global row gy with gx in [xa, xb].
    int count_row(int gy, int xa, int xb) const {
        const int y = gy - y0;
        if (y < 0 || y >= h) return 0;
        const int a = std::max(xa - x0, 0), b = std::min(xb - x0, w - 1);
        if (a > b) return 0;
        const std::size_t row = static_cast<std::size_t>(y) * (w + 1);
        return prefix[row + b + 1] - prefix[row + a];
    }
};

/// Horizontal extent of a convex polygon at height yc, if it meets it.
bool slice(const geometry::Ring& poly, double yc, double& xl, double& xr) {
    xl = std::numeric_limits<double>::infinity();
    xr = -xl;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly[i];
        const Point2& b = poly[(i + 1) % n];
        if ((a.y - yc) * (b.y - yc) > 0.0) continue;
        if (a.y == b.y) {
            if (a.y != yc) continue;
            xl = std::min({xl, a.x, b.x});
            xr = std::max({xr, a.x, b.x});
        } else {
            const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
            xl = std::min(xl, x);
            xr = std::max(xr, x);
        }
    }
    return xl <= xr;
}

/// Calls fn(y, xa, xb) for every pixel row whose centres inside the polygon
/// span columns [xa, xb].
template <typename Fn>
void for_each_covered_run(const geometry::Ring& poly, Fn&& fn) {
    constexpr double kEps = 1e-9;
    double miny = std::numeric_limits<double>::infinity(), maxy = -miny;
    for (const auto& p : poly) {
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    const int ya = static_cast<int>(std::ceil(miny - 0.5 - kEps));
    const int yb = static_cast<int>(std::floor(maxy - 0.5 + kEps));
    for (int y = ya; y <= yb; ++y) {
        double xl, xr;
        if (!slice(poly, y + 0.5, xl, xr)) continue;
        const int xa = static_cast<int>(std::ceil(xl - 0.5 - kEps));
        const int xb = static_cast<int>(std::floor(xr - 0.5 + kEps));
        if (xa <= xb) fn(y, xa, xb);
    }
}

std::size_t covered_pixels(const ConvexPolygon& poly, const LocalRaster& raster) {
    std::size_t count = 0;
    for_each_covered_run(poly.vertices(), [&](int y, int xa, int xb) { count += raster.count_row(y, xa, xb); });
    return count;
}

/// Hull over pixel squares, using only each row's extreme pixels.
ConvexPolygon hull_of_pixels(const std::vector<Pixel>& pixels) {
    std::vector<Point2> pts;
    std::size_t i = 0;
    while (i < pixels.size()) {
        int lo = pixels[i].x, hi = pixels[i].x;
        const int y = pixels[i].y;
        std::size_t j = i;
        for (; j < pixels.size() && pixels[j].y == y; ++j) {
            lo = std::min(lo, pixels[j].x);
            hi = std::max(hi, pixels[j].x);
        }
        pts.push_back({double(lo), double(y)});
        pts.push_back({double(lo), double(y + 1)});
        pts.push_back({double(hi + 1), double(y)});
        pts.push_back({double(hi + 1), double(y + 1)});
        i = j;
    }
    return geometry::convex_hull(pts);
}

void sort_row_major(std::vector<Pixel>& v) {
    std::sort(v.begin(), v.end(), [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
}

std::vector<ConvexPolygon> tighten_impl(const ConvexPolygon& hull, const std::vector<Pixel>& pixels,
                                        const LocalRaster& raster, const PostprocessParams& prm, int depth) {
    const double a = hull.area();
    const double ds = a > 0.0 ? 1.0 - static_cast<double>(covered_pixels(hull, raster)) / a : 0.0;
    if (ds <= prm.deadspace_tau || depth >= prm.max_split_depth) return {hull};
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pixels) {
        cx += p.x + 0.5;
        cy += p.y + 0.5;
    }
    cx /= static_cast<double>(pixels.size());
    cy /= static_cast<double>(pixels.size());
    std::vector<Pixel> quadrants[4];
    for (const auto& p : pixels) {
        const int right = (p.x + 0.5 < cx) ? 0 : 1;
        const int bottom = (p.y + 0.5 < cy) ? 0 : 1;
        quadrants[bottom * 2 + right].push_back(p);
    }
    int nonempty = 0;
    for (const auto& q : quadrants) nonempty += q.empty() ? 0 : 1;
    if (nonempty < 2) return {hull};
    std::vector<ConvexPolygon> out;
    for (auto& q : quadrants) {
        if (q.empty()) continue;
        sort_row_major(q);
        const ConvexPolygon sub = hull_of_pixels(q);
        auto pieces = tighten_impl(sub, q, raster, prm, depth + 1);
        out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
    }
    return out;
}

void rdp(const geometry::Ring& pts, std::size_t first, std::size_t last, double eps, std::vector<bool>& keep) {
    if (last <= first + 1) return;
    double best = -1.0;
    std::size_t index = first;
    for (std::size_t i = first + 1; i < last; ++i) {
        const double d = geometry::point_segment_distance(pts[i], pts[first], pts[last]);
        if (d > best) {
            best = d;
            index = i;
        }
    }
    if (best > eps) {
        keep[index] = true;
        rdp(pts, first, index, eps, keep);
        rdp(pts, index, last, eps, keep);
    }
}

}  // namespace

Contour trace_contour(const Component& c) {
    if (c.pixels.empty()) throw DegenerateGeometryError("cannot trace an empty component");
    const LocalRaster raster(c.pixels);
    const Pixel start = *std::min_element(c.pixels.begin(), c.pixels.end(), [](const Pixel& a, const Pixel& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    Contour out;
    out.pixels.push_back(start);
    // Finds the next boundary pixel clockwise from backtrack direction `back`.
    auto step = [&](const Pixel& cur, int back, Pixel& next, int& next_back) {
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            const Pixel cand{cur.x + kDx[d], cur.y + kDy[d]};
            if (raster.at(cand.x, cand.y)) {
                const int pd = (d + 7) % 8;
                const Pixel b{cur.x + kDx[pd], cur.y + kDy[pd]};
                next = cand;
                next_back = direction_of(b.x - cand.x, b.y - cand.y);
                return true;
            }
        }
        return false;
    };
    Pixel second;
    int back = 4;  // west of the first pixel is background
    int second_back = 0;
    if (!step(start, back, second, second_back)) return out;
    Pixel cur = second;
    back = second_back;
    // Jacob's stopping rule: stop on re-entering the start pixel and being
    // about to repeat the first move.
    for (std::size_t guard = 0; guard < 8 * c.pixels.size() + 16; ++guard) {
        Pixel next;
        int next_back = 0;
        step(cur, back, next, next_back);
        if (cur == start && next == second) break;
        out.pixels.push_back(cur);
        cur = next;
        back = next_back;
    }
    return out;
}

double contour_area(const Contour& c) {
    const auto& v = c.pixels;
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n == 1) return 1.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Pixel& a = v[i];
        const Pixel& b = v[(i + 1) % n];
        s += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
    }
    return std::abs(s) / 2.0 + static_cast<double>(n) / 2.0 + 1.0;
}

std::vector<Contour> filter_small(std::vector<Contour> contours, double min_area) {
    std::erase_if(contours, [min_area](const Contour& c) { return contour_area(c) < min_area; });
    return contours;
}

std::vector<Point2> pixel_corners(const std::vector<Pixel>& pixels) {
    std::vector<Point2> out;
    out.reserve(pixels.size() * 4);
    for (const auto& p : pixels) {
        out.push_back({double(p.x), double(p.y)});
        out.push_back({double(p.x + 1), double(p.y)});
        out.push_back({double(p.x + 1), double(p.y + 1)});
        out.push_back({double(p.x), double(p.y + 1)});
    }
    return out;
}

double deadspace(const ConvexPolygon& hull, const Component& c) {
    const double a = hull.area();
    if (a <= 0.0 || c.pixels.empty()) return 0.0;
    const LocalRaster raster(c.pixels);
    return 1.0 - static_cast<double>(covered_pixels(hull, raster)) / a;
}

std::vector<ConvexPolygon> tighten(const ConvexPolygon& hull, const Component& c, const PostprocessParams& prm,
                                   int depth) {
    if (c.pixels.empty()) return {hull};
    std::vector<Pixel> pixels = c.pixels;
    sort_row_major(pixels);
    const LocalRaster raster(pixels);
    return tighten_impl(hull, pixels, raster, prm, depth);
}

ConvexPolygon simplify(const ConvexPolygon& poly, double epsilon) {
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    if (n <= 3) return poly;
    std::size_t ia = 0, ib = 1;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = geometry::distance(v[i], v[j]);
            if (d > best) {
                best = d;
                ia = i;
                ib = j;
            }
        }
    }
    // Rotate so the ring reads anchor_a ... anchor_b ... (back to anchor_a).
    geometry::Ring ring;
    ring.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) ring.push_back(v[(ia + k) % n]);
    const std::size_t mid = ib - ia;
    std::vector<bool> keep(ring.size(), false);
    keep[0] = keep[mid] = keep[n] = true;
    rdp(ring, 0, mid, epsilon, keep);
    rdp(ring, mid, n, epsilon, keep);
    geometry::Ring kept;
    for (std::size_t k = 0; k < n; ++k) {
        if (keep[k]) kept.push_back(ring[k]);
    }
    if (kept.size() < 3) {
        // Keep the vertex farthest from the anchor chord so a polygon remains.
        std::size_t far = 1;
        double fd = -1.0;
        for (std::size_t k = 1; k < n; ++k) {
            if (k == mid) continue;
            const double d = geometry::point_segment_distance(ring[k], ring[0], ring[mid]);
            if (d > fd) {
                fd = d;
                far = k;
            }
        }
        keep[far] = true;
        kept.clear();
        for (std::size_t k = 0; k < n; ++k) {
            if (keep[k]) kept.push_back(ring[k]);
        }
    }
    return geometry::convex_hull(kept);
}

std::vector<ConvexPolygon> extract_subspaces(const BinaryMask& m, const PostprocessParams& prm, const LogSink& log) {
    prm.validate();
    auto note = [&log](const std::string& s) {
        if (log) log(s);
    };
    const BinaryMask refined = crf_refine(m, prm);
    const auto components = connected_components(refined);
    note("crf: " + std::to_string(m.count()) + " -> " + std::to_string(refined.count()) + " foreground pixels, " +
         std::to_string(components.size()) + " components");
    std::vector<ConvexPolygon> out;
    for (std::size_t label = 0; label < components.size(); ++label) {
        const auto& comp = components[label];
        if (comp.pixels.size() < 3) {
            note("component " + std::to_string(label) + ": skipped " + std::to_string(comp.pixels.size()) +
                 "-pixel fragment");
            continue;
        }
        const Contour contour = trace_contour(comp);
        if (filter_small({contour}, prm.min_area).empty()) {
            note("component " + std::to_string(label) + ": area " + std::to_string(contour_area(contour)) +
                 " below minimum");
            continue;
        }
        try {
            const ConvexPolygon hull = geometry::convex_hull(pixel_corners(contour.pixels));
            for (const auto& piece : tighten(hull, comp, prm)) out.push_back(simplify(piece, prm.rdp_epsilon));
        } catch (const DegenerateGeometryError& e) {
            note("component " + std::to_string(label) + ": skipped (" + e.what() + ")");
        }
    }
    note("extracted " + std::to_string(out.size()) + " subspace polygons");
    return out;
}

BinaryMask rasterize(const std::vector<ConvexPolygon>& polys, int width, int height) {
    BinaryMask out(width, height);
    for (const auto& poly : polys) {
        for_each_covered_run(poly.vertices(), [&](int y, int xa, int xb) {
            if (y < 0 || y >= height) return;
            for (int x = std::max(xa, 0); x <= std::min(xb, width - 1); ++x) out.set(x, y, 1);
        });
    }
    return out;
}

}  // namespace smartscan::post
