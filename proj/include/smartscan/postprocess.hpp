#pragma once

// Binary mask -> tight, simplified convex subspace polygons.
//
//   crf_refine -> connected_components -> trace_contour + filter_small
//   -> convex_hull -> tighten -> simplify
//
// Pixel (x, y) covers the unit square [x, x+1) x [y, y+1); hulls are taken
// over pixel corners, and a pixel counts as inside a polygon when its centre
// (x + 0.5, y + 0.5) is inside or on the boundary.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "smartscan/geometry.hpp"
#include "smartscan/raster.hpp"

namespace smartscan::post {

struct PostprocessParams {
    int crf_iterations = 5;
    double crf_unary_confidence = 0.9;
    double crf_pairwise_weight = 1.0;
    double min_area = 100.0;
    double deadspace_tau = 0.3;
    int max_split_depth = 3;
    double rdp_epsilon = 2.0;

    /// Throws BadRequestError on out-of-range values.
    void validate() const;
};

struct Pixel {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Pixels in row-major order.
struct Component {
    std::vector<Pixel> pixels;
};

/// Closed loop of 8-adjacent boundary pixels (first vertex not repeated).
struct Contour {
    std::vector<Pixel> pixels;
};

using LogSink = std::function<void(std::string_view)>;

/// Mean-field inference on a 4-connected binary Potts model. Beliefs start at
/// the unary probabilities (p for the observed label); each synchronous sweep
/// sets logit_i = +-ln(p/(1-p)) + w * sum_j (2 q_j - 1) over in-image
/// neighbours. Output is 1 where the final belief exceeds 0.5.
BinaryMask crf_refine(const BinaryMask& m, const PostprocessParams& prm);

/// 8-connected foreground components, ordered by their first pixel in a
/// row-major scan.
std::vector<Component> connected_components(const BinaryMask& m);

/// Outer boundary by Moore-neighbour tracing from the component's first
/// pixel, heading along the top row first (positive signed area). Holes are
/// ignored. A single pixel yields a one-pixel loop.
Contour trace_contour(const Component& c);

/// Pixels enclosed by the contour, boundary included (shoelace plus half the
/// boundary steps plus one).
double contour_area(const Contour& c);

std::vector<Contour> filter_small(std::vector<Contour> contours, double min_area);

/// The four corners of every contour pixel.
std::vector<geometry::Point2> pixel_corners(const std::vector<Pixel>& pixels);

/// 1 - (component pixels inside hull) / hull area.
double deadspace(const geometry::ConvexPolygon& hull, const Component& c);

/// Returns [hull] when deadspace <= tau or the depth cap is reached;
/// otherwise splits the pixels through their centroid into up to four
/// quadrants (TL, TR, BL, BR), hulls each and recurses.
std::vector<geometry::ConvexPolygon> tighten(const geometry::ConvexPolygon& hull, const Component& c,
                                             const PostprocessParams& prm, int depth = 0);

/// Ramer-Douglas-Peucker on the closed ring anchored at its mutually farthest
/// vertex pair, followed by a hull pass. Never drops below 3 vertices.
geometry::ConvexPolygon simplify(const geometry::ConvexPolygon& poly, double epsilon);

std::vector<geometry::ConvexPolygon> extract_subspaces(const BinaryMask& m, const PostprocessParams& prm,
                                                       const LogSink& log = {});

/// Pixels whose centres lie in any polygon.
BinaryMask rasterize(const std::vector<geometry::ConvexPolygon>& polys, int width, int height);

}  // namespace smartscan::post
