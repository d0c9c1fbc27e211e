#pragma once

// Facility constraint sets: typed site elements, linear-constraint
// half-spaces, feasibility queries, leak-point sampling, QC polygon editing
// and the four-file JSON export.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smartscan/geo.hpp"
#include "smartscan/geometry.hpp"
#include "smartscan/json_format.hpp"

namespace smartscan::constraints {

using geometry::ConvexPolygon;
using geometry::Point2;
using geometry::Ring;

inline constexpr int kSchemaVersion = 1;

enum class ElementType { site_bounds, perimeter, subspace, exclusion_zone, linear_constraint };

std::string to_string(ElementType t);
/// Throws BadRequestError for unknown names.
ElementType element_type_from_string(const std::string& s);

/// machine: produced by extraction and replaced on re-extraction.
/// human: created or edited in quality check; never touched by extraction.
enum class Origin { machine, human };

std::string to_string(Origin o);
Origin origin_from_string(const std::string& s);

struct SiteElement {
    std::string id;
    ElementType type = ElementType::subspace;
    Ring polygon;  // image-pixel coordinates
    std::string label;
    Origin origin = Origin::human;

    bool non_convex() const { return !geometry::is_convex(polygon); }

    friend bool operator==(const SiteElement&, const SiteElement&) = default;
};

struct LinearConstraint {
    Point2 p1;  // cut line
    Point2 p2;
    Point2 p3;  // witness on the infeasible side
};

/// q is infeasible iff sign(normal . q - offset) == sign.
struct HalfSpace {
    Point2 normal;  // unit normal of line(p1, p2)
    double offset = 0.0;
    int sign = 1;

    bool infeasible(const Point2& q) const;
};

/// Throws DegenerateGeometryError when p1 == p2 or p3 lies on the cut line.
HalfSpace halfspace(const LinearConstraint& lc);
LinearConstraint linear_constraint_of(const SiteElement& e);

struct SiteMetadata {
    std::string name;
    geo::SiteFrame frame;

    friend bool operator==(const SiteMetadata&, const SiteMetadata&) = default;
};

struct ConstraintSet {
    SiteMetadata site;
    std::vector<SiteElement> elements;

    const SiteElement* find(const std::string& id) const;
    const SiteElement* bounds() const;

    friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Every structural violation. With `for_export`, subspaces must also be convex.
std::vector<std::string> validate(const ConstraintSet& cs, bool for_export = true);

/// Inside (or on) the site bounds, not strictly inside any exclusion zone,
/// and on the feasible side of (or on) every linear constraint.
bool is_feasible(const Point2& q, const ConstraintSet& cs);

/// n i.i.d. uniform points; fan triangles from vertex 0 chosen by area,
/// reflected-barycentric sampling inside each. Deterministic in `seed`.
std::vector<Point2> sample_in_polygon(const ConvexPolygon& poly, std::size_t n, std::uint64_t seed);

/// Clips against the four quadrants through the area centroid; empty and
/// degenerate pieces are dropped (if none survive, returns {poly}).
std::vector<ConvexPolygon> fragment(const ConvexPolygon& poly);

/// Convex hull of all vertices. Throws DegenerateGeometryError on empty input.
ConvexPolygon merge(const std::vector<ConvexPolygon>& polys);

enum class EditKind { move, insert, remove };

struct VertexEdit {
    EditKind kind = EditKind::move;
    std::size_t index = 0;  // vertex to move/remove; insert goes after it
    Point2 point;
};

struct EditResult {
    Ring polygon;
    bool non_convex = false;
};

/// Applies the edit. Non-convex results are allowed and flagged. Throws
/// DegenerateGeometryError when fewer than 3 vertices would remain and
/// BadRequestError for an out-of-range index.
EditResult edit_vertex(const Ring& polygon, const VertexEdit& edit);

/// Reverses clockwise rings so every stored polygon has positive area.
Ring normalize_orientation(Ring ring);

/// Values rounded exactly as the exporter writes them, elements ordered by
/// type (bounds, perimeter, subspaces, zones, linear constraints).
ConstraintSet canonicalize(const ConstraintSet& cs);

inline constexpr const char* kSiteFile = "site.json";
inline constexpr const char* kSubspacesFile = "subspaces.json";
inline constexpr const char* kZonesFile = "zones.json";
inline constexpr const char* kLinearFile = "linear_constraints.json";

/// File name -> document text. Throws ValidationError.
std::map<std::string, std::string> render_exports(const ConstraintSet& cs);

struct ExportedFile {
    std::string name;
    std::filesystem::path path;
    std::string sha256;
};

std::vector<ExportedFile> export_constraint_set(const ConstraintSet& cs, const std::filesystem::path& dir);

/// Inverse of export. Throws ValidationError when documents are malformed or
/// the stored Cartesian coordinates disagree with the frame by > 1e-6 m.
ConstraintSet import_constraint_set(const std::filesystem::path& dir);
ConstraintSet parse_exports(const std::map<std::string, std::string>& docs);

/// Element JSON used by exports and the service API.
nlohmann::json element_to_json(const SiteElement& e, const geo::SiteFrame* frame);
SiteElement element_from_json(const nlohmann::json& j);

}  // namespace smartscan::constraints
