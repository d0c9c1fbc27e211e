#include "smartscan/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "smartscan/encoding.hpp"
#include "smartscan/error.hpp"
#include "smartscan/image_codec.hpp"

namespace smartscan::constraints {

using nlohmann::json;

std::string to_string(ElementType t) {
    switch (t) {
        case ElementType::site_bounds: return "site_bounds";
        case ElementType::perimeter: return "perimeter";
        case ElementType::subspace: return "subspace";
        case ElementType::exclusion_zone: return "exclusion_zone";
        case ElementType::linear_constraint: return "linear_constraint";
    }
    return "subspace";
}

ElementType element_type_from_string(const std::string& s) {
    if (s == "site_bounds") return ElementType::site_bounds;
    if (s == "perimeter") return ElementType::perimeter;
    if (s == "subspace") return ElementType::subspace;
    if (s == "exclusion_zone") return ElementType::exclusion_zone;
    if (s == "linear_constraint") return ElementType::linear_constraint;
    throw BadRequestError("unknown element type '" + s + "'");
}

std::string to_string(Origin o) { return o == Origin::machine ? "machine" : "human"; }

Origin origin_from_string(const std::string& s) {
    if (s == "machine") return Origin::machine;
    if (s == "human") return Origin::human;
    throw BadRequestError("unknown element origin '" + s + "'");
}

bool HalfSpace::infeasible(const Point2& q) const {
    const double v = geometry::dot(normal, q) - offset;
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    return s == sign;
}

HalfSpace halfspace(const LinearConstraint& lc) {
    const Point2 d = lc.p2 - lc.p1;
    const double len = std::hypot(d.x, d.y);
    if (len == 0.0) throw DegenerateGeometryError("linear constraint cut points coincide");
    HalfSpace hs;
    hs.normal = {-d.y / len, d.x / len};
    hs.offset = geometry::dot(hs.normal, lc.p1);
    const double w = geometry::dot(hs.normal, lc.p3) - hs.offset;
    if (w == 0.0) throw DegenerateGeometryError("linear constraint witness lies on the cut line");
    hs.sign = w > 0.0 ? 1 : -1;
    return hs;
}

LinearConstraint linear_constraint_of(const SiteElement& e) {
    if (e.polygon.size() != 3) throw DegenerateGeometryError("linear constraint must be a triangle");
    return {e.polygon[0], e.polygon[1], e.polygon[2]};
}

const SiteElement* ConstraintSet::find(const std::string& id) const {
    for (const auto& e : elements) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

const SiteElement* ConstraintSet::bounds() const {
    for (const auto& e : elements) {
        if (e.type == ElementType::site_bounds) return &e;
    }
    return nullptr;
}

std::vector<std::string> validate(const ConstraintSet& cs, bool for_export) {
    std::vector<std::string> out;
    int bounds = 0, perimeters = 0;
    std::set<std::string> ids;
    const double extent = cs.site.frame.extent;
    for (const auto& e : cs.elements) {
        const std::string name = to_string(e.type) + " '" + e.id + "'";
        if (e.id.empty()) out.push_back(to_string(e.type) + " element without id");
        if (!ids.insert(e.id).second) out.push_back("duplicate element id '" + e.id + "'");
        if (e.type == ElementType::site_bounds) ++bounds;
        if (e.type == ElementType::perimeter) ++perimeters;
        if (e.polygon.size() < 3) {
            out.push_back(name + " has fewer than 3 vertices");
            continue;
        }
        for (const auto& p : e.polygon) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 || p.x > extent || p.y > extent) {
                out.push_back(name + " has a vertex outside the image extent");
                break;
            }
        }
        if (e.type == ElementType::linear_constraint) {
            if (e.polygon.size() != 3) {
                out.push_back(name + " must have exactly 3 vertices");
            } else {
                try {
                    halfspace(linear_constraint_of(e));
                } catch (const DegenerateGeometryError& err) {
                    out.push_back(name + ": " + err.what());
                }
            }
        }
        if (for_export && e.type == ElementType::subspace && e.non_convex()) {
            out.push_back(name + " is not convex");
        }
    }
    if (bounds == 0) out.push_back("missing site_bounds");
    if (bounds > 1) out.push_back("more than one site_bounds");
    if (perimeters > 1) out.push_back("more than one perimeter");
    return out;
}

bool is_feasible(const Point2& q, const ConstraintSet& cs) {
    const SiteElement* b = cs.bounds();
    if (!b || geometry::locate(q, b->polygon) == geometry::Location::outside) return false;
    for (const auto& e : cs.elements) {
        if (e.type == ElementType::exclusion_zone && geometry::locate(q, e.polygon) == geometry::Location::inside) {
            return false;
        }
        if (e.type == ElementType::linear_constraint && halfspace(linear_constraint_of(e)).infeasible(q)) {
            return false;
        }
    }
    return true;
}

std::vector<Point2> sample_in_polygon(const ConvexPolygon& poly, std::size_t n, std::uint64_t seed) {
    const auto& v = poly.vertices();
    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        total += std::abs(geometry::cross(v[0], v[i], v[i + 1])) / 2.0;
        cumulative.push_back(total);
    }
    std::mt19937_64 rng(seed);
    // 53 random mantissa bits; avoids distribution differences between standard libraries.
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<Point2> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double pick = uniform() * total;
        std::size_t t = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
                                                 cumulative.begin());
        t = std::min(t, cumulative.size() - 1);
        double a = uniform(), b = uniform();
        if (a + b > 1.0) {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        const Point2& o = v[0];
        out.push_back(o + (v[t + 1] - o) * a + (v[t + 2] - o) * b);
    }
    return out;
}

std::vector<ConvexPolygon> fragment(const ConvexPolygon& poly) {
    const Point2 c = geometry::centroid(poly.vertices());
    // (a, b, c) half-planes a*x + b*y <= c for the x and y sides.
    const double left[3] = {1, 0, c.x}, right[3] = {-1, 0, -c.x};
    const double top[3] = {0, 1, c.y}, bottom[3] = {0, -1, -c.y};
    const double* quads[4][2] = {{left, top}, {right, top}, {left, bottom}, {right, bottom}};
    std::vector<ConvexPolygon> out;
    for (const auto& q : quads) {
        Ring piece = geometry::clip_halfplane(poly.vertices(), q[0][0], q[0][1], q[0][2]);
        piece = geometry::clip_halfplane(piece, q[1][0], q[1][1], q[1][2]);
        piece = geometry::clean_ring(piece, 1e-9);
        if (piece.size() < 3) continue;
        try {
            out.push_back(geometry::convex_hull(piece));
        } catch (const DegenerateGeometryError&) {
        }
    }
    if (out.empty()) out.push_back(poly);
    return out;
}

ConvexPolygon merge(const std::vector<ConvexPolygon>& polys) {
    if (polys.empty()) throw DegenerateGeometryError("merge needs at least one polygon");
    std::vector<Point2> pts;
    for (const auto& p : polys) pts.insert(pts.end(), p.vertices().begin(), p.vertices().end());
    return geometry::convex_hull(pts);
}

EditResult edit_vertex(const Ring& polygon, const VertexEdit& edit) {
    Ring ring = polygon;
    if (edit.index >= ring.size()) throw BadRequestError("vertex index " + std::to_string(edit.index) + " out of range");
    switch (edit.kind) {
        case EditKind::move: ring[edit.index] = edit.point; break;
        case EditKind::insert: ring.insert(ring.begin() + static_cast<std::ptrdiff_t>(edit.index) + 1, edit.point); break;
        case EditKind::remove:
            if (ring.size() <= 3) throw DegenerateGeometryError("polygon cannot have fewer than 3 vertices");
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(edit.index));
            break;
    }
    const bool flagged = !geometry::is_convex(ring);
    return {std::move(ring), flagged};
}

Ring normalize_orientation(Ring ring) {
    if (geometry::signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
    return ring;
}

namespace {

int type_rank(ElementType t) { return static_cast<int>(t); }

geo::GeoPoint canonical(const geo::GeoPoint& g) { return {jsonfmt::canonical(g.lat), jsonfmt::canonical(g.lon)}; }

json point_json(const Point2& p) { return json::array({jsonfmt::number(p.x), jsonfmt::number(p.y)}); }

json geo_json(const geo::GeoPoint& g) { return {{"lat", jsonfmt::number(g.lat)}, {"lon", jsonfmt::number(g.lon)}}; }

geo::GeoPoint geo_from(const json& j) { return {j.at("lat").get<double>(), j.at("lon").get<double>()}; }

}  // namespace

ConstraintSet canonicalize(const ConstraintSet& cs) {
    ConstraintSet out;
    out.site.name = cs.site.name;
    geo::SiteFrame f = cs.site.frame;
    f.center = canonical(f.center);
    f.bottom_left = canonical(f.bottom_left);
    f.top_right = canonical(f.top_right);
    f.origin_world.x = jsonfmt::canonical(f.origin_world.x);
    f.origin_world.y = jsonfmt::canonical(f.origin_world.y);
    f.meters_per_pixel = jsonfmt::canonical(f.meters_per_pixel);
    out.site.frame = f;
    out.elements = cs.elements;
    for (auto& e : out.elements) {
        for (auto& p : e.polygon) p = {jsonfmt::canonical(p.x), jsonfmt::canonical(p.y)};
    }
    std::stable_sort(out.elements.begin(), out.elements.end(),
                     [](const SiteElement& a, const SiteElement& b) { return type_rank(a.type) < type_rank(b.type); });
    return out;
}

json element_to_json(const SiteElement& e, const geo::SiteFrame* frame) {
    json j;
    j["id"] = e.id;
    j["type"] = to_string(e.type);
    j["label"] = e.label;
    j["provenance"] = to_string(e.origin);
    j["non_convex"] = e.non_convex();
    j["pixel"] = json::array();
    for (const auto& p : e.polygon) j["pixel"].push_back(point_json(p));
    if (frame) {
        j["cartesian"] = json::array();
        Ring local;
        for (const auto& p : e.polygon) {
            const auto c = geo::pixel_to_local({p.x, p.y}, *frame);
            local.push_back({c.x_east, c.y_north});
            j["cartesian"].push_back(point_json(local.back()));
        }
        if (e.type == ElementType::linear_constraint && local.size() == 3) {
            const HalfSpace hs = halfspace({local[0], local[1], local[2]});
            j["halfspace_cartesian"] = {{"normal", point_json(hs.normal)},
                                        {"offset", jsonfmt::number(hs.offset)},
                                        {"sign", hs.sign}};
        }
    }
    return j;
}

SiteElement element_from_json(const json& j) {
    SiteElement e;
    e.id = j.at("id").get<std::string>();
    e.type = element_type_from_string(j.at("type").get<std::string>());
    e.label = j.value("label", std::string{});
    e.origin = origin_from_string(j.value("provenance", std::string{"human"}));
    for (const auto& p : j.at("pixel")) e.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return e;
}

std::map<std::string, std::string> render_exports(const ConstraintSet& input) {
    if (auto v = validate(input, true); !v.empty()) throw ValidationError(std::move(v));
    const ConstraintSet cs = canonicalize(input);
    const geo::SiteFrame& f = cs.site.frame;
    json site;
    site["schema_version"] = kSchemaVersion;
    site["site"] = {{"name", cs.site.name},
                    {"center", geo_json(f.center)},
                    {"bottom_left", geo_json(f.bottom_left)},
                    {"top_right", geo_json(f.top_right)},
                    {"zoom", f.zoom.zoom},
                    {"meters_per_pixel", jsonfmt::number(f.meters_per_pixel)},
                    {"image_size", json::array({f.extent, f.extent})}};
    site["crs"] = {{"projection", "EPSG:3857 spherical web mercator"},
                   {"tile_size", f.zoom.tile_size},
                   {"zoom", f.zoom.zoom},
                   {"origin_world_px", point_json({f.origin_world.x, f.origin_world.y})},
                   {"local_origin_px", point_json({f.extent / 2.0, f.extent / 2.0})},
                   {"axes", "x_east,y_north"},
                   {"units", "m"},
                   {"meters_per_pixel", jsonfmt::number(f.meters_per_pixel)},
                   {"pixel_to_local", "x_east = (px - 1536) * meters_per_pixel; y_north = (1536 - py) * meters_per_pixel"}};
    site["bounds"] = nullptr;
    site["perimeter"] = nullptr;
    json subspaces = json::array(), zones = json::array(), linear = json::array();
    for (const auto& e : cs.elements) {
        json ej = element_to_json(e, &f);
        switch (e.type) {
            case ElementType::site_bounds: site["bounds"] = std::move(ej); break;
            case ElementType::perimeter: site["perimeter"] = std::move(ej); break;
            case ElementType::subspace: subspaces.push_back(std::move(ej)); break;
            case ElementType::exclusion_zone: zones.push_back(std::move(ej)); break;
            case ElementType::linear_constraint: linear.push_back(std::move(ej)); break;
        }
    }
    auto doc = [&](const char* key, json items) {
        return json{{"schema_version", kSchemaVersion}, {"site", cs.site.name}, {key, std::move(items)}};
    };
    return {{kSiteFile, jsonfmt::dump(site)},
            {kSubspacesFile, jsonfmt::dump(doc("subspaces", std::move(subspaces)))},
            {kZonesFile, jsonfmt::dump(doc("exclusion_zones", std::move(zones)))},
            {kLinearFile, jsonfmt::dump(doc("linear_constraints", std::move(linear)))}};
}

std::vector<ExportedFile> export_constraint_set(const ConstraintSet& cs, const std::filesystem::path& dir) {
    const auto docs = render_exports(cs);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<ExportedFile> out;
    for (const char* name : {kSiteFile, kSubspacesFile, kZonesFile, kLinearFile}) {
        const std::string& text = docs.at(name);
        codec::write_text(dir / name, text);
        out.push_back({name, dir / name, encoding::sha256_hex(text)});
    }
    return out;
}

ConstraintSet parse_exports(const std::map<std::string, std::string>& docs) {
    std::vector<std::string> problems;
    ConstraintSet cs;
    try {
        const json site = json::parse(docs.at(kSiteFile));
        if (site.at("schema_version").get<int>() != kSchemaVersion) problems.push_back("unsupported schema_version");
        const json& s = site.at("site");
        const json& crs = site.at("crs");
        cs.site.name = s.at("name").get<std::string>();
        geo::SiteFrame& f = cs.site.frame;
        f.center = geo_from(s.at("center"));
        f.bottom_left = geo_from(s.at("bottom_left"));
        f.top_right = geo_from(s.at("top_right"));
        f.zoom = {s.at("zoom").get<int>(), crs.at("tile_size").get<int>()};
        f.extent = s.at("image_size").at(0).get<int>();
        f.meters_per_pixel = s.at("meters_per_pixel").get<double>();
        const json& o = crs.at("origin_world_px");
        f.origin_world = {o.at(0).get<double>(), o.at(1).get<double>(), f.zoom.zoom};
        const double expected_mpp = geo::meters_per_pixel(f.center.lat, f.zoom);
        if (std::abs(expected_mpp - f.meters_per_pixel) > 1e-6 * expected_mpp) {
            problems.push_back("meters_per_pixel inconsistent with center latitude and zoom");
        }
        std::vector<json> items;
        if (!site.at("bounds").is_null()) items.push_back(site.at("bounds"));
        if (!site.at("perimeter").is_null()) items.push_back(site.at("perimeter"));
        for (const auto& [file, key] : {std::pair{kSubspacesFile, "subspaces"}, std::pair{kZonesFile, "exclusion_zones"},
                                        std::pair{kLinearFile, "linear_constraints"}}) {
            const json doc = json::parse(docs.at(file));
            if (doc.at("schema_version").get<int>() != kSchemaVersion) {
                problems.push_back(std::string(file) + ": unsupported schema_version");
            }
            for (const auto& e : doc.at(key)) items.push_back(e);
        }
        for (const auto& j : items) {
            SiteElement e = element_from_json(j);
            const json& cart = j.at("cartesian");
            if (cart.size() != e.polygon.size()) {
                problems.push_back("element '" + e.id + "': cartesian/pixel vertex count mismatch");
            } else {
                for (std::size_t i = 0; i < e.polygon.size(); ++i) {
                    const auto c = geo::pixel_to_local({e.polygon[i].x, e.polygon[i].y}, f);
                    const double dx = c.x_east - cart[i].at(0).get<double>();
                    const double dy = c.y_north - cart[i].at(1).get<double>();
                    if (std::hypot(dx, dy) > 1e-6) {
                        problems.push_back("element '" + e.id + "': cartesian vertex " + std::to_string(i) +
                                           " inconsistent with pixel coordinates");
                        break;
                    }
                }
            }
            cs.elements.push_back(std::move(e));
        }
    } catch (const std::out_of_range& e) {
        problems.push_back(std::string("missing document or field: ") + e.what());
    } catch (const json::exception& e) {
        problems.push_back(std::string("malformed document: ") + e.what());
    } catch (const Error& e) {
        problems.push_back(e.what());
    }
    if (problems.empty()) {
        auto v = validate(cs, true);
        problems.insert(problems.end(), v.begin(), v.end());
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return cs;
}

ConstraintSet import_constraint_set(const std::filesystem::path& dir) {
    std::map<std::string, std::string> docs;
    for (const char* name : {kSiteFile, kSubspacesFile, kZonesFile, kLinearFile}) {
        docs[name] = codec::read_text(dir / name);
    }
    return parse_exports(docs);
}

}  // namespace smartscan::constraints
