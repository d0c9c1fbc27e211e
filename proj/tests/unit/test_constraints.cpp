#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "smartscan/constraints.hpp"
#include "smartscan/encoding.hpp"
#include "smartscan/error.hpp"

using namespace smartscan;
using namespace smartscan::constraints;

namespace {

geo::SiteFrame test_frame() { return geo::frame_from_origin({512.0 * 140000, 512.0 * 200000, 19}, geo::ZoomSpec{19}); }

SiteElement el(std::string id, ElementType t, Ring poly, std::string label = {}) {
    return {std::move(id), t, std::move(poly), std::move(label), Origin::human};
}

ConstraintSet sample_set() {
    ConstraintSet cs;
    cs.site = {"Test Site", test_frame()};
    cs.elements.push_back(el("b", ElementType::site_bounds, {{10, 10}, {3000, 10}, {3000, 3000}, {10, 3000}}, "fence"));
    cs.elements.push_back(el("s1", ElementType::subspace, {{100.25, 100}, {400, 110}, {380, 420.125}, {90, 400}}));
    cs.elements.push_back(el("z1", ElementType::exclusion_zone, {{1000, 1000}, {1200, 1000}, {1100, 1300}}, "tank"));
    cs.elements.push_back(el("l1", ElementType::linear_constraint, {{0, 2000}, {3072, 2010}, {1500, 2900}}, "road"));
    cs.elements.push_back(el("p", ElementType::perimeter, {{20, 20}, {2990, 20}, {2990, 2990}, {20, 2990}}));
    return cs;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Upper 0.1% point of chi-square via Wilson-Hilferty.
double chi2_critical(int dof) {
    const double z = 3.090232, k = dof;
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

}  // namespace

TEST_CASE("halfspace sides and degeneracy") {
    const LinearConstraint lc{{0, 0}, {10, 0}, {5, 4}};
    const auto hs = halfspace(lc);
    CHECK(hs.infeasible({5, 4}));
    CHECK(hs.infeasible({-100, 0.001}));
    CHECK_FALSE(hs.infeasible({5, -1}));
    CHECK_FALSE(hs.infeasible({3, 0}));  // on the line
    CHECK(std::hypot(hs.normal.x, hs.normal.y) == doctest::Approx(1.0));
    CHECK_THROWS_AS(halfspace({{1, 1}, {1, 1}, {0, 5}}), DegenerateGeometryError);
    CHECK_THROWS_AS(halfspace({{0, 0}, {4, 4}, {2, 2}}), DegenerateGeometryError);
}

TEST_CASE("halfspace classifies random triangles like the orientation test") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(0, 3072);
    for (int t = 0; t < 100; ++t) {
        const Point2 a{d(rng), d(rng)}, b{d(rng), d(rng)}, w{d(rng), d(rng)};
        const auto hs = halfspace({a, b, w});
        const double sw = geometry::cross(a, b, w);
        for (int k = 0; k < 50; ++k) {
            const Point2 q{d(rng), d(rng)};
            const double sq = geometry::cross(a, b, q);
            if (std::abs(sq) < 1e-6 * geometry::distance(a, b)) continue;
            CHECK(hs.infeasible(q) == ((sq > 0) == (sw > 0)));
        }
    }
}

TEST_CASE("feasibility combines bounds, zones and linear constraints") {
    const auto cs = sample_set();
    CHECK(is_feasible({500, 500}, cs));
    CHECK_FALSE(is_feasible({5, 500}, cs));        // outside bounds
    CHECK(is_feasible({10, 500}, cs));             // on the bounds edge
    CHECK_FALSE(is_feasible({1100, 1100}, cs));    // inside the zone
    CHECK(is_feasible({1100, 1000}, cs));          // on the zone edge
    CHECK_FALSE(is_feasible({1500, 2800}, cs));    // beyond the road
    ConstraintSet none;
    CHECK_FALSE(is_feasible({1, 1}, none));
}

TEST_CASE("uniform sampling passes a chi-square test") {
    const auto poly = geometry::convex_hull(oracles::random_convex_polygon(5, 9, 200, 150, 160, 110));
    const std::size_t n = 40000;
    const auto pts = sample_in_polygon(poly, n, 1234);
    CHECK(pts == sample_in_polygon(poly, n, 1234));
    for (const auto& p : pts) CHECK(oracles::point_in_convex(p, poly.vertices(), 1e-9));

    // 8x8 bins over the bounding box; expected counts from clipped areas.
    double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
    for (const auto& v : poly.vertices()) {
        x0 = std::min(x0, v.x), y0 = std::min(y0, v.y), x1 = std::max(x1, v.x), y1 = std::max(y1, v.y);
    }
    const int B = 8;
    const double bw = (x1 - x0) / B, bh = (y1 - y0) / B;
    std::vector<int> counts(B * B, 0);
    for (const auto& p : pts) {
        const int i = std::min(B - 1, int((p.x - x0) / bw)), j = std::min(B - 1, int((p.y - y0) / bh));
        ++counts[j * B + i];
    }
    double chi2 = 0;
    int bins = 0;
    for (int j = 0; j < B; ++j) {
        for (int i = 0; i < B; ++i) {
            const auto piece = oracles::clip_to_box(poly.vertices(), x0 + i * bw, y0 + j * bh, x0 + (i + 1) * bw, y0 + (j + 1) * bh);
            const double e = n * std::abs(oracles::shoelace(piece)) / poly.area();
            if (e < 5) {
                CHECK(counts[j * B + i] <= 5 + 5 * e);
                continue;
            }
            chi2 += (counts[j * B + i] - e) * (counts[j * B + i] - e) / e;
            ++bins;
        }
    }
    REQUIRE(bins > 20);
    CHECK(chi2 < chi2_critical(bins - 1));
}

TEST_CASE("fragment and merge conserve area") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto poly = geometry::convex_hull(oracles::random_convex_polygon(s, 3 + s % 9, 500, 500, 200, 90));
        const auto parts = fragment(poly);
        CHECK(parts.size() >= 2);
        CHECK(parts.size() <= 4);
        double sum = 0;
        for (const auto& p : parts) {
            CHECK(geometry::is_convex(p.vertices()));
            sum += p.area();
        }
        CHECK(std::abs(sum - poly.area()) <= 1e-6 * poly.area());
        CHECK(std::abs(merge(parts).area() - poly.area()) <= 1e-6 * poly.area());
    }
    CHECK_THROWS_AS(merge({}), DegenerateGeometryError);
    const auto a = ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    const auto b = ConvexPolygon::from_vertices({{3, 0}, {4, 0}, {4, 1}, {3, 1}});
    CHECK(merge({a, b}).area() == 4.0);
}

TEST_CASE("vertex edits") {
    const Ring sq{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    auto r = edit_vertex(sq, {EditKind::move, 2, {5, 5}});
    CHECK(r.polygon[2] == Point2{5, 5});
    CHECK_FALSE(r.non_convex);
    r = edit_vertex(sq, {EditKind::move, 2, {1, 1}});
    CHECK(r.non_convex);
    r = edit_vertex(sq, {EditKind::insert, 0, {2, -1}});
    CHECK(r.polygon.size() == 5);
    CHECK(r.polygon[1] == Point2{2, -1});
    CHECK_FALSE(r.non_convex);
    r = edit_vertex(sq, {EditKind::remove, 3, {}});
    CHECK(r.polygon.size() == 3);
    const Ring tri{{0, 0}, {4, 0}, {0, 4}};
    CHECK_THROWS_AS(edit_vertex(tri, {EditKind::remove, 0, {}}), DegenerateGeometryError);
    CHECK_THROWS_AS(edit_vertex(tri, {EditKind::move, 3, {}}), BadRequestError);
    CHECK(normalize_orientation({{0, 4}, {4, 0}, {0, 0}}) == Ring{{0, 0}, {4, 0}, {0, 4}});
}

TEST_CASE("validation lists every violation") {
    auto cs = sample_set();
    CHECK(validate(cs).empty());
    cs.elements.push_back(el("b2", ElementType::site_bounds, {{0, 0}, {1, 0}, {1, 1}}));
    cs.elements.push_back(el("s1", ElementType::subspace, {{0, 0}, {10, 0}, {2, 2}, {0, 10}}));
    cs.elements.push_back(el("x", ElementType::exclusion_zone, {{0, 0}, {5000, 0}, {0, 5}}));
    cs.elements.push_back(el("l2", ElementType::linear_constraint, {{0, 0}, {10, 10}, {5, 5}}));
    const auto v = validate(cs);
    auto has = [&](const std::string& s) {
        return std::any_of(v.begin(), v.end(), [&](const std::string& m) { return m.find(s) != std::string::npos; });
    };
    CHECK(has("more than one site_bounds"));
    CHECK(has("duplicate element id 's1'"));
    CHECK(has("not convex"));
    CHECK(has("outside the image extent"));
    CHECK(has("witness lies on the cut line"));
    CHECK(validate(cs, false).size() == v.size() - 1);

    ConstraintSet empty;
    empty.site = {"x", test_frame()};
    CHECK(validate(empty) == std::vector<std::string>{"missing site_bounds"});
}

TEST_CASE("export and import round trip") {
    fixtures::TempDir tmp;
    const auto cs = sample_set();
    const auto files = export_constraint_set(cs, tmp.path());
    REQUIRE(files.size() == 4);
    for (const auto& f : files) {
        CHECK(std::filesystem::exists(f.path));
        CHECK(f.sha256 == encoding::sha256_hex(slurp(f.path)));
    }
    const auto back = import_constraint_set(tmp.path());
    CHECK(back == canonicalize(cs));

    // Re-export of the imported set is byte-identical.
    fixtures::TempDir again;
    const auto files2 = export_constraint_set(back, again.path());
    for (std::size_t i = 0; i < files.size(); ++i) {
        CHECK(files2[i].name == files[i].name);
        CHECK(files2[i].sha256 == files[i].sha256);
    }

    auto bad = sample_set();
    bad.elements.erase(bad.elements.begin());
    CHECK_THROWS_AS(export_constraint_set(bad, tmp.path() / "bad"), ValidationError);
}

TEST_CASE("exported documents carry both coordinate systems") {
    const auto docs = render_exports(sample_set());
    REQUIRE(docs.size() == 4);
    const auto site = nlohmann::json::parse(docs.at(kSiteFile));
    CHECK(site.at("schema_version") == kSchemaVersion);
    const auto lin = nlohmann::json::parse(docs.at(kLinearFile));
    REQUIRE(lin.at("linear_constraints").size() == 1);
    const auto& l = lin.at("linear_constraints")[0];
    CHECK(l.contains("halfspace_cartesian"));
    CHECK(l.at("pixel").size() == 3);
    CHECK(l.at("cartesian").size() == 3);

    auto tampered = docs;
    auto sub = nlohmann::json::parse(tampered.at(kSubspacesFile));
    sub["subspaces"][0]["cartesian"][0][0] = sub["subspaces"][0]["cartesian"][0][0].get<double>() + 0.01;
    tampered[kSubspacesFile] = sub.dump();
    CHECK_THROWS_AS(parse_exports(tampered), ValidationError);
    tampered.erase(kZonesFile);
    CHECK_THROWS_AS(parse_exports(tampered), ValidationError);
}

TEST_CASE("random sets round trip after canonicalization") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 20; ++t) {
        ConstraintSet cs;
        cs.site = {"r" + std::to_string(t), test_frame()};
        cs.elements.push_back(el("b", ElementType::site_bounds, {{0, 0}, {3072, 0}, {3072, 3072}, {0, 3072}}));
        for (int k = 0; k < 5; ++k) {
            auto poly = oracles::random_convex_polygon(rng(), 7, 1536, 1536, 700, 500);
            cs.elements.push_back(el("s" + std::to_string(k), k % 2 ? ElementType::subspace : ElementType::exclusion_zone, poly));
        }
        const auto back = parse_exports(render_exports(cs));
        CHECK(back == canonicalize(cs));
        CHECK(render_exports(back) == render_exports(cs));
    }
}
