// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smartscan/constraints.hpp"
#include "smartscan/error.hpp"
#include "smartscan/geo.hpp"
#include "smartscan/http_api.hpp"
#include "smartscan/imagery.hpp"
#include "smartscan/postprocess.hpp"
#include "smartscan/prompts.hpp"
#include "smartscan/segbackend.hpp"
#include "smartscan/service.hpp"

using namespace smartscan;
using geometry::Point2;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome ac1_geo_round_trip() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> lat(-geo::kMaxLatitude, geo::kMaxLatitude), lon(-180.0, 180.0);
    std::uniform_real_distribution<double> px(0.0, 3072.0);
    double worst_deg = 0, worst_m = 0, worst_oracle = 0;
    for (int z : {19, 20, 21}) {
        for (int i = 0; i < 10000; ++i) {
            const auto g = geo::GeoPoint::make(lat(rng), lon(rng));
            const auto w = geo::latlon_to_world_pixel(g, geo::ZoomSpec{z});
            const auto ref = oracles::mercator_forward(g.lat, g.lon, z);
            worst_oracle = std::max({worst_oracle, std::abs(w.x - ref.x), std::abs(w.y - ref.y)});
            const auto back = geo::world_pixel_to_latlon(w);
            double dlon = std::abs(back.lon - g.lon);
            dlon = std::min(dlon, 360.0 - dlon);
            worst_deg = std::max({worst_deg, std::abs(back.lat - g.lat), dlon});

            const auto f = geo::make_site_frame(geo::GeoPoint::make(std::clamp(g.lat, -80.0, 80.0), g.lon), geo::ZoomSpec{z});
            const geo::LocalCartesian c{(px(rng) - 1536.0) * f.meters_per_pixel, (px(rng) - 1536.0) * f.meters_per_pixel};
            const auto c2 = geo::pixel_to_local(geo::local_to_pixel(c, f), f);
            worst_m = std::max(worst_m, std::hypot(c2.x_east - c.x_east, c2.y_north - c.y_north));
        }
    }
    const bool ok = worst_deg < 1e-9 && worst_m < 1e-9 && worst_oracle < 1e-5;
    return {ok, fmt("30000 points, max latlon err %.3g deg, max local err %.3g m, max |impl-oracle| %.3g px", worst_deg,
                    worst_m, worst_oracle)};
}

Outcome ac2_stitch() {
    fixtures::TileServer ts;
    std::mt19937 rng(202);
    std::uniform_int_distribution<int> d(0, 3071);
    int mismatches = 0, bad_plans = 0;
    const struct {
        double lat, lon;
        int z;
    } sites[] = {{29.76, -95.37, 19}, {-33.8688, 151.2093, 20}, {64.1, -21.9, 21}, {-16.5, 179.9999, 20}};
    for (const auto& s : sites) {
        imagery::TileSourceConfig cfg;
        cfg.url_template = ts.url_template();
        imagery::TileFetcher fetcher(cfg);
        const auto frame = imagery::snap_to_tile_grid(geo::make_site_frame({s.lat, s.lon}, geo::ZoomSpec{s.z}));
        const auto plan = imagery::plan_tiles(frame);
        std::int64_t ox, oy;
        oracles::snapped_origin(s.lat, s.lon, s.z, ox, oy);
        const std::int64_t n = std::int64_t{1} << s.z;
        if (plan.size() != 36) ++bad_plans;
        std::set<std::pair<int, int>> planned;
        for (int i = 0; i < 36 && i < int(plan.size()); ++i) {
            planned.insert({plan[i].tx, plan[i].ty});
            if (plan[i].tx != ((ox / 512 + i % 6) % n) || plan[i].ty != oy / 512 + i / 6) ++bad_plans;
        }
        if (planned.size() != 36) ++bad_plans;
        const auto img = imagery::extract_site_image(frame, fetcher);
        for (int i = 0; i < 2500; ++i) {
            const int x = d(rng), y = d(rng);
            const std::int64_t wx = ((ox + x) % (512 * n) + 512 * n) % (512 * n);
            mismatches += img.pixels.at(x, y) != fixtures::coordinate_color(wx, oy + y);
        }
    }
    return {mismatches == 0 && bad_plans == 0,
            fmt("4 sites, 10000 sampled pixels, %d mismatches, %d plan deviations, %zu tile requests", mismatches,
                bad_plans, ts.requests())};
}

Outcome ac3_peaks() {
    std::mt19937_64 rng(303);
    int sets = 0, missed = 0, spurious = 0, max_k = 0;
    const double sigmas[] = {4.0, 8.0, 16.0};
    for (int t = 0; t < 100; ++t) {
        const double sigma = sigmas[t % 3];
        const int want = 1 + int(rng() % 20);
        std::uniform_int_distribution<int> d(0, 255);
        std::vector<prompts::Point> gens;
        for (int tries = 0; tries < 5000 && int(gens.size()) < want; ++tries) {
            const prompts::Point c{d(rng), d(rng)};
            bool far = true;
            for (const auto& g : gens) far = far && std::hypot(g.x - c.x, g.y - c.y) > 4 * sigma;
            if (far) gens.push_back(c);
        }
        max_k = std::max(max_k, int(gens.size()));
        const auto found = prompts::find_peaks(prompts::render_heatmap(gens, sigma, 256, 256), prompts::PeakParams{});
        std::vector<bool> used(found.size(), false);
        for (const auto& g : gens) {
            bool hit = false;
            for (std::size_t i = 0; i < found.size() && !hit; ++i) {
                if (!used[i] && std::hypot(found[i].x - g.x, found[i].y - g.y) <= 1.0) used[i] = hit = true;
            }
            missed += !hit;
        }
        for (bool u : used) spurious += !u;
        ++sets;
    }
    return {missed == 0 && spurious == 0,
            fmt("%d sets (K up to %d, sigma 4/8/16), %d missed, %d spurious", sets, max_k, missed, spurious)};
}

Outcome ac4_hull() {
    std::mt19937_64 rng(404);
    int mismatches = 0, degenerate = 0;
    for (int t = 0; t < 1000; ++t) {
        const int n = 1 + int(rng() % 12);
        // Small integer grids force collinear and duplicate points; wide real
        // ranges exercise general position.
        const bool grid = t % 2 == 0;
        std::uniform_int_distribution<int> gi(-4, 4);
        std::uniform_real_distribution<double> gr(-1000.0, 1000.0);
        std::vector<Point2> pts;
        for (int i = 0; i < n; ++i) pts.push_back(grid ? Point2{double(gi(rng)), double(gi(rng))} : Point2{gr(rng), gr(rng)});
        const auto ref = oracles::brute_force_hull(pts);
        try {
            const auto h = geometry::convex_hull(pts);
            mismatches += h.vertices() != ref;
        } catch (const DegenerateGeometryError&) {
            ++degenerate;
            mismatches += !ref.empty();
        }
    }
    return {mismatches == 0, fmt("1000 sets of 1-12 points (%d degenerate), %d mismatches", degenerate, mismatches)};
}

Outcome ac5_rdp() {
    std::mt19937_64 rng(505);
    double worst = 0;
    int non_convex = 0;
    std::size_t before = 0, after = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = 6 + int(rng() % 200);
        const double rx = 20 + double(rng() % 600), ry = 20 + double(rng() % 600);
        const auto poly = geometry::convex_hull(oracles::random_convex_polygon(rng(), n, 1536, 1536, rx, ry));
        const auto s = post::simplify(poly, 2.0);
        worst = std::max(worst, oracles::hausdorff_convex(poly.vertices(), s.vertices()));
        // Convexity checked with a plain cross-product scan.
        const auto& v = s.vertices();
        bool convex = v.size() >= 3;
        for (std::size_t i = 0; i < v.size() && convex; ++i) {
            const Point2 &a = v[i], &b = v[(i + 1) % v.size()], &c = v[(i + 2) % v.size()];
            convex = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) > 0;
        }
        non_convex += !convex;
        before += poly.size();
        after += s.size();
    }
    return {worst <= 2.0 && non_convex == 0,
            fmt("200 polygons (%zu -> %zu vertices), max Hausdorff %.4f px, %d non-convex", before, after, worst,
                non_convex)};
}

Outcome ac6_crf() {
    const post::PostprocessParams prm;
    auto as_vec = [](const BinaryMask& m) {
        std::vector<int> v;
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x) v.push_back(m.at(x, y));
        return v;
    };
    int mismatches = 0;
    for (int bits = 0; bits < 512; ++bits) {
        BinaryMask m(3, 3);
        for (int i = 0; i < 9; ++i) m.set(i % 3, i / 3, (bits >> i) & 1);
        mismatches += as_vec(post::crf_refine(m, prm)) !=
                      oracles::crf_reference(as_vec(m), 3, 3, prm.crf_iterations, prm.crf_unary_confidence,
                                             prm.crf_pairwise_weight);
    }
    std::mt19937_64 rng(606);
    for (int t = 0; t < 100; ++t) {
        BinaryMask m(5, 5);
        for (int i = 0; i < 25; ++i) m.set(i % 5, i / 5, rng() & 1);
        mismatches += as_vec(post::crf_refine(m, prm)) !=
                      oracles::crf_reference(as_vec(m), 5, 5, prm.crf_iterations, prm.crf_unary_confidence,
                                             prm.crf_pairwise_weight);
    }
    BinaryMask iso(9, 9);
    iso.set(4, 4, 1);
    const bool flips = post::crf_refine(iso, prm).count() == 0;
    return {mismatches == 0 && flips,
            fmt("512 3x3 + 100 5x5 masks, %d mismatches; isolated pixel %s", mismatches,
                flips ? "flips to background" : "survives")};
}

constexpr double kSceneLat = 29.7604, kSceneLon = -95.3698;
constexpr int kSceneZoom = 20;

struct ServiceEnv {
    fixtures::TempDir dir;
    std::unique_ptr<fixtures::TileServer> tiles;
    ServiceConfig cfg;

    explicit ServiceEnv(const RgbImage& img) {
        std::int64_t ox, oy;
        oracles::snapped_origin(kSceneLat, kSceneLon, kSceneZoom, ox, oy);
        tiles = std::make_unique<fixtures::TileServer>(fixtures::image_scene(img, ox, oy, {90, 110, 80}));
        cfg.data_root = dir.path() / "sites";
        cfg.tiles.url_template = tiles->url_template();
        cfg.backend.kind = seg::BackendKind::mock_floodfill;
    }
};

Outcome ac7_miou() {
    const auto scene = oracles::make_blob_scene(707);
    ServiceEnv env(scene.image);
    SiteService svc(env.cfg);
    const auto id = svc.create_site("blob field", kSceneLat, kSceneLon, kSceneZoom).id;
    svc.put_prompts(id, scene.prompts);
    const auto res = svc.extract(id);

    // Each polygon goes to the blob it overlaps most.
    std::vector<std::vector<geometry::ConvexPolygon>> per_blob(scene.truth.size());
    for (const auto& e : res.subspaces) {
        const auto poly = geometry::ConvexPolygon::from_vertices(e.polygon);
        const auto r = post::rasterize({poly}, 3072, 3072);
        std::size_t best = 0, best_overlap = 0;
        for (std::size_t b = 0; b < scene.truth.size(); ++b) {
            std::size_t ov = 0;
            for (int y = 0; y < 3072; ++y)
                for (int x = 0; x < 3072; ++x) ov += r.at(x, y) && scene.truth[b].at(x, y);
            if (ov > best_overlap) best_overlap = ov, best = b;
        }
        if (best_overlap > 0) per_blob[best].push_back(poly);
    }
    double sum = 0;
    std::string ious;
    for (std::size_t b = 0; b < scene.truth.size(); ++b) {
        const double v = oracles::iou(post::rasterize(per_blob[b], 3072, 3072), scene.truth[b]);
        sum += v;
        ious += fmt("%s%.3f", b ? " " : "", v);
    }
    const double miou = sum / double(scene.truth.size());
    return {miou >= 0.90, fmt("%zu polygons, per-blob IoU [%s], mIoU %.4f (>= 0.90)", res.subspaces.size(), ious.c_str(), miou)};
}

Outcome ac8_constraints() {
    using namespace constraints;
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> d(0, 3072);
    int hs_fail = 0, tris = 0;
    while (tris < 100) {
        const Point2 a{d(rng), d(rng)}, b{d(rng), d(rng)}, w{d(rng), d(rng)};
        if (std::abs(geometry::cross(a, b, w)) < 1.0) continue;
        ++tris;
        const auto hs = halfspace({a, b, w});
        // Reflect the witness across the cut line.
        const Point2 u = (b - a) * (1.0 / geometry::distance(a, b));
        const Point2 foot = a + u * geometry::dot(w - a, u);
        const Point2 refl = foot * 2.0 - w;
        hs_fail += !hs.infeasible(w) || hs.infeasible(refl);
    }

    double worst_area = 0;
    for (int t = 0; t < 100; ++t) {
        const auto poly = geometry::convex_hull(oracles::random_convex_polygon(rng(), 3 + int(rng() % 20), 1500, 1500, 50 + double(rng() % 900), 50 + double(rng() % 900)));
        const auto parts = fragment(poly);
        double sum = 0;
        for (const auto& p : parts) sum += p.area();
        worst_area = std::max({worst_area, std::abs(sum - poly.area()) / poly.area(),
                               std::abs(merge(parts).area() - poly.area()) / poly.area()});
    }

    // Chi-square over a 10x10 grid clipped to a random hexagon-ish polygon.
    const auto poly = geometry::convex_hull(oracles::random_convex_polygon(4242, 8, 500, 500, 300, 200));
    const std::size_t n = 100000;
    const auto pts = sample_in_polygon(poly, n, 99);
    double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
    for (const auto& v : poly.vertices()) x0 = std::min(x0, v.x), y0 = std::min(y0, v.y), x1 = std::max(x1, v.x), y1 = std::max(y1, v.y);
    const int B = 10;
    std::vector<double> counts(B * B, 0);
    int outside = 0;
    for (const auto& p : pts) {
        outside += !oracles::point_in_convex(p, poly.vertices(), 1e-9);
        counts[std::min(B - 1, int((p.y - y0) / (y1 - y0) * B)) * B + std::min(B - 1, int((p.x - x0) / (x1 - x0) * B))] += 1;
    }
    double chi2 = 0;
    int dof = -1;
    for (int j = 0; j < B; ++j) {
        for (int i = 0; i < B; ++i) {
            const double bx = (x1 - x0) / B, by = (y1 - y0) / B;
            const double e = n * std::abs(oracles::shoelace(oracles::clip_to_box(poly.vertices(), x0 + i * bx, y0 + j * by,
                                                                                   x0 + (i + 1) * bx, y0 + (j + 1) * by))) /
                             poly.area();
            if (e < 5) continue;
            chi2 += (counts[j * B + i] - e) * (counts[j * B + i] - e) / e;
            ++dof;
        }
    }
    // Upper 0.1% point via Wilson-Hilferty.
    const double z = 3.090232, k = dof, tt = 1.0 - 2.0 / (9 * k) + z * std::sqrt(2.0 / (9 * k));
    const double crit = k * tt * tt * tt;

    // Export/import/re-export over random sets.
    int rt_fail = 0;
    for (int t = 0; t < 20; ++t) {
        ConstraintSet cs;
        cs.site.name = "site " + std::to_string(t);
        cs.site.frame = imagery::snap_to_tile_grid(geo::make_site_frame({d(rng) / 40.0, d(rng) / 20.0}, geo::ZoomSpec{19 + t % 3}));
        cs.elements.push_back({"e1", ElementType::site_bounds, {{0, 0}, {3072, 0}, {3072, 3072}, {0, 3072}}, "bounds", Origin::human});
        cs.elements.push_back({"e2", ElementType::perimeter, {{5.5, 5}, {3000, 7.25}, {2990, 3001}, {9, 2999}}, "", Origin::human});
        int next = 3;
        for (int k2 = 0; k2 < 4; ++k2) {
            cs.elements.push_back({"e" + std::to_string(next++), ElementType::subspace,
                                   oracles::random_convex_polygon(rng(), 9, 1536, 1536, 900, 700), "", Origin::machine});
            cs.elements.push_back({"e" + std::to_string(next++), ElementType::exclusion_zone,
                                   oracles::random_convex_polygon(rng(), 5, 1000, 2000, 300, 200), "zone", Origin::human});
        }
        cs.elements.push_back({"e" + std::to_string(next++), ElementType::linear_constraint,
                               {{0, 100.5}, {3072, 180.25}, {1536, 0}}, "road", Origin::human});
        fixtures::TempDir a, b;
        const auto f1 = export_constraint_set(cs, a.path());
        const auto back = import_constraint_set(a.path());
        const auto f2 = export_constraint_set(back, b.path());
        rt_fail += back != canonicalize(cs);
        for (std::size_t i = 0; i < f1.size(); ++i) rt_fail += f1[i].sha256 != f2[i].sha256;
    }

    const bool ok = hs_fail == 0 && worst_area < 1e-6 && outside == 0 && chi2 < crit && rt_fail == 0;
    return {ok, fmt("halfspace %d/100 fail; fragment/merge max rel area err %.2g; chi2 %.1f < %.1f (dof %d), %d outside; "
                    "round-trip failures %d/20",
                    hs_fail, worst_area, chi2, crit, dof, outside, rt_fail)};
}

// --- AC9 -------------------------------------------------------------------

// Declared transition table: minimum state for each operation and the state it
// leads to on success.
enum St { created, image_ready, prompts_ready, extracted, exported };

struct Rule {
    const char* op;
    St min;
    int weight;  // sampling weight; prompt saves are rare so sites linger in early states
};

const Rule kRules[] = {{"put_prompts", image_ready, 1},   {"auto_center", image_ready, 1}, {"extract", prompts_ready, 4},
                       {"create_zone", image_ready, 4},   {"create_bounds", image_ready, 2}, {"delete", extracted, 4},
                       {"fragment", extracted, 4},        {"merge", extracted, 4},       {"patch", extracted, 4},
                       {"export", image_ready, 3},        {"undo", image_ready, 3}};

St parse_state(const std::string& s) {
    static const std::map<std::string, St> m{{"created", created},
                                             {"image_ready", image_ready},
                                             {"prompts_ready", prompts_ready},
                                             {"extracted", extracted},
                                             {"exported", exported}};
    return m.at(s);
}

struct Client {
    httplib::Client c;
    explicit Client(const std::string& url) : c(url) { c.set_read_timeout(120, 0); }

    std::pair<int, json> call(const std::string& method, const std::string& path, const json& body = json::object()) {
        httplib::Result r = method == "GET"      ? c.Get(path)
                            : method == "DELETE" ? c.Delete(path)
                            : method == "PUT"    ? c.Put(path, body.dump(), "application/json")
                            : method == "PATCH"  ? c.Patch(path, body.dump(), "application/json")
                                                 : c.Post(path, body.dump(), "application/json");
        if (!r) return {0, json()};
        json j;
        try {
            j = json::parse(r->body);
        } catch (...) {
        }
        return {r->status, j};
    }
};

struct SiteModel {
    std::string id;
    St state = image_ready;
    bool prompts_saved = false;
    int undo_depth = 0;
};

Outcome ac9_service() {
    const auto scene = oracles::make_two_blob_scene();
    ServiceEnv env(scene.image);
    std::string problems;
    int violations = 0, rejected_disallowed = 0, succeeded = 0, ops = 0;
    std::map<std::string, json> snapshot_elements;
    std::map<std::string, std::string> snapshot_state;
    const json prompts_doc = json::parse(prompts::to_json(scene.prompts));
    {
        SiteService svc(env.cfg);
        fixtures::LoopbackServer server;
        http::mount_routes(server.server(), svc);
        server.start();
        Client cl(server.url());

        std::vector<SiteModel> sites;
        auto new_site = [&] {
            const std::string name = "site " + std::to_string(sites.size());
            auto [st, body] = cl.call("POST", "/sites", {{"name", name}, {"lat", kSceneLat}, {"lon", kSceneLon}, {"zoom", kSceneZoom}});
            if (st != 201 || body.at("state") != "image_ready") {
                ++violations;
                problems += fmt(" create %s -> %d;", name.c_str(), st);
                return;
            }
            sites.push_back({body.at("id"), image_ready, false, 0});
        };
        for (int i = 0; i < 3; ++i) new_site();
        if (sites.empty()) return {false, "site creation failed:" + problems};

        std::vector<int> weights;
        for (const auto& r : kRules) weights.push_back(r.weight);
        std::discrete_distribution<int> pick_rule(weights.begin(), weights.end());
        std::mt19937_64 rng(909);
        for (ops = 0; ops < 200; ++ops) {
            if (sites.size() < 8 && rng() % 25 == 0) {
                new_site();
                continue;
            }
            SiteModel& m = sites[rng() % sites.size()];
            const Rule& rule = kRules[pick_rule(rng)];
            const std::string op = rule.op;
            const std::string base = "/sites/" + m.id;
            const json els = cl.call("GET", base + "/elements").second;
            std::vector<std::string> editable;
            bool has_bounds = false;
            for (const auto& e : els) {
                if (e.at("type") == "site_bounds") has_bounds = true;
                if (e.at("type") == "subspace" || e.at("type") == "exclusion_zone") editable.push_back(e.at("id"));
            }
            const std::string any_id = els.empty() ? std::string("e999999") : els[rng() % els.size()].at("id").get<std::string>();

            bool allowed = m.state >= rule.min;
            bool expect_domain_error = false;  // allowed by state but rejected on content
            int st = 0;
            json body;
            if (op == "put_prompts") {
                std::tie(st, body) = cl.call("PUT", base + "/prompts", prompts_doc);
            } else if (op == "auto_center") {
                std::tie(st, body) = cl.call("POST", base + "/prompts/auto", {{"mode", "baseline_center"}, {"boxes", prompts_doc.at("boxes")}});
            } else if (op == "extract") {
                allowed = allowed && m.prompts_saved;
                std::tie(st, body) = cl.call("POST", base + "/extract");
            } else if (op == "create_zone") {
                const double o = 50 + double(rng() % 2800);
                std::tie(st, body) = cl.call("POST", base + "/elements",
                                             {{"type", "exclusion_zone"}, {"polygon", {{o, o}, {o + 20, o}, {o, o + 20}}}});
            } else if (op == "create_bounds") {
                expect_domain_error = has_bounds;
                std::tie(st, body) = cl.call("POST", base + "/elements",
                                             {{"type", "site_bounds"}, {"polygon", {{0, 0}, {3072, 0}, {3072, 3072}, {0, 3072}}}});
            } else if (op == "delete") {
                expect_domain_error = els.empty();
                std::tie(st, body) = cl.call("DELETE", base + "/elements/" + any_id);
            } else if (op == "fragment") {
                expect_domain_error = editable.empty();
                std::tie(st, body) = cl.call("POST", base + "/elements/" + (editable.empty() ? any_id : editable[0]) + "/fragment");
            } else if (op == "merge") {
                std::vector<std::string> same;
                std::string type;
                for (const auto& e : els) {
                    if (e.at("type") != "exclusion_zone") continue;
                    same.push_back(e.at("id"));
                    if (same.size() == 2) break;
                }
                expect_domain_error = same.size() < 2;
                if (same.size() < 2) same = {any_id, any_id + "x"};
                std::tie(st, body) = cl.call("POST", base + "/elements/merge", {{"ids", same}});
            } else if (op == "patch") {
                expect_domain_error = els.empty();
                std::tie(st, body) = cl.call("PATCH", base + "/elements/" + any_id, {{"label", "op" + std::to_string(ops)}});
            } else if (op == "export") {
                expect_domain_error = !has_bounds;
                std::tie(st, body) = cl.call("POST", base + "/export");
            } else if (op == "undo") {
                expect_domain_error = m.undo_depth == 0;
                std::tie(st, body) = cl.call("POST", base + "/undo");
            }
            const bool ok = st >= 200 && st < 300;
            if (!allowed) {
                if (ok) {
                    ++violations;
                    problems += fmt(" %s succeeded from %d;", op.c_str(), int(m.state));
                } else if (st != 409) {
                    ++violations;
                    problems += fmt(" %s from disallowed state gave %d;", op.c_str(), st);
                } else {
                    ++rejected_disallowed;
                }
            } else if (expect_domain_error) {
                if (ok) {
                    ++violations;
                    problems += fmt(" %s should have been rejected;", op.c_str());
                }
            } else if (!ok) {
                ++violations;
                problems += fmt(" %s allowed but gave %d (%s);", op.c_str(), st, body.dump().substr(0, 120).c_str());
            }

            if (ok) {
                ++succeeded;
                // Expected next state per the table.
                if (op == "put_prompts" || op == "auto_center") {
                    m.state = std::max(m.state, prompts_ready);
                    m.prompts_saved = true;
                } else if (op == "extract") {
                    m.state = extracted;
                    ++m.undo_depth;
                } else if (op == "export") {
                    m.state = exported;
                } else if (op == "undo") {
                    --m.undo_depth;
                    if (m.state == exported) m.state = extracted;
                } else {
                    ++m.undo_depth;
                    if (m.state == exported) m.state = extracted;
                }
            }
            const St actual = parse_state(cl.call("GET", base).second.at("state").get<std::string>());
            if (actual != m.state) {
                ++violations;
                problems += fmt(" after %s state %d, expected %d;", op.c_str(), int(actual), int(m.state));
                m.state = actual;
            }
        }

        // Concurrent mutations on one site.
        const std::string base = "/sites/" + sites[0].id;
        const std::size_t journal_before = cl.call("GET", base + "/journal").second.size();
        std::vector<std::jthread> workers;
        std::atomic<int> created{0};
        for (int t = 0; t < 8; ++t) {
            workers.emplace_back([&, t] {
                Client c(server.url());
                for (int k = 0; k < 5; ++k) {
                    const double o = 100.0 + 300.0 * t + 40.0 * k;
                    if (c.call("POST", base + "/elements", {{"type", "exclusion_zone"}, {"polygon", {{o, o}, {o + 30, o}, {o, o + 30}}}})
                            .first == 201)
                        ++created;
                    c.call("GET", base + "/elements");
                }
            });
        }
        workers.clear();
        const json journal = cl.call("GET", base + "/journal").second;
        bool ordered = journal.size() == journal_before + 40 && created == 40;
        for (std::size_t i = 1; i < journal.size(); ++i)
            ordered = ordered && journal[i].at("seq").get<std::uint64_t>() == journal[i - 1].at("seq").get<std::uint64_t>() + 1;
        if (!ordered) {
            ++violations;
            problems += " concurrent journal not strictly ordered;";
        }

        for (const auto& s : sites) {
            snapshot_elements[s.id] = cl.call("GET", "/sites/" + s.id + "/elements").second;
            snapshot_state[s.id] = cl.call("GET", "/sites/" + s.id).second.at("state");
        }
    }

    // Restart from disk alone.
    int restart_mismatch = 0;
    {
        SiteService svc(env.cfg);
        fixtures::LoopbackServer server;
        http::mount_routes(server.server(), svc);
        server.start();
        Client cl(server.url());
        const json listed = cl.call("GET", "/sites").second;
        restart_mismatch += listed.size() != snapshot_state.size();
        for (const auto& [id, state] : snapshot_state) {
            restart_mismatch += cl.call("GET", "/sites/" + id).second.value("state", "") != state;
            restart_mismatch += cl.call("GET", "/sites/" + id + "/elements").second != snapshot_elements[id];
        }
    }
    if (restart_mismatch) {
        ++violations;
        problems += fmt(" %d mismatches after restart;", restart_mismatch);
    }
    return {violations == 0,
            fmt("%d ops (%d succeeded, %d rejected from disallowed states), 40 concurrent creates, restart %s, %d violations%s",
                ops, succeeded, rejected_disallowed, restart_mismatch ? "differs" : "identical", violations,
                problems.substr(0, 600).c_str())};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1 geo round-trip", ac1_geo_round_trip}, {"AC2 stitch exactness", ac2_stitch},
        {"AC3 heatmap peaks", ac3_peaks},           {"AC4 hull oracle", ac4_hull},
        {"AC5 RDP bound", ac5_rdp},                 {"AC6 CRF reference", ac6_crf},
        {"AC7 end-to-end mIoU", ac7_miou},          {"AC8 constraint geometry", ac8_constraints},
        {"AC9 service state machine", ac9_service},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures ? 1 : 0;
}
