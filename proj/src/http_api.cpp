#include "smartscan/http_api.hpp"

#include <cmath>
#include <iostream>

namespace smartscan::http {

using constraints::SiteElement;
using nlohmann::json;

namespace {

constexpr const char* kSite = R"(/sites/([a-z0-9-]+))";

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw BadRequestError(std::string("request body is not valid JSON: ") + e.what());
    }
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw BadRequestError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw BadRequestError(std::string("field '") + key + "' has the wrong type");
    }
}

geometry::Point2 point_of(const json& p) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw BadRequestError("points must be [x, y] number pairs");
    return {p[0].get<double>(), p[1].get<double>()};
}

geometry::Ring ring_of(const json& j) {
    if (!j.is_array()) throw BadRequestError("polygon must be an array of [x, y] pairs");
    geometry::Ring r;
    for (const auto& p : j) r.push_back(point_of(p));
    return r;
}

json halfspace_json(const constraints::HalfSpace& h) {
    return {{"normal", {h.normal.x, h.normal.y}}, {"offset", h.offset}, {"sign", h.sign}};
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

/// Runs `fn` and maps typed errors onto statuses.
template <class Fn>
httplib::Server::Handler wrap(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            reply(res, status_for(e), error_body(e));
        } catch (const json::exception& e) {
            reply(res, 400, {{"error", "bad_request"}, {"message", e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    };
}

std::vector<prompts::BoxPrompt> boxes_of(const json& j) {
    std::vector<prompts::BoxPrompt> out;
    for (const auto& b : j) out.push_back({{field<int>(b, "row"), field<int>(b, "col")}});
    return out;
}

constraints::EditKind edit_kind(const std::string& s) {
    if (s == "move") return constraints::EditKind::move;
    if (s == "insert") return constraints::EditKind::insert;
    if (s == "remove" || s == "delete") return constraints::EditKind::remove;
    throw BadRequestError("unknown edit op '" + s + "' (expected move, insert or remove)");
}

}  // namespace

int status_for(const Error& e) {
    const std::string k = e.kind();
    if (k == "zoom_range" || k == "geo_range" || k == "bad_request" || k == "codec") return 400;
    if (k == "not_found") return 404;
    if (k == "state" || k == "conflict") return 409;
    if (k == "validation" || k == "degenerate_geometry") return 422;
    if (k == "fetch" || k == "malformed_tile" || k == "dimension_mismatch" || k == "backend" ||
        k == "missing_fixture")
        return 502;
    if (k == "unavailable") return 503;
    return 500;
}

json error_body(const Error& e) {
    json j{{"error", e.kind()}, {"message", e.what()}};
    if (const auto* v = dynamic_cast<const ValidationError*>(&e)) j["violations"] = v->violations();
    return j;
}

json site_json(const SiteRecord& r) {
    const auto& f = r.frame;
    return {{"id", r.id},
            {"name", r.name},
            {"state", store::to_string(r.state)},
            {"folder", r.folder.string()},
            {"requested_center", {{"lat", r.requested_center.lat}, {"lon", r.requested_center.lon}}},
            {"center", {{"lat", f.center.lat}, {"lon", f.center.lon}}},
            {"zoom", f.zoom.zoom},
            {"image_size", {f.extent, f.extent}},
            {"meters_per_pixel", f.meters_per_pixel},
            {"origin_world_px", {f.origin_world.x, f.origin_world.y}},
            {"bottom_left", {{"lat", f.bottom_left.lat}, {"lon", f.bottom_left.lon}}},
            {"top_right", {{"lat", f.top_right.lat}, {"lon", f.top_right.lon}}}};
}

json element_json(const SiteElement& e) {
    json pts = json::array();
    for (const auto& p : e.polygon) pts.push_back({p.x, p.y});
    return {{"id", e.id},
            {"type", constraints::to_string(e.type)},
            {"label", e.label},
            {"provenance", constraints::to_string(e.origin)},
            {"non_convex", e.non_convex()},
            {"polygon", std::move(pts)}};
}

json job_json(const JobReport& r) {
    return {{"id", r.id},         {"kind", r.kind},         {"started", r.started},
            {"finished", r.finished}, {"outcome", r.outcome}, {"messages", r.messages}};
}

void mount_routes(httplib::Server& srv, SiteService& svc) {
    const std::string site = kSite;
    const std::string elem = site + R"(/elements/([A-Za-z0-9_-]+))";
    auto elements_body = [](const std::vector<SiteElement>& es) {
        json arr = json::array();
        for (const auto& e : es) arr.push_back(element_json(e));
        return arr;
    };

    srv.Get("/health", wrap([](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); }));

    srv.Get("/jobs", wrap([&svc](const httplib::Request&, httplib::Response& res) {
        json arr = json::array();
        for (const auto& j : svc.jobs()) arr.push_back(job_json(j));
        reply(res, 200, arr);
    }));

    srv.Get("/sites", wrap([&svc](const httplib::Request&, httplib::Response& res) {
        json arr = json::array();
        for (const auto& r : svc.list_sites()) arr.push_back(site_json(r));
        reply(res, 200, arr);
    }));

    srv.Post("/sites", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const json b = parse_body(req);
        JobReport job;
        const auto rec = svc.create_site(field<std::string>(b, "name"), field<double>(b, "lat"),
                                         field<double>(b, "lon"), field<int>(b, "zoom"), &job);
        json out = site_json(rec);
        out["job"] = job_json(job);
        reply(res, 201, out);
    }));

    srv.Get(site, wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, site_json(svc.get_site(req.matches[1])));
    }));

    srv.Get(site + "/image.png", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto png = svc.image_png(req.matches[1]);
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    srv.Put(site + "/prompts", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        svc.put_prompts(req.matches[1], prompts::from_json(req.body));
        reply(res, 200, {{"valid", true}, {"violations", json::array()}});
    }));

    srv.Get(site + "/prompts", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto ps = svc.get_prompts(req.matches[1]);
        if (!ps) throw NotFoundError("site '" + std::string(req.matches[1]) + "' has no saved prompts");
        res.set_content(prompts::to_json(*ps), "application/json");
    }));

    srv.Post(site + "/prompts/auto", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const json b = parse_body(req);
        const PromptMode mode = prompt_mode_from_string(field<std::string>(b, "mode"));
        std::optional<std::vector<prompts::BoxPrompt>> boxes;
        if (b.contains("boxes")) boxes = boxes_of(b.at("boxes"));
        const auto ps = svc.auto_prompts(req.matches[1], mode, boxes);
        res.set_content(prompts::to_json(ps), "application/json");
    }));

    srv.Post(site + "/extract", wrap([&svc, elements_body](const httplib::Request& req, httplib::Response& res) {
        const auto r = svc.extract(req.matches[1]);
        reply(res, 200, {{"subspaces", elements_body(r.subspaces)}, {"job", job_json(r.report)}});
    }));

    srv.Get(site + "/elements", wrap([&svc, elements_body](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, elements_body(svc.elements(req.matches[1])));
    }));

    srv.Post(site + "/elements", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const json b = parse_body(req);
        ElementDraft d;
        d.type = constraints::element_type_from_string(field<std::string>(b, "type"));
        d.polygon = ring_of(b.contains("polygon") ? b.at("polygon") : b.value("pixel", json()));
        d.label = b.value("label", std::string{});
        reply(res, 201, element_json(svc.create_element(req.matches[1], std::move(d))));
    }));

    srv.Post(site + "/elements/merge", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const json b = parse_body(req);
        reply(res, 200, element_json(svc.merge_elements(req.matches[1], field<std::vector<std::string>>(b, "ids"))));
    }));

    srv.Get(elem, wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, element_json(svc.element(req.matches[1], req.matches[2])));
    }));

    srv.Delete(elem, wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        svc.delete_element(req.matches[1], req.matches[2]);
        reply(res, 200, {{"deleted", std::string(req.matches[2])}});
    }));

    srv.Post(elem + "/fragment", wrap([&svc, elements_body](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, elements_body(svc.fragment_element(req.matches[1], req.matches[2])));
    }));

    srv.Patch(elem, wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const json b = parse_body(req);
        ElementPatch p;
        if (b.contains("type")) p.type = constraints::element_type_from_string(field<std::string>(b, "type"));
        if (b.contains("label")) p.label = field<std::string>(b, "label");
        if (b.contains("edits")) {
            for (const auto& e : b.at("edits")) {
                constraints::VertexEdit ve;
                ve.kind = edit_kind(field<std::string>(e, "op"));
                const int idx = field<int>(e, "index");
                if (idx < 0) throw BadRequestError("vertex index must be non-negative");
                ve.index = static_cast<std::size_t>(idx);
                if (ve.kind != constraints::EditKind::remove) ve.point = point_of(e.at("point"));
                p.edits.push_back(ve);
            }
        }
        reply(res, 200, element_json(svc.patch_element(req.matches[1], req.matches[2], p)));
    }));

    srv.Get(elem + "/halfspace", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto h = svc.halfspace(req.matches[1], req.matches[2]);
        reply(res, 200, {{"pixel", halfspace_json(h.pixel)}, {"cartesian", halfspace_json(h.cartesian)}});
    }));

    srv.Post(site + "/undo", wrap([&svc, elements_body](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, elements_body(svc.undo(req.matches[1])));
    }));

    srv.Post(site + "/export", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        const auto r = svc.export_site(req.matches[1]);
        json files = json::array();
        for (const auto& f : r.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}});
        reply(res, 200, {{"files", files}, {"job", job_json(r.report)}});
    }));

    srv.Get(site + "/journal", wrap([&svc](const httplib::Request& req, httplib::Response& res) {
        json arr = json::array();
        for (const auto& e : svc.journal(req.matches[1])) arr.push_back(store::journal_entry_to_json(e));
        reply(res, 200, arr);
    }));
}

bool serve(SiteService& svc, const std::string& host, int port, const std::filesystem::path& ui_dir) {
    httplib::Server srv;
    mount_routes(srv, svc);
    if (!ui_dir.empty()) {
        if (!srv.set_mount_point("/ui", ui_dir.string()))
            std::cerr << "warning: UI directory " << ui_dir << " not found; static UI disabled\n";
    }
    std::cerr << "smartscan listening on http://" << host << ":" << port << "\n";
    return srv.listen(host, port);
}

}  // namespace smartscan::http
