// smartscan: headless site run and HTTP server.
//
//   smartscan run --lat 29.76 --lon -95.37 --zoom 20 --prompts p.json --backend mock --out sites/
//   smartscan serve --config smartscan.json

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "smartscan/config.hpp"
#include "smartscan/error.hpp"
#include "smartscan/geo.hpp"
#include "smartscan/http_api.hpp"
#include "smartscan/image_codec.hpp"
#include "smartscan/service.hpp"

namespace fs = std::filesystem;
using namespace smartscan;

namespace {

constexpr int kUsageExit = 2;

void print_error(const Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
    if (const auto* v = dynamic_cast<const ValidationError*>(&e))
        for (const auto& m : v->violations()) std::cerr << "  - " << m << "\n";
}

void print_job(const JobReport& j) {
    for (const auto& m : j.messages) std::cerr << "[" << j.kind << "] " << m << "\n";
}

struct RunArgs {
    double lat = 0, lon = 0;
    int zoom = 0;
    std::string prompts, backend = "mock", out, name = "site", tile_url, endpoint, config;
    double tolerance = -1;
};

int run(const RunArgs& a) {
    if (a.zoom < geo::kMinSiteZoom || a.zoom > geo::kMaxSiteZoom) {
        std::cerr << "error (zoom_range): zoom " << a.zoom << " outside [" << geo::kMinSiteZoom << ", " << geo::kMaxSiteZoom
                  << "]; " << kZoomGuidance << "\n";
        return kUsageExit;
    }
    if (!fs::is_regular_file(a.prompts)) {
        std::cerr << "error: prompts file not found: " << a.prompts << "\n";
        return kUsageExit;
    }
    try {
        ServiceConfig cfg = a.config.empty() ? ServiceConfig{} : load_config(a.config);
        apply_env_overrides(cfg);
        cfg.data_root = a.out;
        if (!a.tile_url.empty()) cfg.tiles.url_template = a.tile_url;
        cfg.backend.kind = seg::backend_kind_from_string(a.backend);
        if (!a.endpoint.empty()) cfg.backend.endpoint = a.endpoint;
        if (a.tolerance >= 0) cfg.backend.color_tolerance = a.tolerance;

        SiteService svc(cfg);
        JobReport job;
        SiteRecord site;
        try {
            site = svc.create_site(a.name, a.lat, a.lon, a.zoom, &job);
        } catch (const Error&) {
            print_job(job);
            throw;
        }
        print_job(job);
        svc.put_prompts(site.id, prompts::from_json(codec::read_text(a.prompts)));
        const auto ex = svc.extract(site.id);
        print_job(ex.report);

        const auto els = svc.elements(site.id);
        const bool has_bounds = std::any_of(els.begin(), els.end(), [](const constraints::SiteElement& e) {
            return e.type == constraints::ElementType::site_bounds;
        });
        if (!has_bounds) {
            const double s = site.frame.extent;
            svc.create_element(site.id, {constraints::ElementType::site_bounds, {{0, 0}, {s, 0}, {s, s}, {0, s}},
                                         "image extent"});
        }
        const auto exp = svc.export_site(site.id);
        print_job(exp.report);
        for (const auto& f : exp.files) std::cout << f.sha256 << "  " << f.path.string() << "\n";
        return 0;
    } catch (const ZoomRangeError& e) {
        print_error(e);
        return kUsageExit;
    } catch (const Error& e) {
        print_error(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int serve(const std::string& config_path, int port, const std::string& data_root) {
    try {
        ServiceConfig cfg = config_path.empty() ? ServiceConfig{} : load_config(config_path);
        apply_env_overrides(cfg);
        if (port > 0) cfg.port = port;
        if (!data_root.empty()) cfg.data_root = data_root;
        SiteService svc(cfg);
        return http::serve(svc, cfg.host, cfg.port, cfg.ui_dir) ? 0 : 1;
    } catch (const Error& e) {
        print_error(e);
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smartscan: facility constraint extraction from satellite imagery"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "create a site, apply prompts, extract and export");
    run_cmd->add_option("--lat", ra.lat, "site center latitude")->required();
    run_cmd->add_option("--lon", ra.lon, "site center longitude")->required();
    run_cmd->add_option("--zoom", ra.zoom, "tile zoom level (19-21)")->required();
    run_cmd->add_option("--prompts", ra.prompts, "prompt set JSON file")->required();
    run_cmd->add_option("--backend", ra.backend, "segmentation backend")
        ->check(CLI::IsMember({"mock", "mock_floodfill", "fixture", "remote"}));
    run_cmd->add_option("--out", ra.out, "data root; the site folder is created inside")->required();
    run_cmd->add_option("--name", ra.name, "site name");
    run_cmd->add_option("--tile-url", ra.tile_url, "tile URL template with {z}, {x}, {y}");
    run_cmd->add_option("--endpoint", ra.endpoint, "remote segmentation endpoint");
    run_cmd->add_option("--tolerance", ra.tolerance, "mock flood-fill colour tolerance");
    run_cmd->add_option("--config", ra.config, "JSON config file");

    std::string config_path, data_root;
    int port = 0;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--config", config_path, "JSON config file");
    serve_cmd->add_option("--port", port, "listen port (overrides config)");
    serve_cmd->add_option("--data-root", data_root, "site folder root (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageExit;
    }
    if (*run_cmd) return run(ra);
    return serve(config_path, port, data_root);
}
