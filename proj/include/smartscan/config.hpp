#pragma once

#include <filesystem>
#include <string>

#include "smartscan/imagery.hpp"
#include "smartscan/postprocess.hpp"
#include "smartscan/prompts.hpp"
#include "smartscan/segbackend.hpp"

namespace smartscan {

struct ServiceConfig {
    std::filesystem::path data_root = "sites";
    imagery::TileSourceConfig tiles;  // empty cache_dir -> {site}/tiles
    seg::BackendDescriptor backend;
    std::string sidecar_endpoint;     // serves /auto_prompts; empty disables auto mode
    std::chrono::milliseconds sidecar_timeout{60000};
    post::PostprocessParams postprocess;
    prompts::PeakParams peaks;
    int density_radius = 8;
    std::filesystem::path ui_dir;     // static bundle, optional
    std::string host = "127.0.0.1";
    int port = 8080;
};

/// Reads a JSON config file. Keys mirror the struct:
/// {"data_root", "tile_url_template", "tile_cache_dir", "tile_retry_count",
///  "tile_timeout_ms", "parallelism", "backend": {"kind", "endpoint",
///  "color_tolerance", "fixture_dir", "timeout_ms"}, "sidecar_endpoint",
///  "ui_dir", "host", "port", "postprocess": {...}, "peaks": {...}}.
ServiceConfig load_config(const std::filesystem::path& path);
ServiceConfig config_from_json(const std::string& text);

/// SMARTSCAN_DATA_ROOT, SMARTSCAN_TILE_TEMPLATE, SMARTSCAN_BACKEND,
/// SMARTSCAN_BACKEND_ENDPOINT, SMARTSCAN_SIDECAR, SMARTSCAN_PARALLELISM,
/// SMARTSCAN_PORT override the corresponding settings.
void apply_env_overrides(ServiceConfig& cfg);

}  // namespace smartscan
