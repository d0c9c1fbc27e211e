#include "smartscan/config.hpp"

#include <json.hpp>

#include <cstdlib>

#include "smartscan/error.hpp"
#include "smartscan/image_codec.hpp"

namespace smartscan {

using nlohmann::json;

ServiceConfig config_from_json(const std::string& text) {
    ServiceConfig cfg;
    try {
        const json j = json::parse(text);
        cfg.data_root = j.value("data_root", cfg.data_root.string());
        cfg.tiles.url_template = j.value("tile_url_template", cfg.tiles.url_template);
        cfg.tiles.cache_dir = j.value("tile_cache_dir", std::string{});
        cfg.tiles.retry_count = j.value("tile_retry_count", cfg.tiles.retry_count);
        cfg.tiles.timeout = std::chrono::milliseconds(j.value("tile_timeout_ms", cfg.tiles.timeout.count()));
        const int parallelism = j.value("parallelism", cfg.tiles.parallelism);
        cfg.tiles.parallelism = parallelism;
        cfg.backend.parallelism = parallelism;
        if (j.contains("backend")) {
            const json& b = j.at("backend");
            cfg.backend.kind = seg::backend_kind_from_string(b.value("kind", std::string{"mock_floodfill"}));
            cfg.backend.endpoint = b.value("endpoint", std::string{});
            cfg.backend.color_tolerance = b.value("color_tolerance", cfg.backend.color_tolerance);
            cfg.backend.fixture_dir = b.value("fixture_dir", std::string{});
            cfg.backend.timeout = std::chrono::milliseconds(b.value("timeout_ms", cfg.backend.timeout.count()));
        }
        cfg.sidecar_endpoint = j.value("sidecar_endpoint", std::string{});
        cfg.ui_dir = j.value("ui_dir", std::string{});
        cfg.host = j.value("host", cfg.host);
        cfg.port = j.value("port", cfg.port);
        if (j.contains("postprocess")) {
            const json& p = j.at("postprocess");
            auto& pp = cfg.postprocess;
            pp.crf_iterations = p.value("crf_iterations", pp.crf_iterations);
            pp.crf_unary_confidence = p.value("crf_unary_confidence", pp.crf_unary_confidence);
            pp.crf_pairwise_weight = p.value("crf_pairwise_weight", pp.crf_pairwise_weight);
            pp.min_area = p.value("min_area", pp.min_area);
            pp.deadspace_tau = p.value("deadspace_tau", pp.deadspace_tau);
            pp.max_split_depth = p.value("max_split_depth", pp.max_split_depth);
            pp.rdp_epsilon = p.value("rdp_epsilon", pp.rdp_epsilon);
        }
        if (j.contains("peaks")) {
            cfg.peaks.threshold = j.at("peaks").value("threshold", cfg.peaks.threshold);
            cfg.peaks.min_separation = j.at("peaks").value("min_separation", cfg.peaks.min_separation);
        }
        cfg.density_radius = j.value("density_radius", cfg.density_radius);
    } catch (const json::exception& e) {
        throw BadRequestError(std::string("malformed config: ") + e.what());
    }
    return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) { return config_from_json(codec::read_text(path)); }

void apply_env_overrides(ServiceConfig& cfg) {
    auto env = [](const char* name) -> const char* {
        const char* v = std::getenv(name);
        return (v && *v) ? v : nullptr;
    };
    if (const char* v = env("SMARTSCAN_DATA_ROOT")) cfg.data_root = v;
    if (const char* v = env("SMARTSCAN_TILE_TEMPLATE")) cfg.tiles.url_template = v;
    if (const char* v = env("SMARTSCAN_BACKEND")) cfg.backend.kind = seg::backend_kind_from_string(v);
    if (const char* v = env("SMARTSCAN_BACKEND_ENDPOINT")) cfg.backend.endpoint = v;
    if (const char* v = env("SMARTSCAN_SIDECAR")) cfg.sidecar_endpoint = v;
    if (const char* v = env("SMARTSCAN_PARALLELISM")) {
        const int p = std::atoi(v);
        if (p < 1) throw BadRequestError("SMARTSCAN_PARALLELISM must be a positive integer");
        cfg.tiles.parallelism = p;
        cfg.backend.parallelism = p;
    }
    if (const char* v = env("SMARTSCAN_PORT")) cfg.port = std::atoi(v);
}

}  // namespace smartscan
