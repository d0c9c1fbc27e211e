#include "smartscan/imagery.hpp"

#include <httplib.h>

#include <cmath>

#include "smartscan/error.hpp"
#include "smartscan/http_util.hpp"
#include "smartscan/image_codec.hpp"
#include "smartscan/parallel.hpp"

namespace smartscan {

namespace http {

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw BadRequestError("URL without scheme: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw BadRequestError("unsupported URL scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace http

namespace imagery {

std::string TileKey::str() const {
    return "z" + std::to_string(zoom) + "/x" + std::to_string(tx) + "/y" + std::to_string(ty);
}

void TileSourceConfig::validate() const {
    for (const char* ph : {"{z}", "{x}", "{y}"}) {
        if (url_template.find(ph) == std::string::npos) {
            throw BadRequestError(std::string("tile url template lacks placeholder ") + ph);
        }
    }
    if (retry_count < 0) throw BadRequestError("retry_count must be >= 0");
    if (parallelism < 1) throw BadRequestError("parallelism must be >= 1");
}

geo::SiteFrame snap_to_tile_grid(const geo::SiteFrame& f) {
    const double tile = geo::kTileSize;
    const double s = f.zoom.world_size();
    double x = std::round(f.origin_world.x / tile) * tile;
    double y = std::round(f.origin_world.y / tile) * tile;
    y = std::clamp(y, 0.0, s - geo::kSiteExtent);
    x -= std::floor(x / s) * s;
    return geo::frame_from_origin({x, y, f.zoom.zoom}, f.zoom);
}

std::vector<TileKey> plan_tiles(const geo::SiteFrame& f) {
    const long long n = 1LL << f.zoom.zoom;
    const long long tx0 = std::llround(f.origin_world.x / geo::kTileSize);
    const long long ty0 = std::llround(f.origin_world.y / geo::kTileSize);
    std::vector<TileKey> keys;
    keys.reserve(geo::kSiteTiles * geo::kSiteTiles);
    for (int r = 0; r < geo::kSiteTiles; ++r) {
        for (int c = 0; c < geo::kSiteTiles; ++c) {
            long long tx = (tx0 + c) % n;
            if (tx < 0) tx += n;
            const long long ty = std::clamp<long long>(ty0 + r, 0, n - 1);
            keys.push_back({f.zoom.zoom, static_cast<int>(tx), static_cast<int>(ty)});
        }
    }
    return keys;
}

std::string instantiate_url(const std::string& url_template, const TileKey& k) {
    std::string out = url_template;
    auto replace = [&out](const std::string& ph, int v) {
        for (auto pos = out.find(ph); pos != std::string::npos; pos = out.find(ph, pos)) {
            out.replace(pos, ph.size(), std::to_string(v));
        }
    };
    replace("{z}", k.zoom);
    replace("{x}", k.tx);
    replace("{y}", k.ty);
    return out;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const TileKey& k) {
    return cache_dir / std::to_string(k.zoom) / std::to_string(k.tx) / (std::to_string(k.ty) + ".png");
}

namespace {

TileImage checked_tile(std::span<const std::uint8_t> bytes, const TileKey& k) {
    TileImage tile;
    try {
        tile = codec::decode_rgb(bytes);
    } catch (const CodecError& e) {
        throw MalformedTileError("tile " + k.str() + " could not be decoded (" + e.what() + "); " +
                                 kZoomGuidance);
    }
    if (tile.width() != geo::kTileSize || tile.height() != geo::kTileSize) {
        throw MalformedTileError("tile " + k.str() + " is " + std::to_string(tile.width()) + "x" +
                                 std::to_string(tile.height()) + ", expected 512x512; " + kZoomGuidance);
    }
    return tile;
}

}  // namespace

TileFetcher::TileFetcher(TileSourceConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

TileImage TileFetcher::fetch(const TileKey& k) {
    if (!cfg_.cache_dir.empty()) {
        const auto path = cache_path(cfg_.cache_dir, k);
        if (std::filesystem::exists(path)) return checked_tile(codec::read_file(path), k);
    }
    std::shared_future<TileImage> shared;
    bool owner = false;
    std::promise<TileImage> promise;
    {
        std::lock_guard lock(mu_);
        auto it = in_flight_.find(k);
        if (it != in_flight_.end()) {
            shared = it->second;
        } else {
            shared = promise.get_future().share();
            in_flight_.emplace(k, shared);
            owner = true;
        }
    }
    if (owner) {
        try {
            promise.set_value(download(k));
        } catch (...) {
            promise.set_exception(std::current_exception());
        }
        std::lock_guard lock(mu_);
        in_flight_.erase(k);
    }
    return shared.get();
}

TileImage TileFetcher::download(const TileKey& k) {
    const auto url = http::split_url(instantiate_url(cfg_.url_template, k));
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retry_count; ++attempt) {
        httplib::Client client(url.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_follow_location(true);
        ++requests_;
        auto res = client.Get(url.path);
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw FetchError("tile " + k.str() + " fetch failed: HTTP " + std::to_string(res->status) +
                             "; " + kZoomGuidance);
        }
        const auto* data = reinterpret_cast<const std::uint8_t*>(res->body.data());
        TileImage tile = checked_tile(std::span(data, res->body.size()), k);
        if (!cfg_.cache_dir.empty()) {
            codec::write_file(cache_path(cfg_.cache_dir, k), codec::encode_png(tile));
        }
        return tile;
    }
    throw FetchError("tile " + k.str() + " fetch failed after " + std::to_string(cfg_.retry_count + 1) +
                     " attempts (" + last_error + "); " + kZoomGuidance);
}

std::vector<TileImage> TileFetcher::fetch_all(const std::vector<TileKey>& keys) {
    std::vector<TileImage> tiles(keys.size());
    parallel_for(keys.size(), static_cast<std::size_t>(cfg_.parallelism),
                 [&](std::size_t i) { tiles[i] = fetch(keys[i]); });
    return tiles;
}

TileImage fetch_tile(const TileKey& k, const TileSourceConfig& cfg) {
    TileFetcher fetcher(cfg);
    return fetcher.fetch(k);
}

SiteImage stitch(const std::vector<TileImage>& tiles, const geo::SiteFrame& f) {
    constexpr std::size_t kCount = geo::kSiteTiles * geo::kSiteTiles;
    if (tiles.size() != kCount) {
        throw DimensionMismatchError("stitch needs " + std::to_string(kCount) + " tiles, got " +
                                     std::to_string(tiles.size()));
    }
    SiteImage out{RgbImage(geo::kSiteExtent, geo::kSiteExtent), f};
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const auto& t = tiles[i];
        if (t.width() != geo::kTileSize || t.height() != geo::kTileSize) {
            throw DimensionMismatchError("tile " + std::to_string(i) + " is " + std::to_string(t.width()) +
                                         "x" + std::to_string(t.height()) + ", expected 512x512");
        }
        const int r = static_cast<int>(i) / geo::kSiteTiles;
        const int c = static_cast<int>(i) % geo::kSiteTiles;
        out.pixels.paste(t, c * geo::kTileSize, r * geo::kTileSize);
    }
    return out;
}

SiteImage extract_site_image(const geo::SiteFrame& f, TileFetcher& fetcher) {
    const geo::SiteFrame snapped = snap_to_tile_grid(f);
    return stitch(fetcher.fetch_all(plan_tiles(snapped)), snapped);
}

}  // namespace imagery
}  // namespace smartscan
