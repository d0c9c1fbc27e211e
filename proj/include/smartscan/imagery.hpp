#pragma once

// Tile planning, fetching (with an on-disk cache) and stitching of the 6x6
// block of 512x512 tiles that makes up a 3072x3072 site image.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "smartscan/geo.hpp"
#include "smartscan/raster.hpp"

namespace smartscan::imagery {

struct TileKey {
    int zoom = 0;
    int tx = 0;
    int ty = 0;

    std::string str() const;

    friend auto operator<=>(const TileKey&, const TileKey&) = default;
};

/// Exactly 512x512 RGB.
using TileImage = RgbImage;

struct SiteImage {
    RgbImage pixels;  // 3072x3072
    geo::SiteFrame frame;
};

struct TileSourceConfig {
    std::string url_template;  // must contain {z}, {x} and {y}
    std::filesystem::path cache_dir;  // empty disables caching
    int retry_count = 2;
    std::chrono::milliseconds timeout{10000};
    int parallelism = 8;

    /// Throws BadRequestError when a placeholder is missing.
    void validate() const;
};

/// Shifts the frame origin to the nearest tile boundary (and inside the
/// world vertically) so the extent covers whole tiles; center, corners and
/// meters_per_pixel are recomputed for the snapped origin.
geo::SiteFrame snap_to_tile_grid(const geo::SiteFrame& f);

/// 36 keys, row-major (ty outer, tx inner). tx wraps across the antimeridian.
std::vector<TileKey> plan_tiles(const geo::SiteFrame& f);

std::string instantiate_url(const std::string& url_template, const TileKey& k);

/// Cache path for a key: cache_dir/z/x/y.png.
std::filesystem::path cache_path(const std::filesystem::path& cache_dir, const TileKey& k);

/// Thread-safe tile source. Concurrent requests for the same key share one
/// download; completed tiles are served from the cache directory.
class TileFetcher {
public:
    explicit TileFetcher(TileSourceConfig cfg);

    TileImage fetch(const TileKey& k);
    std::vector<TileImage> fetch_all(const std::vector<TileKey>& keys);

    /// Number of HTTP requests issued so far (including retries).
    std::size_t network_requests() const { return requests_.load(); }
    const TileSourceConfig& config() const { return cfg_; }

private:
    TileImage download(const TileKey& k);

    TileSourceConfig cfg_;
    std::mutex mu_;
    std::map<TileKey, std::shared_future<TileImage>> in_flight_;
    std::atomic<std::size_t> requests_{0};
};

TileImage fetch_tile(const TileKey& k, const TileSourceConfig& cfg);

/// Places tile i (row r = i / 6, col c = i % 6) at [512c, 512c+512) x [512r, 512r+512).
/// Throws DimensionMismatchError on wrong count or tile size.
SiteImage stitch(const std::vector<TileImage>& tiles, const geo::SiteFrame& f);

/// snap -> plan -> fetch -> stitch.
SiteImage extract_site_image(const geo::SiteFrame& f, TileFetcher& fetcher);

}  // namespace smartscan::imagery
