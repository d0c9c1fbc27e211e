#pragma once

// Spherical Web-Mercator (EPSG:3857 style) transforms between WGS84 lat/lon,
// world-pixel space at a zoom level, image-local pixels, and a site-local
// east/north metric frame centred on the site image.

#include <cstdint>

namespace smartscan::geo {

inline constexpr double kMaxLatitude = 85.05112878;
inline constexpr double kEarthRadius = 6378137.0;
inline constexpr int kTileSize = 512;
inline constexpr int kSiteTiles = 6;
inline constexpr int kSiteExtent = kTileSize * kSiteTiles;  // 3072
inline constexpr double kSiteHalfExtent = kSiteExtent / 2.0;  // 1536
inline constexpr int kMinSiteZoom = 19;
inline constexpr int kMaxSiteZoom = 21;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    /// Validates latitude and normalizes longitude to [-180, 180).
    /// Throws GeoRangeError for non-finite or non-projectable input.
    static GeoPoint make(double lat, double lon);

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct ZoomSpec {
    int zoom = kMinSiteZoom;
    int tile_size = kTileSize;

    /// World extent in pixels, tile_size * 2^zoom.
    double world_size() const;

    friend bool operator==(const ZoomSpec&, const ZoomSpec&) = default;
};

struct WorldPixel {
    double x = 0.0;
    double y = 0.0;
    int zoom = 0;

    friend bool operator==(const WorldPixel&, const WorldPixel&) = default;
};

/// Image-local pixel coordinate (continuous; pixel (i, j) spans [i, i+1)).
struct ImagePixel {
    double x = 0.0;
    double y = 0.0;
};

struct LocalCartesian {
    double x_east = 0.0;
    double y_north = 0.0;
};

struct SiteFrame {
    GeoPoint center;
    ZoomSpec zoom;
    WorldPixel origin_world;  // world pixel of image pixel (0, 0)
    int extent = kSiteExtent;
    double meters_per_pixel = 0.0;
    GeoPoint bottom_left;
    GeoPoint top_right;

    friend bool operator==(const SiteFrame&, const SiteFrame&) = default;
};

WorldPixel latlon_to_world_pixel(const GeoPoint& g, const ZoomSpec& z);
GeoPoint world_pixel_to_latlon(const WorldPixel& p);

/// Ground resolution at `lat_deg`: cos(lat) * 2*pi*R / (tile_size * 2^zoom).
double meters_per_pixel(double lat_deg, const ZoomSpec& z);

/// Frame whose 3072x3072 extent is centred exactly on `center`.
/// Throws ZoomRangeError unless zoom is in [19, 21].
SiteFrame make_site_frame(const GeoPoint& center, const ZoomSpec& z);

/// Frame rebuilt from an explicit world-pixel origin. Center, corner points and
/// meters_per_pixel are recomputed from that origin.
SiteFrame frame_from_origin(const WorldPixel& origin, const ZoomSpec& z);

ImagePixel world_to_image(const WorldPixel& p, const SiteFrame& f);
WorldPixel image_to_world(const ImagePixel& p, const SiteFrame& f);

/// Affine map image pixel -> east/north metres about pixel (1536, 1536).
/// Throws GeoRangeError when `p` lies outside [0, extent]^2.
LocalCartesian pixel_to_local(const ImagePixel& p, const SiteFrame& f);
ImagePixel local_to_pixel(const LocalCartesian& c, const SiteFrame& f);

}  // namespace smartscan::geo
