#include "smartscan/geo.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "smartscan/error.hpp"

namespace smartscan::geo {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

std::string describe(double lat, double lon) {
    std::ostringstream os;
    os.precision(12);
    os << "(" << lat << ", " << lon << ")";
    return os.str();
}

}  // namespace

GeoPoint GeoPoint::make(double lat, double lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon)) {
        throw GeoRangeError("non-finite coordinate " + describe(lat, lon));
    }
    if (lat < -kMaxLatitude || lat > kMaxLatitude) {
        throw GeoRangeError("latitude outside Mercator-projectable range " + describe(lat, lon));
    }
    double l = std::fmod(lon + 180.0, 360.0);
    if (l < 0.0) l += 360.0;
    l -= 180.0;
    if (l >= 180.0) l = -180.0;
    return GeoPoint{lat, l};
}

double ZoomSpec::world_size() const { return std::ldexp(static_cast<double>(tile_size), zoom); }

WorldPixel latlon_to_world_pixel(const GeoPoint& g, const ZoomSpec& z) {
    const GeoPoint p = GeoPoint::make(g.lat, g.lon);
    const double s = z.world_size();
    const double phi = deg2rad(p.lat);
    const double x = (p.lon + 180.0) / 360.0 * s;
    double y = (1.0 - std::log(std::tan(phi) + 1.0 / std::cos(phi)) / kPi) / 2.0 * s;
    // The rounded latitude bound sits a hair beyond the square world; pin it.
    if (y < 0.0) y = 0.0;
    if (y > s) y = s;
    return WorldPixel{x, y, z.zoom};
}

GeoPoint world_pixel_to_latlon(const WorldPixel& p) {
    const double s = ZoomSpec{p.zoom, kTileSize}.world_size();
    if (!(p.x >= 0.0 && p.x <= s && p.y >= 0.0 && p.y <= s)) {
        std::ostringstream os;
        os.precision(15);
        os << "world pixel (" << p.x << ", " << p.y << ") outside extent at zoom " << p.zoom;
        throw GeoRangeError(os.str());
    }
    double lon = p.x / s * 360.0 - 180.0;
    if (lon >= 180.0) lon -= 360.0;
    const double lat = rad2deg(std::atan(std::sinh(kPi * (1.0 - 2.0 * p.y / s))));
    return GeoPoint{lat, lon};
}

double meters_per_pixel(double lat_deg, const ZoomSpec& z) {
    return std::cos(deg2rad(lat_deg)) * 2.0 * kPi * kEarthRadius / z.world_size();
}

namespace {

void check_site_zoom(const ZoomSpec& z) {
    if (z.zoom < kMinSiteZoom || z.zoom > kMaxSiteZoom) {
        throw ZoomRangeError("zoom " + std::to_string(z.zoom) + " outside supported range [" +
                             std::to_string(kMinSiteZoom) + ", " + std::to_string(kMaxSiteZoom) +
                             "]; " + kZoomGuidance);
    }
    if (z.tile_size != kTileSize) {
        throw ZoomRangeError("tile size must be " + std::to_string(kTileSize));
    }
}

void fill_corners(SiteFrame& f) {
    const double s = f.zoom.world_size();
    auto clamp = [s](double v) { return v < 0.0 ? 0.0 : (v > s ? s : v); };
    const double x0 = f.origin_world.x;
    const double y0 = f.origin_world.y;
    const double e = static_cast<double>(f.extent);
    // x may wrap across the antimeridian; the corner longitude is normalized.
    auto wrap = [s](double v) { return v - std::floor(v / s) * s; };
    f.bottom_left = world_pixel_to_latlon({wrap(x0), clamp(y0 + e), f.zoom.zoom});
    f.top_right = world_pixel_to_latlon({wrap(x0 + e), clamp(y0), f.zoom.zoom});
}

}  // namespace

SiteFrame make_site_frame(const GeoPoint& center, const ZoomSpec& z) {
    check_site_zoom(z);
    const GeoPoint c = GeoPoint::make(center.lat, center.lon);
    const WorldPixel w = latlon_to_world_pixel(c, z);
    SiteFrame f;
    f.center = c;
    f.zoom = z;
    f.origin_world = WorldPixel{w.x - kSiteHalfExtent, w.y - kSiteHalfExtent, z.zoom};
    f.extent = kSiteExtent;
    f.meters_per_pixel = meters_per_pixel(c.lat, z);
    fill_corners(f);
    return f;
}

SiteFrame frame_from_origin(const WorldPixel& origin, const ZoomSpec& z) {
    check_site_zoom(z);
    const double s = z.world_size();
    double cx = origin.x + kSiteHalfExtent;
    cx -= std::floor(cx / s) * s;
    const double cy = origin.y + kSiteHalfExtent;
    SiteFrame f;
    f.center = world_pixel_to_latlon({cx, cy, z.zoom});
    f.zoom = z;
    f.origin_world = WorldPixel{origin.x, origin.y, z.zoom};
    f.extent = kSiteExtent;
    f.meters_per_pixel = meters_per_pixel(f.center.lat, z);
    fill_corners(f);
    return f;
}

ImagePixel world_to_image(const WorldPixel& p, const SiteFrame& f) {
    return ImagePixel{p.x - f.origin_world.x, p.y - f.origin_world.y};
}

WorldPixel image_to_world(const ImagePixel& p, const SiteFrame& f) {
    return WorldPixel{p.x + f.origin_world.x, p.y + f.origin_world.y, f.zoom.zoom};
}

namespace {

void check_in_extent(const ImagePixel& p, const SiteFrame& f) {
    const double e = static_cast<double>(f.extent);
    if (!(p.x >= 0.0 && p.x <= e && p.y >= 0.0 && p.y <= e)) {
        std::ostringstream os;
        os << "image pixel (" << p.x << ", " << p.y << ") outside site extent " << f.extent;
        throw GeoRangeError(os.str());
    }
}

}  // namespace

LocalCartesian pixel_to_local(const ImagePixel& p, const SiteFrame& f) {
    check_in_extent(p, f);
    const double half = f.extent / 2.0;
    return LocalCartesian{(p.x - half) * f.meters_per_pixel, (half - p.y) * f.meters_per_pixel};
}

ImagePixel local_to_pixel(const LocalCartesian& c, const SiteFrame& f) {
    const double half = f.extent / 2.0;
    ImagePixel p{half + c.x_east / f.meters_per_pixel, half - c.y_north / f.meters_per_pixel};
    check_in_extent(p, f);
    return p;
}

}  // namespace smartscan::geo
