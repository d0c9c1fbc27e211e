#include "smartscan/raster.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "smartscan/error.hpp"

namespace smartscan {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    if (width < 0 || height < 0) throw DimensionMismatchError("negative image size");
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill[0];
        data_[i + 1] = fill[1];
        data_[i + 2] = fill[2];
    }
}

RgbImage RgbImage::crop(const Rect& r) const {
    if (!Rect{0, 0, width_, height_}.contains(r) || r.width() < 0 || r.height() < 0) {
        throw DimensionMismatchError("crop rectangle outside image");
    }
    RgbImage out(r.width(), r.height());
    const std::size_t row_bytes = static_cast<std::size_t>(r.width()) * 3;
    for (int y = 0; y < r.height(); ++y) {
        std::copy_n(&data_[index(r.x0, r.y0 + y)], row_bytes, &out.data_[out.index(0, y)]);
    }
    return out;
}

void RgbImage::paste(const RgbImage& src, int x, int y) {
    if (!Rect{0, 0, width_, height_}.contains(Rect{x, y, x + src.width(), y + src.height()})) {
        throw DimensionMismatchError("paste target outside image");
    }
    const std::size_t row_bytes = static_cast<std::size_t>(src.width()) * 3;
    for (int v = 0; v < src.height(); ++v) {
        std::copy_n(&src.data_[src.index(0, v)], row_bytes, &data_[index(x, y + v)]);
    }
}

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0) {
    if (width < 0 || height < 0) throw DimensionMismatchError("negative mask size");
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

void BinaryMask::or_at(const BinaryMask& src, int x, int y) {
    if (!Rect{0, 0, width_, height_}.contains(Rect{x, y, x + src.width(), y + src.height()})) {
        throw DimensionMismatchError("mask placement outside target");
    }
    for (int v = 0; v < src.height(); ++v) {
        for (int u = 0; u < src.width(); ++u) {
            data_[index(x + u, y + v)] |= src.at(u, v);
        }
    }
}

}  // namespace smartscan
