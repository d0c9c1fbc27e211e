#include "smartscan/image_codec.hpp"

#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <jpeglib.h>

#include "smartscan/error.hpp"

namespace smartscan::codec {

namespace {

std::vector<std::uint8_t> write_png_memory(int width, int height, png_uint_32 format,
                                           const std::uint8_t* data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
        throw CodecError(std::string("png size query failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
        throw CodecError(std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

DecodedImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw CodecError(std::string("png header: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    DecodedImage out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = color ? 3 : 1;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    // Composite any alpha onto black so the result is deterministic.
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, out.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw CodecError(std::string("png decode: ") + image.message);
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

DecodedImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    DecodedImage out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw CodecError(std::string("jpeg decode: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out.width = static_cast<int>(cinfo.output_width);
    out.height = static_cast<int>(cinfo.output_height);
    out.channels = cinfo.output_components;
    const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
    out.pixels.resize(stride * out.height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.pixels.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    return write_png_memory(img.width(), img.height(), PNG_FORMAT_RGB, img.bytes().data());
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
    std::vector<std::uint8_t> gray(mask.values().size());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.values()[i] ? 255 : 0;
    return write_png_memory(mask.width(), mask.height(), PNG_FORMAT_GRAY, gray.data());
}

std::vector<std::uint8_t> encode_gray_png(int width, int height, std::span<const std::uint8_t> gray) {
    if (gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DimensionMismatchError("gray buffer size does not match dimensions");
    }
    return write_png_memory(width, height, PNG_FORMAT_GRAY, gray.data());
}

DecodedImage decode(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
        return decode_jpeg(bytes);
    }
    throw CodecError("unrecognized image format");
}

RgbImage decode_rgb(std::span<const std::uint8_t> bytes) {
    DecodedImage d = decode(bytes);
    RgbImage out(d.width, d.height);
    if (d.channels == 3) {
        out.bytes() = std::move(d.pixels);
        return out;
    }
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const std::uint8_t g = d.pixels[static_cast<std::size_t>(y) * d.width + x];
            out.set(x, y, {g, g, g});
        }
    }
    return out;
}

BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
    const DecodedImage d = decode(bytes);
    BinaryMask out(d.width, d.height);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * d.width + x) * d.channels;
            out.set(x, y, d.pixels[i] >= 128 ? 1 : 0);
        }
    }
    return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(rng());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace smartscan::codec
