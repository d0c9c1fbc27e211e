#pragma once

// Loopback HTTP fixtures and synthetic imagery shared by the unit tests and
// the acceptance binary.

#include <httplib.h>

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <tuple>

#include "smartscan/raster.hpp"

namespace fixtures {

/// httplib::Server listening on an ephemeral loopback port in a background thread.
class LoopbackServer {
public:
    LoopbackServer() = default;
    ~LoopbackServer();
    LoopbackServer(const LoopbackServer&) = delete;
    LoopbackServer& operator=(const LoopbackServer&) = delete;

    httplib::Server& server() { return srv_; }
    /// Binds and starts serving; routes must be registered first.
    void start();
    void stop();
    int port() const { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server srv_;
    std::thread thread_;
    int port_ = 0;
};

using Scene = std::function<smartscan::Rgb(std::int64_t wx, std::int64_t wy)>;

/// Encodes the world pixel in the colour: low 8 bits of x and y in R and G,
/// bits 8-10 of x and y plus bit 11 of each in B. Unique over any 4096^2
/// window, so a misplaced tile or pixel always shows.
smartscan::Rgb coordinate_color(std::int64_t wx, std::int64_t wy);

/// Scene showing `img` with its pixel (0, 0) at world pixel (ox, oy) and
/// `fill` everywhere else.
Scene image_scene(smartscan::RgbImage img, std::int64_t ox, std::int64_t oy, smartscan::Rgb fill = {0, 0, 0});

/// Serves GET /{z}/{x}/{y}.png from a scene over world pixels.
class TileServer {
public:
    explicit TileServer(Scene scene = coordinate_color);

    std::string url_template() const { return server_.url() + "/{z}/{x}/{y}.png"; }
    std::size_t requests() const { return requests_.load(); }
    /// Tiles answering with `status` instead of an image.
    void fail(int z, int x, int y, int status);
    /// Tiles answering 200 with a non-image body.
    void corrupt(int z, int x, int y);
    /// Every request answers `status` (0 disables).
    void fail_all(int status) { fail_all_ = status; }

private:
    LoopbackServer server_;
    Scene scene_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<int> fail_all_{0};
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, int> failures_;
    std::set<std::tuple<int, int, int>> corrupt_;
};

/// POST /segment honouring the remote wire protocol with a pluggable mask
/// function, and POST /auto_prompts returning a canned document.
class SidecarServer {
public:
    using MaskFn = std::function<smartscan::BinaryMask(const smartscan::RgbImage& crop, const nlohmann::json& req)>;

    SidecarServer();

    std::string url() const { return server_.url(); }
    void set_mask_fn(MaskFn fn);
    void set_auto_prompts(nlohmann::json doc);
    void set_segment_status(int status) { segment_status_ = status; }
    std::size_t segment_calls() const { return segment_calls_.load(); }
    nlohmann::json last_segment_request();

private:
    LoopbackServer server_;
    std::mutex mu_;
    MaskFn mask_fn_;
    nlohmann::json auto_doc_;
    nlohmann::json last_req_;
    std::atomic<int> segment_status_{200};
    std::atomic<std::size_t> segment_calls_{0};
};

/// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
