#include "fixtures.hpp"

#include <memory>
#include <random>

#include "smartscan/encoding.hpp"
#include "smartscan/image_codec.hpp"

namespace fixtures {

using nlohmann::json;
using smartscan::BinaryMask;
using smartscan::Rgb;
using smartscan::RgbImage;

LoopbackServer::~LoopbackServer() { stop(); }

void LoopbackServer::start() {
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
}

void LoopbackServer::stop() {
    if (thread_.joinable()) {
        srv_.stop();
        thread_.join();
    }
}

Rgb coordinate_color(std::int64_t wx, std::int64_t wy) {
    const auto r = static_cast<std::uint8_t>(wx & 0xFF);
    const auto g = static_cast<std::uint8_t>(wy & 0xFF);
    const auto b = static_cast<std::uint8_t>(((wx >> 8) & 7) | (((wy >> 8) & 7) << 3) | (((wx >> 11) & 1) << 6) |
                                             (((wy >> 11) & 1) << 7));
    return {r, g, b};
}

Scene image_scene(smartscan::RgbImage img, std::int64_t ox, std::int64_t oy, smartscan::Rgb fill) {
    auto shared = std::make_shared<const smartscan::RgbImage>(std::move(img));
    return [shared, ox, oy, fill](std::int64_t wx, std::int64_t wy) {
        const std::int64_t x = wx - ox, y = wy - oy;
        if (x < 0 || y < 0 || x >= shared->width() || y >= shared->height()) return fill;
        return shared->at(static_cast<int>(x), static_cast<int>(y));
    };
}

TileServer::TileServer(Scene scene) : scene_(std::move(scene)) {
    server_.server().Get(R"(/(\d+)/(\d+)/(\d+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        const int z = std::stoi(req.matches[1]), x = std::stoi(req.matches[2]), y = std::stoi(req.matches[3]);
        if (const int s = fail_all_.load()) {
            res.status = s;
            return;
        }
        {
            std::lock_guard lk(mu_);
            if (auto it = failures_.find({z, x, y}); it != failures_.end()) {
                res.status = it->second;
                return;
            }
            if (corrupt_.count({z, x, y})) {
                res.set_content("this is not an image", "image/png");
                return;
            }
        }
        RgbImage tile(512, 512);
        for (int v = 0; v < 512; ++v)
            for (int u = 0; u < 512; ++u)
                tile.set(u, v, scene_(static_cast<std::int64_t>(x) * 512 + u, static_cast<std::int64_t>(y) * 512 + v));
        const auto png = smartscan::codec::encode_png(tile);
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
    server_.start();
}

void TileServer::fail(int z, int x, int y, int status) {
    std::lock_guard lk(mu_);
    failures_[{z, x, y}] = status;
}

void TileServer::corrupt(int z, int x, int y) {
    std::lock_guard lk(mu_);
    corrupt_.insert({z, x, y});
}

SidecarServer::SidecarServer() {
    // Default: echo the box region as foreground.
    mask_fn_ = [](const RgbImage& crop, const json& req) {
        BinaryMask m(crop.width(), crop.height());
        const auto& b = req.at("box");
        for (int y = b[1].get<int>(); y < b[3].get<int>(); ++y)
            for (int x = b[0].get<int>(); x < b[2].get<int>(); ++x) m.set(x, y, 1);
        return m;
    };
    server_.server().Post("/segment", [this](const httplib::Request& req, httplib::Response& res) {
        ++segment_calls_;
        if (segment_status_ != 200) {
            res.status = segment_status_;
            res.set_content(R"({"error":"fixture failure"})", "application/json");
            return;
        }
        json body;
        MaskFn fn;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 422;
            return;
        }
        {
            std::lock_guard lk(mu_);
            last_req_ = body;
            fn = mask_fn_;
        }
        const auto bytes = smartscan::encoding::base64_decode(body.at("crop_png_b64").get<std::string>());
        const RgbImage crop = smartscan::codec::decode_rgb(bytes);
        const BinaryMask mask = fn(crop, body);
        const auto png = smartscan::codec::encode_mask_png(mask);
        res.set_content(json{{"mask_png_b64", smartscan::encoding::base64_encode(png)}}.dump(), "application/json");
    });
    server_.server().Post("/auto_prompts", [this](const httplib::Request& req, httplib::Response& res) {
        json doc;
        {
            std::lock_guard lk(mu_);
            doc = auto_doc_;
        }
        if (doc.is_null()) {
            res.status = 503;
            return;
        }
        if (!json::parse(req.body).contains("image_png_b64")) {
            res.status = 422;
            return;
        }
        res.set_content(doc.dump(), "application/json");
    });
    server_.start();
}

void SidecarServer::set_mask_fn(MaskFn fn) {
    std::lock_guard lk(mu_);
    mask_fn_ = std::move(fn);
}

void SidecarServer::set_auto_prompts(json doc) {
    std::lock_guard lk(mu_);
    auto_doc_ = std::move(doc);
}

json SidecarServer::last_segment_request() {
    std::lock_guard lk(mu_);
    return last_req_;
}

TempDir::TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
        path_ = base / ("smartscan-test-" + std::to_string(rd()));
        if (std::filesystem::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
