#include "smartscan/segbackend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <deque>

#include "smartscan/encoding.hpp"
#include "smartscan/error.hpp"
#include "smartscan/http_util.hpp"
#include "smartscan/image_codec.hpp"
#include "smartscan/parallel.hpp"

namespace smartscan::seg {

using nlohmann::json;

namespace {

std::string cell_label(const prompts::GridIndex& g) {
    return "grid (" + std::to_string(g.row) + "," + std::to_string(g.col) + ")";
}

}  // namespace

void SegmentationRequest::validate() const {
    if (!Rect{0, 0, crop.width(), crop.height()}.contains(box) || box.width() <= 0 || box.height() <= 0) {
        throw BadRequestError(cell_label(grid) + ": box outside crop");
    }
    for (const auto& p : points) {
        if (!box.contains(p.x, p.y)) throw BadRequestError(cell_label(grid) + ": point outside box");
    }
}

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::mock_floodfill: return "mock_floodfill";
        case BackendKind::fixture: return "fixture";
        case BackendKind::remote: return "remote";
    }
    return "mock_floodfill";
}

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "mock_floodfill" || s == "mock") return BackendKind::mock_floodfill;
    if (s == "fixture") return BackendKind::fixture;
    if (s == "remote") return BackendKind::remote;
    throw BadRequestError("unknown backend kind '" + s + "'");
}

void BackendDescriptor::validate() const {
    if (kind == BackendKind::remote && endpoint.empty()) throw BadRequestError("remote backend requires an endpoint");
    if (!(color_tolerance >= 0.0)) throw BadRequestError("color_tolerance must be >= 0");
    if (parallelism < 1) throw BadRequestError("parallelism must be >= 1");
}

SegmentationResponse MockFloodFillBackend::segment(const SegmentationRequest& req) {
    req.validate();
    const int w = req.crop.width(), h = req.crop.height();
    BinaryMask mask(w, h);
    const double tol2 = tolerance_ * tolerance_;
    for (const auto& seed : req.points) {
        if (mask.at(seed.x, seed.y)) continue;
        const Rgb ref = req.crop.at(seed.x, seed.y);
        auto similar = [&](int x, int y) {
            const Rgb c = req.crop.at(x, y);
            double d2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = static_cast<double>(c[k]) - ref[k];
                d2 += d * d;
            }
            return d2 <= tol2;
        };
        std::deque<prompts::Point> queue{seed};
        mask.set(seed.x, seed.y, 1);
        while (!queue.empty()) {
            const auto p = queue.front();
            queue.pop_front();
            static constexpr int kDx[4] = {1, -1, 0, 0};
            static constexpr int kDy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const int nx = p.x + kDx[k], ny = p.y + kDy[k];
                if (!req.box.contains(nx, ny) || mask.at(nx, ny) || !similar(nx, ny)) continue;
                mask.set(nx, ny, 1);
                queue.push_back({nx, ny});
            }
        }
    }
    return {std::move(mask)};
}

void FixtureBackend::add(const std::string& site, const prompts::GridIndex& g, BinaryMask mask) {
    std::lock_guard lock(mu_);
    masks_[{site, g}] = std::move(mask);
}

SegmentationResponse FixtureBackend::segment(const SegmentationRequest& req) {
    {
        std::lock_guard lock(mu_);
        auto it = masks_.find({req.site_id, req.grid});
        if (it != masks_.end()) return {it->second};
    }
    if (!dir_.empty()) {
        const auto path = dir_ / req.site_id /
                          (std::to_string(req.grid.row) + "_" + std::to_string(req.grid.col) + ".png");
        if (std::filesystem::exists(path)) return {codec::decode_mask(codec::read_file(path))};
    }
    throw MissingFixtureError("no fixture mask for site '" + req.site_id + "' " + cell_label(req.grid));
}

RemoteBackend::RemoteBackend(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

std::string RemoteBackend::encode_request(const SegmentationRequest& req) {
    json body;
    body["crop_png_b64"] = encoding::base64_encode(codec::encode_png(req.crop));
    body["box"] = {req.box.x0, req.box.y0, req.box.x1, req.box.y1};
    body["points"] = json::array();
    for (const auto& p : req.points) body["points"].push_back({p.x, p.y});
    return body.dump();
}

BinaryMask RemoteBackend::decode_response(const std::string& body, int width, int height) {
    BinaryMask mask;
    try {
        const json doc = json::parse(body);
        mask = codec::decode_mask(encoding::base64_decode(doc.at("mask_png_b64").get<std::string>()));
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed segmentation response: ") + e.what());
    } catch (const CodecError& e) {
        throw BackendError(std::string("undecodable mask: ") + e.what());
    }
    if (mask.width() != width || mask.height() != height) {
        throw BackendError("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                           ", expected " + std::to_string(width) + "x" + std::to_string(height));
    }
    return mask;
}

SegmentationResponse RemoteBackend::segment(const SegmentationRequest& req) {
    req.validate();
    const auto url = http::split_url(endpoint_ + "/segment");
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post(url.path, encode_request(req), "application/json");
    if (!res) {
        throw BackendError(cell_label(req.grid) + ": backend unreachable at " + endpoint_ + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        throw BackendError(cell_label(req.grid) + ": backend returned HTTP " + std::to_string(res->status) +
                           (res->body.empty() ? "" : ": " + res->body.substr(0, 200)));
    }
    try {
        return {decode_response(res->body, req.crop.width(), req.crop.height())};
    } catch (const BackendError& e) {
        throw BackendError(cell_label(req.grid) + ": " + e.what());
    }
}

std::unique_ptr<SegmentationBackend> make_backend(const BackendDescriptor& d) {
    d.validate();
    switch (d.kind) {
        case BackendKind::mock_floodfill: return std::make_unique<MockFloodFillBackend>(d.color_tolerance);
        case BackendKind::fixture: return std::make_unique<FixtureBackend>(d.fixture_dir);
        case BackendKind::remote: return std::make_unique<RemoteBackend>(d.endpoint, d.timeout);
    }
    throw BadRequestError("unknown backend kind");
}

BinaryMask segment_site(const RgbImage& img, const prompts::PromptSet& ps, SegmentationBackend& backend,
                        int parallelism) {
    if (auto v = prompts::validate(ps); !v.empty()) throw ValidationError(std::move(v));
    std::vector<BinaryMask> masks(ps.boxes.size());
    parallel_for(ps.boxes.size(), static_cast<std::size_t>(std::max(1, parallelism)), [&](std::size_t i) {
        const auto& box = ps.boxes[i];
        const Rect cell = box.rect();
        SegmentationRequest req;
        req.crop = img.crop(cell);
        req.box = Rect{0, 0, cell.width(), cell.height()};
        req.site_id = ps.site_id;
        req.grid = box.grid;
        for (const auto& p : ps.points_in(box.grid)) req.points.push_back({p.x - cell.x0, p.y - cell.y0});
        try {
            auto res = backend.segment(req);
            if (res.mask.width() != cell.width() || res.mask.height() != cell.height()) {
                throw BackendError("mask size does not match crop");
            }
            masks[i] = std::move(res.mask);
        } catch (const MissingFixtureError&) {
            throw;
        } catch (const Error& e) {
            const std::string msg = e.what();
            if (msg.rfind("grid (", 0) == 0) throw BackendError(msg);
            throw BackendError(cell_label(box.grid) + ": " + msg);
        }
    });
    BinaryMask out(img.width(), img.height());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const Rect cell = ps.boxes[i].rect();
        out.or_at(masks[i], cell.x0, cell.y0);
    }
    return out;
}

}  // namespace smartscan::seg
