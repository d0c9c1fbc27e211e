#pragma once

// Promptable-segmentation backends and per-grid fan-out/assembly.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "smartscan/prompts.hpp"
#include "smartscan/raster.hpp"

namespace smartscan::seg {

struct SegmentationRequest {
    RgbImage crop;                        // 256x256
    Rect box{0, 0, 256, 256};             // crop coordinates
    std::vector<prompts::Point> points;   // crop coordinates
    // Context used for fixture lookup and error reporting; not sent remotely.
    std::string site_id;
    prompts::GridIndex grid;

    /// Throws BadRequestError when the box leaves the crop or a point leaves the box.
    void validate() const;
};

struct SegmentationResponse {
    BinaryMask mask;  // same size as the request crop
};

enum class BackendKind { mock_floodfill, fixture, remote };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

struct BackendDescriptor {
    BackendKind kind = BackendKind::mock_floodfill;
    std::string endpoint;               // remote only
    double color_tolerance = 30.0;      // mock only, Euclidean RGB distance
    std::filesystem::path fixture_dir;  // fixture only: {dir}/{site}/{row}_{col}.png
    int parallelism = 8;
    std::chrono::milliseconds timeout{30000};

    void validate() const;
};

class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;
    /// Must be safe to call concurrently.
    virtual SegmentationResponse segment(const SegmentationRequest& req) = 0;
};

/// Union over seeds of the 4-connected region whose colour lies within
/// `tolerance` of the seed colour, clipped to the box.
class MockFloodFillBackend final : public SegmentationBackend {
public:
    explicit MockFloodFillBackend(double tolerance) : tolerance_(tolerance) {}
    SegmentationResponse segment(const SegmentationRequest& req) override;

private:
    double tolerance_;
};

/// Serves stored masks keyed by (site, grid): in-memory entries first, then
/// {dir}/{site}/{row}_{col}.png.
class FixtureBackend final : public SegmentationBackend {
public:
    explicit FixtureBackend(std::filesystem::path dir = {}) : dir_(std::move(dir)) {}
    void add(const std::string& site, const prompts::GridIndex& g, BinaryMask mask);
    SegmentationResponse segment(const SegmentationRequest& req) override;

private:
    std::filesystem::path dir_;
    std::mutex mu_;
    std::map<std::pair<std::string, prompts::GridIndex>, BinaryMask> masks_;
};

/// POST {endpoint}/segment with {"crop_png_b64","box","points"}; expects
/// {"mask_png_b64"} holding a single-channel PNG of the crop size.
class RemoteBackend final : public SegmentationBackend {
public:
    RemoteBackend(std::string endpoint, std::chrono::milliseconds timeout);
    SegmentationResponse segment(const SegmentationRequest& req) override;

    static std::string encode_request(const SegmentationRequest& req);
    /// Throws BackendError on a malformed body or wrong mask size.
    static BinaryMask decode_response(const std::string& body, int width, int height);

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

std::unique_ptr<SegmentationBackend> make_backend(const BackendDescriptor& d);

/// Crops each prompted cell, queries the backend (bounded parallelism) and
/// ORs the per-cell masks into a full-size mask. Any cell failure aborts
/// with a BackendError naming the cell.
BinaryMask segment_site(const RgbImage& img, const prompts::PromptSet& ps, SegmentationBackend& backend,
                        int parallelism);

}  // namespace smartscan::seg
