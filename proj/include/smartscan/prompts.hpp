#pragma once

// Grid prompt model (12x12 cells of 256 px), Gaussian heatmap targets, peak
// extraction, and the two baseline prompt generators.

#include <optional>
#include <string>
#include <vector>

#include "smartscan/raster.hpp"

namespace smartscan::prompts {

inline constexpr int kCellSize = 256;
inline constexpr int kGridCells = 12;

struct GridIndex {
    int row = 0;
    int col = 0;

    bool valid() const { return row >= 0 && row < kGridCells && col >= 0 && col < kGridCells; }

    friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

struct BoxPrompt {
    GridIndex grid;
    Rect rect() const;

    friend bool operator==(const BoxPrompt&, const BoxPrompt&) = default;
};

struct PointPrompt {
    GridIndex grid;
    int x = 0;
    int y = 0;

    friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

enum class Provenance { manual, auto_, baseline_center, baseline_density };

std::string to_string(Provenance p);
/// Throws BadRequestError on unknown names.
Provenance provenance_from_string(const std::string& s);

struct PromptSet {
    std::string site_id;
    std::vector<BoxPrompt> boxes;
    std::vector<PointPrompt> points;
    Provenance provenance = Provenance::manual;

    /// Points whose grid is `g`, in stored order.
    std::vector<PointPrompt> points_in(const GridIndex& g) const;

    friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// (256*col, 256*row, 256*col+256, 256*row+256).
Rect grid_rect(const GridIndex& g);

/// Cell containing image pixel (x, y), if any.
std::optional<GridIndex> cell_of(int x, int y);

inline constexpr const char* kBoxWithoutPoint = "box without point";

/// Every box lacking points, every point outside its cell (or without a box)
/// and every duplicate box. Never throws.
std::vector<std::string> validate(const PromptSet& ps);

/// JSON document {"site","provenance","boxes":[{row,col}],"points":[{row,col,x,y}]}.
std::string to_json(const PromptSet& ps);
/// Throws BadRequestError for malformed documents (validation is separate).
PromptSet from_json(const std::string& text);

struct Point {
    int x = 0;
    int y = 0;

    friend auto operator<=>(const Point&, const Point&) = default;
};

/// Row-major scalar field with values in [0, 1].
struct Heatmap {
    int width = 0;
    int height = 0;
    double sigma = 0.0;
    std::vector<double> values;

    double at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x];
    }
};

/// value(p) = max_q exp(-|p - q|^2 / (2 sigma^2)). Contributions below 1e-15
/// are not evaluated (the Gaussian window is truncated there).
Heatmap render_heatmap(const std::vector<Point>& points, double sigma, int width, int height);

struct PeakParams {
    double threshold = 0.5;
    double min_separation = 8.0;

    /// Throws BadRequestError unless threshold in (0,1) and min_separation >= 1.
    void validate() const;
};

/// Local maxima (>= all 8 neighbours) at or above threshold, sorted by value
/// descending then (y, x) ascending, greedily suppressing candidates within
/// min_separation of an accepted peak. Returned in acceptance order.
std::vector<Point> find_peaks(const Heatmap& h, const PeakParams& p);

/// One point per box at its cell centre.
PromptSet baseline_center(const std::vector<BoxPrompt>& boxes, std::string site_id = {});

/// One point per box at the maximum of the box-summed (radius `radius`)
/// gradient magnitude of the cell's luminance; ties go to the smallest (y, x).
PromptSet baseline_density(const RgbImage& img, const std::vector<BoxPrompt>& boxes,
                           int radius = 8, std::string site_id = {});

/// Gradient-magnitude map used by baseline_density, for one cell.
std::vector<double> cell_gradient_density(const RgbImage& img, const Rect& cell, int radius);

}  // namespace smartscan::prompts
