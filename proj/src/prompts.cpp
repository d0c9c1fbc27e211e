#include "smartscan/prompts.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "smartscan/error.hpp"

namespace smartscan::prompts {

using nlohmann::json;

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::manual: return "manual";
        case Provenance::auto_: return "auto";
        case Provenance::baseline_center: return "baseline_center";
        case Provenance::baseline_density: return "baseline_density";
    }
    return "manual";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "manual") return Provenance::manual;
    if (s == "auto") return Provenance::auto_;
    if (s == "baseline_center") return Provenance::baseline_center;
    if (s == "baseline_density") return Provenance::baseline_density;
    throw BadRequestError("unknown provenance '" + s + "'");
}

Rect grid_rect(const GridIndex& g) {
    const int x0 = kCellSize * g.col;
    const int y0 = kCellSize * g.row;
    return Rect{x0, y0, x0 + kCellSize, y0 + kCellSize};
}

Rect BoxPrompt::rect() const { return grid_rect(grid); }

std::optional<GridIndex> cell_of(int x, int y) {
    const int extent = kCellSize * kGridCells;
    if (x < 0 || y < 0 || x >= extent || y >= extent) return std::nullopt;
    return GridIndex{y / kCellSize, x / kCellSize};
}

std::vector<PointPrompt> PromptSet::points_in(const GridIndex& g) const {
    std::vector<PointPrompt> out;
    for (const auto& p : points) {
        if (p.grid == g) out.push_back(p);
    }
    return out;
}

namespace {

std::string cell_name(const GridIndex& g) {
    return "(" + std::to_string(g.row) + "," + std::to_string(g.col) + ")";
}

}  // namespace

std::vector<std::string> validate(const PromptSet& ps) {
    std::vector<std::string> out;
    std::set<GridIndex> seen;
    for (const auto& b : ps.boxes) {
        if (!b.grid.valid()) {
            out.push_back("box " + cell_name(b.grid) + " outside the 12x12 grid");
            continue;
        }
        if (!seen.insert(b.grid).second) out.push_back("duplicate box " + cell_name(b.grid));
    }
    for (const auto& g : seen) {
        const bool has_point = std::any_of(ps.points.begin(), ps.points.end(),
                                           [&](const PointPrompt& p) { return p.grid == g; });
        if (!has_point) out.push_back(std::string(kBoxWithoutPoint) + " " + cell_name(g));
    }
    for (const auto& p : ps.points) {
        const std::string where = "point (" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
        if (!p.grid.valid() || !grid_rect(p.grid).contains(p.x, p.y)) {
            out.push_back(where + " outside its cell " + cell_name(p.grid));
        } else if (!seen.contains(p.grid)) {
            out.push_back(where + " in cell " + cell_name(p.grid) + " without a box");
        }
    }
    return out;
}

std::string to_json(const PromptSet& ps) {
    json doc;
    doc["site"] = ps.site_id;
    doc["provenance"] = to_string(ps.provenance);
    doc["boxes"] = json::array();
    for (const auto& b : ps.boxes) doc["boxes"].push_back({{"row", b.grid.row}, {"col", b.grid.col}});
    doc["points"] = json::array();
    for (const auto& p : ps.points) {
        doc["points"].push_back({{"row", p.grid.row}, {"col", p.grid.col}, {"x", p.x}, {"y", p.y}});
    }
    return doc.dump(2);
}

PromptSet from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        PromptSet ps;
        ps.site_id = doc.value("site", std::string{});
        ps.provenance = provenance_from_string(doc.value("provenance", std::string{"manual"}));
        for (const auto& b : doc.at("boxes")) {
            ps.boxes.push_back({{b.at("row").get<int>(), b.at("col").get<int>()}});
        }
        for (const auto& p : doc.at("points")) {
            ps.points.push_back({{p.at("row").get<int>(), p.at("col").get<int>()},
                                 p.at("x").get<int>(), p.at("y").get<int>()});
        }
        return ps;
    } catch (const json::exception& e) {
        throw BadRequestError(std::string("malformed prompt document: ") + e.what());
    }
}

Heatmap render_heatmap(const std::vector<Point>& points, double sigma, int width, int height) {
    if (!(sigma > 0.0)) throw BadRequestError("sigma must be positive");
    Heatmap h{width, height, sigma,
              std::vector<double>(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0)};
    const double two_s2 = 2.0 * sigma * sigma;
    // exp(-r^2 / 2s^2) < 1e-15 beyond this radius.
    const int radius = static_cast<int>(std::ceil(sigma * std::sqrt(2.0 * std::log(1e15))));
    for (const auto& q : points) {
        const int ylo = std::max(0, q.y - radius), yhi = std::min(height - 1, q.y + radius);
        const int xlo = std::max(0, q.x - radius), xhi = std::min(width - 1, q.x + radius);
        for (int y = ylo; y <= yhi; ++y) {
            const double dy = y - q.y;
            double* row = &h.values[static_cast<std::size_t>(y) * width];
            for (int x = xlo; x <= xhi; ++x) {
                const double dx = x - q.x;
                const double v = std::exp(-(dx * dx + dy * dy) / two_s2);
                if (v > row[x]) row[x] = v;
            }
        }
    }
    return h;
}

void PeakParams::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) throw BadRequestError("peak threshold must lie in (0, 1)");
    if (!(min_separation >= 1.0)) throw BadRequestError("min_separation must be >= 1");
}

std::vector<Point> find_peaks(const Heatmap& h, const PeakParams& p) {
    p.validate();
    struct Candidate {
        double value;
        Point pt;
    };
    std::vector<Candidate> candidates;
    for (int y = 0; y < h.height; ++y) {
        for (int x = 0; x < h.width; ++x) {
            const double v = h.at(x, y);
            if (!(v >= p.threshold)) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= h.width || ny >= h.height) continue;
                    if (h.at(nx, ny) > v) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max) candidates.push_back({v, {x, y}});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.pt.y != b.pt.y) return a.pt.y < b.pt.y;
        return a.pt.x < b.pt.x;
    });
    const double sep2 = p.min_separation * p.min_separation;
    std::vector<Point> accepted;
    for (const auto& c : candidates) {
        const bool suppressed = std::any_of(accepted.begin(), accepted.end(), [&](const Point& a) {
            const double dx = a.x - c.pt.x, dy = a.y - c.pt.y;
            return dx * dx + dy * dy <= sep2;
        });
        if (!suppressed) accepted.push_back(c.pt);
    }
    return accepted;
}

PromptSet baseline_center(const std::vector<BoxPrompt>& boxes, std::string site_id) {
    PromptSet ps;
    ps.site_id = std::move(site_id);
    ps.provenance = Provenance::baseline_center;
    ps.boxes = boxes;
    for (const auto& b : boxes) {
        const Rect r = b.rect();
        ps.points.push_back({b.grid, r.x0 + kCellSize / 2, r.y0 + kCellSize / 2});
    }
    return ps;
}

std::vector<double> cell_gradient_density(const RgbImage& img, const Rect& cell, int radius) {
    const int w = cell.width(), h = cell.height();
    // Integer luminance (r+g+b) and L1 gradient keep every sum exact, so the
    // (y, x) tie-break is not perturbed by rounding.
    std::vector<long long> lum(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgb c = img.at(cell.x0 + x, cell.y0 + y);
            lum[static_cast<std::size_t>(y) * w + x] = c[0] + c[1] + c[2];
        }
    }
    auto L = [&](int x, int y) { return lum[static_cast<std::size_t>(y) * w + x]; };
    // Integral image of the gradient, padded by one row/column of zeros.
    std::vector<long long> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto I = [&](int x, int y) -> long long& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const long long gx = L(std::min(x + 1, w - 1), y) - L(std::max(x - 1, 0), y);
            const long long gy = L(x, std::min(y + 1, h - 1)) - L(x, std::max(y - 1, 0));
            const long long g = (gx < 0 ? -gx : gx) + (gy < 0 ? -gy : gy);
            I(x + 1, y + 1) = g + I(x, y + 1) + I(x + 1, y) - I(x, y);
        }
    }
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(w, x + radius + 1);
            out[static_cast<std::size_t>(y) * w + x] =
                static_cast<double>(I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0));
        }
    }
    return out;
}

PromptSet baseline_density(const RgbImage& img, const std::vector<BoxPrompt>& boxes, int radius,
                           std::string site_id) {
    PromptSet ps;
    ps.site_id = std::move(site_id);
    ps.provenance = Provenance::baseline_density;
    ps.boxes = boxes;
    for (const auto& b : boxes) {
        const Rect r = b.rect();
        const auto density = cell_gradient_density(img, r, radius);
        std::size_t best = 0;
        for (std::size_t i = 1; i < density.size(); ++i) {
            if (density[i] > density[best]) best = i;
        }
        const int w = r.width();
        ps.points.push_back({b.grid, r.x0 + static_cast<int>(best % w), r.y0 + static_cast<int>(best / w)});
    }
    return ps;
}

}  // namespace smartscan::prompts
