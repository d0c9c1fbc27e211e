#include "smartscan/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "smartscan/encoding.hpp"
#include "smartscan/error.hpp"
#include "smartscan/http_util.hpp"
#include "smartscan/image_codec.hpp"
#include "smartscan/imagery.hpp"
#include "smartscan/postprocess.hpp"

namespace smartscan {

using constraints::ElementType;
using constraints::Origin;
using constraints::SiteElement;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kJobHistory = 200;

void require_state(const SiteRecord& r, SiteState min, const char* what) {
    if (r.state < min) {
        throw StateError(std::string(what) + " requires site state " + store::to_string(min) + " or later; site '" +
                         r.id + "' is " + store::to_string(r.state));
    }
}

json ring_json(const geometry::Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back({p.x, p.y});
    return arr;
}

std::vector<SiteElement>::iterator find_element(std::vector<SiteElement>& es, const std::string& eid,
                                                 const std::string& site) {
    auto it = std::find_if(es.begin(), es.end(), [&](const SiteElement& e) { return e.id == eid; });
    if (it == es.end()) throw NotFoundError("site '" + site + "' has no element '" + eid + "'");
    return it;
}

/// Shape checks shared by create and patch; convexity is only required at export.
void check_shape(ElementType type, const geometry::Ring& poly, const geo::SiteFrame& f) {
    std::vector<std::string> v;
    if (poly.size() < 3) v.push_back("polygon needs at least 3 vertices");
    if (type == ElementType::linear_constraint && poly.size() != 3)
        v.push_back("linear_constraint needs exactly 3 vertices (p1, p2 on the cut line, p3 infeasible)");
    for (const auto& p : poly) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 || p.x > f.extent || p.y > f.extent) {
            v.push_back("vertex (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside the image");
            break;
        }
    }
    if (!v.empty()) throw ValidationError(std::move(v));
    if (type == ElementType::linear_constraint) {
        constraints::halfspace({poly[0], poly[1], poly[2]});
    } else if (geometry::area(poly) <= 0.0) {
        throw DegenerateGeometryError("polygon has zero area");
    }
}

void check_unique_role(const std::vector<SiteElement>& es, ElementType type, const std::string& except = {}) {
    if (type != ElementType::site_bounds && type != ElementType::perimeter) return;
    for (const auto& e : es) {
        if (e.type == type && e.id != except)
            throw ValidationError({"site already has a " + constraints::to_string(type) + " element ('" + e.id + "')"});
    }
}

prompts::PromptSet prompts_from_sidecar(const std::string& endpoint, std::chrono::milliseconds timeout,
                                        const RgbImage& img, const prompts::PeakParams& peaks) {
    const auto url = http::split_url(endpoint + "/auto_prompts");
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    client.set_write_timeout(secs.count(), 0);
    const auto png = codec::encode_png(img);
    const json body{{"image_png_b64", encoding::base64_encode(png)}};
    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        throw UnavailableError("prompt sidecar unreachable at " + endpoint + " (" + httplib::to_string(res.error()) +
                               ")");
    }
    if (res->status == 503) throw UnavailableError("prompt sidecar has no prompt-generator checkpoints loaded");
    if (res->status != 200) throw BackendError("prompt sidecar returned HTTP " + std::to_string(res->status));

    prompts::PromptSet ps;
    ps.provenance = prompts::Provenance::auto_;
    try {
        const json j = json::parse(res->body);
        std::map<prompts::GridIndex, const json*> heatmaps;
        for (const auto& h : j.at("heatmaps")) heatmaps[{h.at("row").get<int>(), h.at("col").get<int>()}] = &h;
        for (const auto& g : j.at("selected_grids")) {
            const prompts::GridIndex gi{g.at("row").get<int>(), g.at("col").get<int>()};
            if (!gi.valid()) throw BackendError("prompt sidecar selected an invalid grid");
            auto it = heatmaps.find(gi);
            if (it == heatmaps.end()) {
                throw BackendError("prompt sidecar returned no heatmap for grid (" + std::to_string(gi.row) + ", " +
                                   std::to_string(gi.col) + ")");
            }
            prompts::Heatmap h{prompts::kCellSize, prompts::kCellSize, 0.0, {}};
            h.values = it->second->at("values").get<std::vector<double>>();
            if (h.values.size() != static_cast<std::size_t>(h.width) * h.height)
                throw BackendError("prompt sidecar heatmap has wrong size");
            auto pts = prompts::find_peaks(h, peaks);
            if (pts.empty()) {
                // No peak above threshold: the single strongest response still marks the object.
                const auto best = std::max_element(h.values.begin(), h.values.end()) - h.values.begin();
                pts.push_back({static_cast<int>(best % h.width), static_cast<int>(best / h.width)});
            }
            ps.boxes.push_back({gi});
            const Rect r = prompts::grid_rect(gi);
            for (const auto& p : pts) ps.points.push_back({gi, r.x0 + p.x, r.y0 + p.y});
        }
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed prompt sidecar response: ") + e.what());
    }
    return ps;
}

}  // namespace

PromptMode prompt_mode_from_string(const std::string& s) {
    if (s == "auto") return PromptMode::auto_;
    if (s == "baseline_center") return PromptMode::baseline_center;
    if (s == "baseline_density") return PromptMode::baseline_density;
    throw BadRequestError("unknown prompt mode '" + s + "' (expected auto, baseline_center or baseline_density)");
}

SiteService::SiteService(ServiceConfig cfg, std::shared_ptr<seg::SegmentationBackend> backend)
    : cfg_(std::move(cfg)), backend_(std::move(backend)) {
    cfg_.postprocess.validate();
    cfg_.peaks.validate();
    if (!backend_) backend_ = seg::make_backend(cfg_.backend);
    std::error_code ec;
    fs::create_directories(cfg_.data_root, ec);
    if (ec) throw IoError("cannot create data root " + cfg_.data_root.string() + ": " + ec.message());
    load_existing();
}

void SiteService::load_existing() {
    for (const auto& entry : fs::directory_iterator(cfg_.data_root)) {
        if (!entry.is_directory()) continue;
        const store::SiteFolder folder{entry.path()};
        if (!fs::exists(folder.meta())) continue;
        auto s = std::make_shared<Slot>();
        s->rec = store::read_record(folder);
        s->doc = store::read_elements(folder);
        const auto journal = store::read_journal(folder);
        if (!journal.empty()) s->last_seq = journal.back().seq;
        slots_[s->rec.id] = std::move(s);
    }
}

std::shared_ptr<SiteService::Slot> SiteService::slot(const std::string& id) const {
    std::lock_guard lk(reg_mu_);
    auto it = slots_.find(id);
    if (it == slots_.end()) throw NotFoundError("no site '" + id + "'");
    return it->second;
}

JobReport SiteService::begin_job(const std::string& kind) {
    JobReport r;
    r.id = kind + "-" + std::to_string(++job_counter_);
    r.kind = kind;
    r.started = store::utc_now();
    return r;
}

void SiteService::finish_job(JobReport& r, bool ok) {
    r.finished = store::utc_now();
    r.outcome = ok ? "ok" : "failed";
    std::lock_guard lk(jobs_mu_);
    jobs_.push_back(r);
    if (jobs_.size() > kJobHistory) jobs_.pop_front();
}

std::vector<JobReport> SiteService::jobs() const {
    std::lock_guard lk(jobs_mu_);
    return {jobs_.begin(), jobs_.end()};
}

void SiteService::journal_append(Slot& s, const std::string& op, json detail,
                                 std::optional<std::vector<SiteElement>> before, std::optional<std::uint64_t> undoes) {
    store::JournalEntry e;
    e.seq = s.last_seq + 1;
    e.time = store::utc_now();
    e.op = op;
    e.detail = std::move(detail);
    e.before = std::move(before);
    e.undoes = undoes;
    store::append_journal({s.rec.folder}, e);
    s.last_seq = e.seq;
}

void SiteService::set_state(Slot& s, SiteState st) {
    if (s.rec.state == st) return;
    SiteRecord next = s.rec;
    next.state = st;
    store::write_record({s.rec.folder}, next);
    s.rec = std::move(next);
}

void SiteService::commit_elements(Slot& s, const std::string& op, json detail, std::vector<SiteElement> before) {
    store::write_elements({s.rec.folder}, s.doc);
    journal_append(s, op, std::move(detail), std::move(before));
    // Any edit invalidates a previous export.
    if (s.rec.state == SiteState::exported) set_state(s, SiteState::extracted);
}

std::string SiteService::next_element_id(Slot& s) { return "e" + std::to_string(s.doc.next_id++); }

RgbImage SiteService::load_image(const Slot& s) const {
    return codec::decode_rgb(codec::read_file(store::SiteFolder{s.rec.folder}.image()));
}

SiteRecord SiteService::create_site(const std::string& name, double lat, double lon, int zoom, JobReport* report) {
    const std::string id = store::slugify(name);
    const geo::GeoPoint center = geo::GeoPoint::make(lat, lon);
    const geo::SiteFrame requested = geo::make_site_frame(center, geo::ZoomSpec{zoom});
    if (cfg_.tiles.url_template.empty())
        throw UnavailableError("no tile source configured; set tile_url_template or SMARTSCAN_TILE_TEMPLATE");
    imagery::TileSourceConfig tile_cfg = cfg_.tiles;
    tile_cfg.validate();

    auto s = std::make_shared<Slot>();
    s->rec.id = id;
    s->rec.name = name;
    s->rec.requested_center = center;
    s->rec.frame = imagery::snap_to_tile_grid(requested);
    s->rec.state = SiteState::created;
    s->rec.folder = cfg_.data_root / id;
    std::unique_lock lk(s->mu);
    {
        std::lock_guard reg(reg_mu_);
        if (slots_.count(id) || fs::exists(s->rec.folder))
            throw ConflictError("a site named '" + id + "' already exists");
        slots_[id] = s;
    }

    JobReport job = begin_job("create_site");
    const store::SiteFolder folder{s->rec.folder};
    try {
        fs::create_directories(folder.root);
        store::write_record(folder, s->rec);
        journal_append(*s, "create_site", {{"name", name}, {"lat", lat}, {"lon", lon}, {"zoom", zoom}}, std::nullopt);
        if (tile_cfg.cache_dir.empty()) tile_cfg.cache_dir = folder.tiles();
        imagery::TileFetcher fetcher(tile_cfg);
        job.messages.push_back("fetching 36 tiles at zoom " + std::to_string(zoom));
        imagery::SiteImage img;
        try {
            img = imagery::extract_site_image(requested, fetcher);
        } catch (const Error& e) {
            const std::string msg = e.what();
            if (msg.find(kZoomGuidance) != std::string::npos) throw;
            throw FetchError("site image extraction failed: " + msg + "; " + kZoomGuidance);
        }
        job.messages.push_back(std::to_string(fetcher.network_requests()) + " tile requests issued");
        codec::write_file(folder.image(), codec::encode_png(img.pixels));
        s->rec.frame = img.frame;
        set_state(*s, SiteState::image_ready);
        store::write_elements(folder, s->doc);
        job.messages.push_back("wrote image.png (3072x3072)");
        finish_job(job, true);
    } catch (const std::exception& e) {
        job.messages.push_back(std::string("error: ") + e.what());
        finish_job(job, false);
        if (report) *report = job;
        std::error_code ec;
        fs::remove_all(folder.root, ec);
        std::lock_guard reg(reg_mu_);
        slots_.erase(id);
        throw;
    }
    if (report) *report = job;
    return s->rec;
}

std::vector<SiteRecord> SiteService::list_sites() const {
    std::vector<std::shared_ptr<Slot>> all;
    {
        std::lock_guard lk(reg_mu_);
        for (const auto& [_, s] : slots_) all.push_back(s);
    }
    std::vector<SiteRecord> out;
    for (const auto& s : all) {
        std::shared_lock lk(s->mu);
        out.push_back(s->rec);
    }
    return out;
}

SiteRecord SiteService::get_site(const std::string& id) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    return s->rec;
}

void SiteService::put_prompts(const std::string& id, prompts::PromptSet ps) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "saving prompts");
    ps.site_id = id;
    if (auto v = prompts::validate(ps); !v.empty()) throw ValidationError(std::move(v));
    codec::write_text(store::SiteFolder{s->rec.folder}.prompts(), prompts::to_json(ps));
    journal_append(*s, "put_prompts",
                   {{"boxes", ps.boxes.size()}, {"points", ps.points.size()},
                    {"provenance", prompts::to_string(ps.provenance)}},
                   std::nullopt);
    set_state(*s, std::max(s->rec.state, SiteState::prompts_ready));
}

std::optional<prompts::PromptSet> SiteService::get_prompts(const std::string& id) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    const auto p = store::SiteFolder{s->rec.folder}.prompts();
    if (!fs::exists(p)) return std::nullopt;
    return prompts::from_json(codec::read_text(p));
}

prompts::PromptSet SiteService::auto_prompts(const std::string& id, PromptMode mode,
                                             std::optional<std::vector<prompts::BoxPrompt>> boxes) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "prompt generation");
    const store::SiteFolder folder{s->rec.folder};
    prompts::PromptSet ps;
    if (mode == PromptMode::auto_) {
        if (cfg_.sidecar_endpoint.empty()) {
            throw UnavailableError(
                "auto prompting needs a prompt sidecar; set sidecar_endpoint or SMARTSCAN_SIDECAR, or use "
                "mode baseline_center / baseline_density");
        }
        ps = prompts_from_sidecar(cfg_.sidecar_endpoint, cfg_.sidecar_timeout, load_image(*s), cfg_.peaks);
    } else {
        if (!boxes && fs::exists(folder.prompts())) boxes = prompts::from_json(codec::read_text(folder.prompts())).boxes;
        if (!boxes || boxes->empty())
            throw BadRequestError("baseline prompting needs selected boxes: pass \"boxes\" or save prompts first");
        for (const auto& b : *boxes)
            if (!b.grid.valid()) throw BadRequestError("box grid index out of range");
        ps = mode == PromptMode::baseline_center
                 ? prompts::baseline_center(*boxes, id)
                 : prompts::baseline_density(load_image(*s), *boxes, cfg_.density_radius, id);
    }
    ps.site_id = id;
    if (auto v = prompts::validate(ps); !v.empty()) throw ValidationError(std::move(v));
    codec::write_text(folder.prompts(), prompts::to_json(ps));
    journal_append(*s, "auto_prompts",
                   {{"mode", prompts::to_string(ps.provenance)}, {"boxes", ps.boxes.size()},
                    {"points", ps.points.size()}},
                   std::nullopt);
    set_state(*s, std::max(s->rec.state, SiteState::prompts_ready));
    return ps;
}

ExtractResult SiteService::extract(const std::string& id) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::prompts_ready, "extraction");
    const store::SiteFolder folder{s->rec.folder};
    // A manual-only site can be exported without ever saving prompts.
    if (!fs::exists(folder.prompts())) throw StateError("extraction requires saved prompts for site '" + id + "'");
    JobReport job = begin_job("extract");
    ExtractResult result;
    try {
        const auto ps = prompts::from_json(codec::read_text(folder.prompts()));
        const RgbImage img = load_image(*s);
        job.messages.push_back("segmenting " + std::to_string(ps.boxes.size()) + " grids with backend " +
                               seg::to_string(cfg_.backend.kind));
        const BinaryMask mask = seg::segment_site(img, ps, *backend_, cfg_.backend.parallelism);
        job.messages.push_back("segmented mask covers " + std::to_string(mask.count()) + " px");
        const auto polys = post::extract_subspaces(mask, cfg_.postprocess,
                                                   [&](std::string_view m) { job.messages.emplace_back(m); });
        codec::write_file(folder.mask(), codec::encode_mask_png(mask));
        codec::write_file(folder.refined_mask(), codec::encode_mask_png(post::crf_refine(mask, cfg_.postprocess)));

        std::vector<SiteElement> before = s->doc.elements;
        std::vector<SiteElement> kept;
        std::size_t replaced = 0;
        for (auto& e : s->doc.elements) {
            if (e.origin == Origin::machine && e.type == ElementType::subspace)
                ++replaced;
            else
                kept.push_back(std::move(e));
        }
        s->doc.elements = std::move(kept);
        for (const auto& p : polys) {
            SiteElement e{next_element_id(*s), ElementType::subspace, p.vertices(), "", Origin::machine};
            result.subspaces.push_back(e);
            s->doc.elements.push_back(std::move(e));
        }
        job.messages.push_back("extracted " + std::to_string(polys.size()) + " subspaces (replaced " +
                               std::to_string(replaced) + ")");
        store::write_elements(folder, s->doc);
        journal_append(*s, "extract", {{"subspaces", polys.size()}, {"replaced", replaced}}, std::move(before));
        set_state(*s, SiteState::extracted);
        finish_job(job, true);
    } catch (const std::exception& e) {
        // Reload from disk so a failure after partial in-memory changes leaves nothing behind.
        s->doc = store::read_elements(folder);
        job.messages.push_back(std::string("error: ") + e.what());
        finish_job(job, false);
        throw;
    }
    result.report = job;
    return result;
}

std::vector<SiteElement> SiteService::elements(const std::string& id) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    return s->doc.elements;
}

SiteElement SiteService::element(const std::string& id, const std::string& eid) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    for (const auto& e : s->doc.elements)
        if (e.id == eid) return e;
    throw NotFoundError("site '" + id + "' has no element '" + eid + "'");
}

SiteElement SiteService::create_element(const std::string& id, ElementDraft draft) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "element creation");
    if (draft.type != ElementType::linear_constraint) draft.polygon = constraints::normalize_orientation(draft.polygon);
    check_shape(draft.type, draft.polygon, s->rec.frame);
    check_unique_role(s->doc.elements, draft.type);
    auto before = s->doc.elements;
    SiteElement e{next_element_id(*s), draft.type, std::move(draft.polygon), std::move(draft.label), Origin::human};
    s->doc.elements.push_back(e);
    commit_elements(*s, "create_element", {{"id", e.id}, {"type", constraints::to_string(e.type)}},
                    std::move(before));
    return e;
}

void SiteService::delete_element(const std::string& id, const std::string& eid) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::extracted, "element deletion");
    auto before = s->doc.elements;
    s->doc.elements.erase(find_element(s->doc.elements, eid, id));
    commit_elements(*s, "delete_element", {{"id", eid}}, std::move(before));
}

std::vector<SiteElement> SiteService::fragment_element(const std::string& id, const std::string& eid) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::extracted, "fragmenting");
    auto it = find_element(s->doc.elements, eid, id);
    if (it->type != ElementType::subspace && it->type != ElementType::exclusion_zone)
        throw ValidationError({"only subspaces and exclusion zones can be fragmented"});
    const auto poly = geometry::ConvexPolygon::from_vertices(it->polygon);
    const auto pieces = constraints::fragment(poly);
    auto before = s->doc.elements;
    const SiteElement src = *it;
    std::vector<SiteElement> made;
    for (const auto& p : pieces) made.push_back({next_element_id(*s), src.type, p.vertices(), src.label, Origin::human});
    it = s->doc.elements.erase(it);
    s->doc.elements.insert(it, made.begin(), made.end());
    json ids = json::array();
    for (const auto& m : made) ids.push_back(m.id);
    commit_elements(*s, "fragment_element", {{"id", eid}, {"pieces", ids}}, std::move(before));
    return made;
}

SiteElement SiteService::merge_elements(const std::string& id, const std::vector<std::string>& eids) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::extracted, "merging");
    if (eids.size() < 2) throw BadRequestError("merge needs at least two element ids");
    if (std::set<std::string>(eids.begin(), eids.end()).size() != eids.size())
        throw BadRequestError("merge ids must be distinct");
    std::vector<geometry::ConvexPolygon> polys;
    std::optional<ElementType> type;
    std::string label;
    for (const auto& eid : eids) {
        const auto it = find_element(s->doc.elements, eid, id);
        if (it->type != ElementType::subspace && it->type != ElementType::exclusion_zone)
            throw ValidationError({"only subspaces and exclusion zones can be merged"});
        if (type && *type != it->type) throw ValidationError({"merged elements must share one type"});
        if (!type) label = it->label;
        type = it->type;
        polys.push_back(geometry::ConvexPolygon::from_vertices(it->polygon));
    }
    const auto merged = constraints::merge(polys);
    auto before = s->doc.elements;
    SiteElement e{next_element_id(*s), *type, merged.vertices(), label, Origin::human};
    auto pos = find_element(s->doc.elements, eids.front(), id);
    *pos = e;
    for (std::size_t i = 1; i < eids.size(); ++i) s->doc.elements.erase(find_element(s->doc.elements, eids[i], id));
    commit_elements(*s, "merge_elements", {{"ids", eids}, {"id", e.id}}, std::move(before));
    return e;
}

SiteElement SiteService::patch_element(const std::string& id, const std::string& eid, const ElementPatch& patch) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::extracted, "editing");
    auto it = find_element(s->doc.elements, eid, id);
    SiteElement e = *it;
    for (const auto& edit : patch.edits) e.polygon = constraints::edit_vertex(e.polygon, edit).polygon;
    if (patch.type) {
        check_unique_role(s->doc.elements, *patch.type, eid);
        e.type = *patch.type;
    }
    if (patch.label) e.label = *patch.label;
    check_shape(e.type, e.polygon, s->rec.frame);
    e.origin = Origin::human;
    auto before = s->doc.elements;
    *it = e;
    commit_elements(*s, "patch_element",
                    {{"id", eid}, {"edits", patch.edits.size()}, {"polygon", ring_json(e.polygon)}},
                    std::move(before));
    return e;
}

HalfSpaceView SiteService::halfspace(const std::string& id, const std::string& eid) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    for (const auto& e : s->doc.elements) {
        if (e.id != eid) continue;
        if (e.type != ElementType::linear_constraint)
            throw BadRequestError("element '" + eid + "' is not a linear_constraint");
        const auto lc = constraints::linear_constraint_of(e);
        auto local = [&](const geometry::Point2& p) {
            const auto c = geo::pixel_to_local({p.x, p.y}, s->rec.frame);
            return geometry::Point2{c.x_east, c.y_north};
        };
        return {constraints::halfspace(lc), constraints::halfspace({local(lc.p1), local(lc.p2), local(lc.p3)})};
    }
    throw NotFoundError("site '" + id + "' has no element '" + eid + "'");
}

ExportResult SiteService::export_site(const std::string& id) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "export");
    JobReport job = begin_job("export");
    ExportResult out;
    try {
        const constraints::ConstraintSet cs{{s->rec.name, s->rec.frame}, s->doc.elements};
        const store::SiteFolder folder{s->rec.folder};
        out.files = constraints::export_constraint_set(cs, folder.exports());
        json files = json::array();
        for (const auto& f : out.files) {
            files.push_back({{"name", f.name}, {"sha256", f.sha256}});
            job.messages.push_back("wrote exports/" + f.name + " sha256=" + f.sha256);
        }
        journal_append(*s, "export", {{"files", files}}, std::nullopt);
        set_state(*s, SiteState::exported);
        finish_job(job, true);
    } catch (const std::exception& e) {
        job.messages.push_back(std::string("error: ") + e.what());
        finish_job(job, false);
        throw;
    }
    out.report = job;
    return out;
}

std::vector<SiteElement> SiteService::undo(const std::string& id) {
    auto s = slot(id);
    std::unique_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "undo");
    const store::SiteFolder folder{s->rec.folder};
    const auto target = store::undo_target(store::read_journal(folder));
    if (!target) throw StateError("nothing to undo for site '" + id + "'");
    s->doc.elements = *target->before;
    store::write_elements(folder, s->doc);
    journal_append(*s, "undo", {{"op", target->op}}, std::nullopt, target->seq);
    if (s->rec.state == SiteState::exported) set_state(*s, SiteState::extracted);
    return s->doc.elements;
}

std::vector<store::JournalEntry> SiteService::journal(const std::string& id) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    return store::read_journal({s->rec.folder});
}

std::vector<std::uint8_t> SiteService::image_png(const std::string& id) const {
    auto s = slot(id);
    std::shared_lock lk(s->mu);
    require_state(s->rec, SiteState::image_ready, "image download");
    return codec::read_file(store::SiteFolder{s->rec.folder}.image());
}

}  // namespace smartscan
