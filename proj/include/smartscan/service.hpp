#pragma once

// Site lifecycle: image extraction, prompt sessions, extraction runs,
// quality-check editing, export, undo. Each site lives in its own folder
// under the data root and is reloaded from disk on startup.

#include <atomic>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "smartscan/config.hpp"
#include "smartscan/constraints.hpp"
#include "smartscan/prompts.hpp"
#include "smartscan/segbackend.hpp"
#include "smartscan/site_store.hpp"

namespace smartscan {

using store::SiteRecord;
using store::SiteState;

struct JobReport {
    std::string id;
    std::string kind;
    std::string started;
    std::string finished;
    std::string outcome;  // "ok" or "failed"
    std::vector<std::string> messages;
};

struct ExtractResult {
    std::vector<constraints::SiteElement> subspaces;
    JobReport report;
};

struct ExportResult {
    std::vector<constraints::ExportedFile> files;
    JobReport report;
};

struct ElementDraft {
    constraints::ElementType type = constraints::ElementType::subspace;
    geometry::Ring polygon;
    std::string label;
};

struct ElementPatch {
    std::optional<constraints::ElementType> type;
    std::optional<std::string> label;
    std::vector<constraints::VertexEdit> edits;
};

/// Infeasible side of a linear constraint, in image pixels and in the local
/// Cartesian frame.
struct HalfSpaceView {
    constraints::HalfSpace pixel;
    constraints::HalfSpace cartesian;
};

enum class PromptMode { auto_, baseline_center, baseline_density };

/// Throws BadRequestError on anything but auto, baseline_center, baseline_density.
PromptMode prompt_mode_from_string(const std::string& s);

class SiteService {
public:
    /// `backend` overrides the one described by cfg.backend (tests inject fixtures).
    explicit SiteService(ServiceConfig cfg, std::shared_ptr<seg::SegmentationBackend> backend = nullptr);

    const ServiceConfig& config() const { return cfg_; }

    /// Fetches and stitches the site image. On failure the folder is removed
    /// and the error (carrying zoom guidance for tile problems) propagates.
    SiteRecord create_site(const std::string& name, double lat, double lon, int zoom, JobReport* report = nullptr);
    std::vector<SiteRecord> list_sites() const;
    SiteRecord get_site(const std::string& id) const;

    /// Throws ValidationError with every violation; nothing is persisted then.
    void put_prompts(const std::string& id, prompts::PromptSet ps);
    std::optional<prompts::PromptSet> get_prompts(const std::string& id) const;
    /// Baseline modes use `boxes`, or the boxes of the saved prompt set.
    prompts::PromptSet auto_prompts(const std::string& id, PromptMode mode,
                                    std::optional<std::vector<prompts::BoxPrompt>> boxes = std::nullopt);

    ExtractResult extract(const std::string& id);

    std::vector<constraints::SiteElement> elements(const std::string& id) const;
    constraints::SiteElement element(const std::string& id, const std::string& eid) const;
    constraints::SiteElement create_element(const std::string& id, ElementDraft draft);
    void delete_element(const std::string& id, const std::string& eid);
    std::vector<constraints::SiteElement> fragment_element(const std::string& id, const std::string& eid);
    constraints::SiteElement merge_elements(const std::string& id, const std::vector<std::string>& eids);
    constraints::SiteElement patch_element(const std::string& id, const std::string& eid, const ElementPatch& patch);
    HalfSpaceView halfspace(const std::string& id, const std::string& eid) const;

    ExportResult export_site(const std::string& id);
    /// Reverts the most recent element mutation not yet undone.
    std::vector<constraints::SiteElement> undo(const std::string& id);

    std::vector<store::JournalEntry> journal(const std::string& id) const;
    std::vector<std::uint8_t> image_png(const std::string& id) const;
    std::vector<JobReport> jobs() const;

private:
    struct Slot {
        mutable std::shared_mutex mu;
        SiteRecord rec;
        store::ElementsDoc doc;
        std::uint64_t last_seq = 0;
    };

    std::shared_ptr<Slot> slot(const std::string& id) const;
    void load_existing();
    void journal_append(Slot& s, const std::string& op, nlohmann::json detail,
                        std::optional<std::vector<constraints::SiteElement>> before,
                        std::optional<std::uint64_t> undoes = std::nullopt);
    void set_state(Slot& s, SiteState st);
    void commit_elements(Slot& s, const std::string& op, nlohmann::json detail,
                         std::vector<constraints::SiteElement> before);
    std::string next_element_id(Slot& s);
    JobReport begin_job(const std::string& kind);
    void finish_job(JobReport& r, bool ok);
    RgbImage load_image(const Slot& s) const;

    ServiceConfig cfg_;
    std::shared_ptr<seg::SegmentationBackend> backend_;
    mutable std::mutex reg_mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    mutable std::mutex jobs_mu_;
    std::deque<JobReport> jobs_;
    std::atomic<std::uint64_t> job_counter_{0};
};

}  // namespace smartscan
