#pragma once

// On-disk layout of a site folder and the (exact, full-precision) internal
// documents kept in it. Exports use the rounded schema in constraints.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smartscan/constraints.hpp"
#include "smartscan/geo.hpp"

namespace smartscan::store {

enum class SiteState { created, image_ready, prompts_ready, extracted, exported };

std::string to_string(SiteState s);
SiteState site_state_from_string(const std::string& s);

/// Lowercase ASCII alphanumerics; runs of anything else become one '-'.
/// Throws BadRequestError when nothing is left.
std::string slugify(std::string_view name);

struct SiteRecord {
    std::string id;
    std::string name;
    geo::GeoPoint requested_center;
    geo::SiteFrame frame;
    SiteState state = SiteState::created;
    std::filesystem::path folder;

    friend bool operator==(const SiteRecord&, const SiteRecord&) = default;
};

struct SiteFolder {
    std::filesystem::path root;

    std::filesystem::path meta() const { return root / "meta.json"; }
    std::filesystem::path image() const { return root / "image.png"; }
    std::filesystem::path tiles() const { return root / "tiles"; }
    std::filesystem::path prompts() const { return root / "prompts.json"; }
    std::filesystem::path mask() const { return root / "mask.png"; }
    std::filesystem::path refined_mask() const { return root / "mask_refined.png"; }
    std::filesystem::path elements() const { return root / "elements.json"; }
    std::filesystem::path journal() const { return root / "journal.log"; }
    std::filesystem::path exports() const { return root / "exports"; }
};

struct ElementsDoc {
    std::vector<constraints::SiteElement> elements;
    std::uint64_t next_id = 1;
};

struct JournalEntry {
    std::uint64_t seq = 0;
    std::string time;  // UTC, ISO 8601 with milliseconds
    std::string op;
    nlohmann::json detail = nlohmann::json::object();
    // Element snapshot taken before the mutation; present on undoable entries.
    std::optional<std::vector<constraints::SiteElement>> before;
    std::optional<std::uint64_t> undoes;  // set on "undo" entries
};

std::string utc_now();

nlohmann::json frame_to_json(const geo::SiteFrame& f);
geo::SiteFrame frame_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const SiteRecord& r);
/// `folder` is not stored; the caller supplies it.
SiteRecord record_from_json(const nlohmann::json& j, const std::filesystem::path& folder);

nlohmann::json elements_to_json(const std::vector<constraints::SiteElement>& es);
std::vector<constraints::SiteElement> elements_from_json(const nlohmann::json& j);

void write_record(const SiteFolder& f, const SiteRecord& r);
SiteRecord read_record(const SiteFolder& f);

void write_elements(const SiteFolder& f, const ElementsDoc& d);
/// Empty document when the file does not exist yet.
ElementsDoc read_elements(const SiteFolder& f);

nlohmann::json journal_entry_to_json(const JournalEntry& e);
JournalEntry journal_entry_from_json(const nlohmann::json& j);

/// One JSON object per line, flushed before returning.
void append_journal(const SiteFolder& f, const JournalEntry& e);
std::vector<JournalEntry> read_journal(const SiteFolder& f);

/// The entry an undo would revert: replays the journal as a stack where
/// undoable entries push and "undo" entries pop.
std::optional<JournalEntry> undo_target(const std::vector<JournalEntry>& journal);

}  // namespace smartscan::store
