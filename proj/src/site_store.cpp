#include "smartscan/site_store.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "smartscan/error.hpp"
#include "smartscan/image_codec.hpp"

namespace smartscan::store {

using nlohmann::json;
using constraints::SiteElement;

namespace {

constexpr const char* kStateNames[] = {"created", "image_ready", "prompts_ready", "extracted", "exported"};

json parse_file(const std::filesystem::path& p) {
    try {
        return json::parse(codec::read_text(p));
    } catch (const json::exception& e) {
        throw IoError("corrupt " + p.string() + ": " + e.what());
    }
}

}  // namespace

std::string to_string(SiteState s) { return kStateNames[static_cast<int>(s)]; }

SiteState site_state_from_string(const std::string& s) {
    for (int i = 0; i < 5; ++i)
        if (s == kStateNames[i]) return static_cast<SiteState>(i);
    throw BadRequestError("unknown site state '" + s + "'");
}

std::string slugify(std::string_view name) {
    std::string out;
    bool dash = false;
    for (unsigned char ch : name) {
        if (std::isalnum(ch) && ch < 128) {
            if (dash && !out.empty()) out += '-';
            dash = false;
            out += static_cast<char>(std::tolower(ch));
        } else {
            dash = true;
        }
    }
    if (out.empty()) throw BadRequestError("site name must contain at least one letter or digit");
    return out;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

json frame_to_json(const geo::SiteFrame& f) {
    return {{"center", {f.center.lat, f.center.lon}},
            {"zoom", f.zoom.zoom},
            {"tile_size", f.zoom.tile_size},
            {"origin_world", {f.origin_world.x, f.origin_world.y}},
            {"extent", f.extent},
            {"meters_per_pixel", f.meters_per_pixel},
            {"bottom_left", {f.bottom_left.lat, f.bottom_left.lon}},
            {"top_right", {f.top_right.lat, f.top_right.lon}}};
}

geo::SiteFrame frame_from_json(const json& j) {
    geo::SiteFrame f;
    f.center = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
    f.zoom.zoom = j.at("zoom").get<int>();
    f.zoom.tile_size = j.at("tile_size").get<int>();
    f.origin_world = {j.at("origin_world").at(0).get<double>(), j.at("origin_world").at(1).get<double>(),
                      f.zoom.zoom};
    f.extent = j.at("extent").get<int>();
    f.meters_per_pixel = j.at("meters_per_pixel").get<double>();
    f.bottom_left = {j.at("bottom_left").at(0).get<double>(), j.at("bottom_left").at(1).get<double>()};
    f.top_right = {j.at("top_right").at(0).get<double>(), j.at("top_right").at(1).get<double>()};
    return f;
}

json record_to_json(const SiteRecord& r) {
    return {{"id", r.id},
            {"name", r.name},
            {"requested_center", {r.requested_center.lat, r.requested_center.lon}},
            {"frame", frame_to_json(r.frame)},
            {"state", to_string(r.state)}};
}

SiteRecord record_from_json(const json& j, const std::filesystem::path& folder) {
    SiteRecord r;
    r.id = j.at("id").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.requested_center = {j.at("requested_center").at(0).get<double>(), j.at("requested_center").at(1).get<double>()};
    r.frame = frame_from_json(j.at("frame"));
    r.state = site_state_from_string(j.at("state").get<std::string>());
    r.folder = folder;
    return r;
}

json elements_to_json(const std::vector<SiteElement>& es) {
    json arr = json::array();
    for (const auto& e : es) {
        json pts = json::array();
        for (const auto& p : e.polygon) pts.push_back({p.x, p.y});
        arr.push_back({{"id", e.id},
                       {"type", constraints::to_string(e.type)},
                       {"label", e.label},
                       {"provenance", constraints::to_string(e.origin)},
                       {"pixel", std::move(pts)}});
    }
    return arr;
}

std::vector<SiteElement> elements_from_json(const json& j) {
    std::vector<SiteElement> out;
    for (const auto& e : j) out.push_back(constraints::element_from_json(e));
    return out;
}

void write_record(const SiteFolder& f, const SiteRecord& r) { codec::write_text(f.meta(), record_to_json(r).dump(2)); }

SiteRecord read_record(const SiteFolder& f) {
    try {
        return record_from_json(parse_file(f.meta()), f.root);
    } catch (const json::exception& e) {
        throw IoError("corrupt " + f.meta().string() + ": " + e.what());
    }
}

void write_elements(const SiteFolder& f, const ElementsDoc& d) {
    const json j{{"next_id", d.next_id}, {"elements", elements_to_json(d.elements)}};
    codec::write_text(f.elements(), j.dump(2));
}

ElementsDoc read_elements(const SiteFolder& f) {
    ElementsDoc d;
    if (!std::filesystem::exists(f.elements())) return d;
    try {
        const json j = parse_file(f.elements());
        d.next_id = j.at("next_id").get<std::uint64_t>();
        d.elements = elements_from_json(j.at("elements"));
    } catch (const json::exception& e) {
        throw IoError("corrupt " + f.elements().string() + ": " + e.what());
    }
    return d;
}

json journal_entry_to_json(const JournalEntry& e) {
    json j{{"seq", e.seq}, {"time", e.time}, {"op", e.op}, {"detail", e.detail}};
    if (e.before) j["before"] = elements_to_json(*e.before);
    if (e.undoes) j["undoes"] = *e.undoes;
    return j;
}

JournalEntry journal_entry_from_json(const json& j) {
    JournalEntry e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.time = j.at("time").get<std::string>();
    e.op = j.at("op").get<std::string>();
    e.detail = j.value("detail", json::object());
    if (j.contains("before")) e.before = elements_from_json(j.at("before"));
    if (j.contains("undoes")) e.undoes = j.at("undoes").get<std::uint64_t>();
    return e;
}

void append_journal(const SiteFolder& f, const JournalEntry& e) {
    std::ofstream out(f.journal(), std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open " + f.journal().string());
    out << journal_entry_to_json(e).dump() << '\n';
    out.flush();
    if (!out) throw IoError("cannot append to " + f.journal().string());
}

std::vector<JournalEntry> read_journal(const SiteFolder& f) {
    std::vector<JournalEntry> out;
    std::ifstream in(f.journal(), std::ios::binary);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(journal_entry_from_json(json::parse(line)));
        } catch (const json::exception&) {
            // A torn final line from a crash mid-append is dropped.
            if (in.peek() != std::char_traits<char>::eof()) throw IoError("corrupt " + f.journal().string());
        }
    }
    return out;
}

std::optional<JournalEntry> undo_target(const std::vector<JournalEntry>& journal) {
    std::vector<const JournalEntry*> stack;
    for (const auto& e : journal) {
        if (e.undoes) {
            if (!stack.empty()) stack.pop_back();
        } else if (e.before) {
            stack.push_back(&e);
        }
    }
    if (stack.empty()) return std::nullopt;
    return *stack.back();
}

}  // namespace smartscan::store
