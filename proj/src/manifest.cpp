#include "lagrange/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lagrange/rng.hpp"

namespace fs = std::filesystem;

namespace lagrange {
namespace {

bool is_synth_path(const std::string& p) { return p.rfind("synth://", 0) == 0; }

}  // namespace

std::vector<ManifestEntry> Manifest::runnable() const {
    std::vector<ManifestEntry> out;
    for (const ManifestEntry& e : entries)
        if (e.runnable) out.push_back(e);
    return out;
}

Manifest ingest_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open manifest: " + path);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ManifestError("manifest is not valid JSON: " + std::string(e.what()));
    }

    const std::string schema = j.value("schema", std::string{});
    if (schema != "lagrange-manifest/1")
        throw ManifestError("unsupported manifest schema '" + schema + "'");

    Manifest m;
    m.notes = j.value("notes", std::string{});
    if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
        throw ManifestError("manifest has no entries");

    std::set<std::string> seen;
    for (const auto& e : j["entries"]) {
        ManifestEntry entry;
        try {
            e.at("id").get_to(entry.id);
            e.at("path").get_to(entry.path);
            e.at("width").get_to(entry.width);
            e.at("height").get_to(entry.height);
            entry.frames = e.value("frames", 150);
            entry.fps = e.value("fps", 30.0);
            entry.category = e.value("category", std::string{});
        } catch (const std::exception& ex) {
            throw ManifestError("bad manifest entry: " + std::string(ex.what()));
        }
        if (entry.id.empty()) throw ManifestError("manifest entry with empty id");
        if (!seen.insert(entry.id).second)
            throw ManifestError("duplicate clip id '" + entry.id + "'");
        if (entry.width <= 0 || entry.height <= 0 || entry.frames <= 0)
            throw ManifestError("non-positive dimensions/frames for clip '" +
                                entry.id + "'");
        if (!is_synth_path(entry.path) && !fs::exists(entry.path)) {
            entry.runnable = false;
            m.warnings.push_back("clip '" + entry.id + "': file not found: " +
                                 entry.path);
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (const ManifestEntry& e : m.entries) {
        entries.push_back({{"id", e.id},
                           {"path", e.path},
                           {"width", e.width},
                           {"height", e.height},
                           {"frames", e.frames},
                           {"fps", e.fps},
                           {"category", e.category}});
    }
    nlohmann::json j{{"schema", "lagrange-manifest/1"},
                     {"notes", m.notes},
                     {"entries", entries}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw ManifestError("cannot write manifest: " + path);
}

Manifest make_synth_manifest(int count, std::uint64_t seed) {
    if (count <= 0) throw ManifestError("synthetic manifest needs count > 0");
    static const struct {
        int w, h;
        const char* label;
    } kLadder[] = {{1920, 1080, "1080p"},
                   {1280, 720, "720p"},
                   {960, 540, "540p"},
                   {640, 360, "360p"}};
    Manifest m;
    m.notes = "synthetic corpus, seed " + std::to_string(seed);
    SplitMix64 rng(keyed_stream(seed, "synth-manifest"));
    for (int i = 1; i <= count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%04d", i);
        const auto& rung = kLadder[rng.bounded(4)];
        ManifestEntry e;
        e.id = id;
        e.path = std::string("synth://") + id;
        e.width = rung.w;
        e.height = rung.h;
        e.frames = 150;
        e.fps = 30.0;
        e.category = rung.label;
        m.entries.push_back(std::move(e));
    }
    return m;
}

ClipRef to_clip(const ManifestEntry& e) {
    ClipRef c;
    c.id = e.id;
    c.path = e.path;
    c.width = e.width;
    c.height = e.height;
    c.frames = e.frames;
    c.fps = e.fps;
    return c;
}

}  // namespace lagrange
