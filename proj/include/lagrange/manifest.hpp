#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagrange/encode.hpp"

namespace lagrange {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ManifestEntry {
    std::string id;
    std::string path;
    int width = 0;
    int height = 0;
    int frames = 150;
    double fps = 30.0;
    std::string category;
    bool runnable = true;  // false when the path is missing on disk
};

// Validated clip collection. Entries with missing files stay listed but are
// flagged unrunnable, with one warning each; duplicate ids or an empty entry
// list reject the whole manifest.
struct Manifest {
    std::vector<ManifestEntry> entries;
    std::string notes;
    std::vector<std::string> warnings;

    std::vector<ManifestEntry> runnable() const;
};

// Reads and validates a JSON manifest (schema "lagrange-manifest/1", see
// docs/formats.md). Paths with the synth:// scheme are always runnable.
Manifest ingest_manifest(const std::string& path);

void write_manifest(const Manifest& m, const std::string& path);

// Deterministic synthetic corpus: ids synth-0001.., resolutions drawn from a
// typical ladder, 150 frames each. Pairs with the synthetic backend, which
// derives all clip behaviour from (seed, id).
Manifest make_synth_manifest(int count, std::uint64_t seed);

ClipRef to_clip(const ManifestEntry& e);

}  // namespace lagrange
