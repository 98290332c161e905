#pragma once

#include <optional>
#include <string>

namespace lagrange {

struct Y4mInfo {
    int width = 0;
    int height = 0;
    double fps = 30.0;
    int frames = 0;  // populated only when counted
};

// Parses a YUV4MPEG2 header. Returns nullopt if the file is missing or not Y4M.
// With count_frames set, scans the stream and counts FRAME markers.
std::optional<Y4mInfo> probe_y4m(const std::string& path, bool count_frames = false);

}  // namespace lagrange
