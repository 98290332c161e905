#include "lagrange/y4m.hpp"

#include <cstdio>
#include <cstring>
#include <string>

namespace lagrange {

namespace {

// Chroma subsampling factors for frame-size arithmetic. C420 variants share 1.5.
double plane_factor(const std::string& colorspace) {
    if (colorspace.rfind("C420", 0) == 0) return 1.5;
    if (colorspace.rfind("C422", 0) == 0) return 2.0;
    if (colorspace.rfind("C444", 0) == 0) return 3.0;
    if (colorspace.rfind("Cmono", 0) == 0) return 1.0;
    return 1.5;
}

}  // namespace

std::optional<Y4mInfo> probe_y4m(const std::string& path, bool count_frames) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return std::nullopt;

    std::string header;
    int c;
    while ((c = std::fgetc(f)) != EOF && c != '\n' && header.size() < 512) {
        header.push_back(static_cast<char>(c));
    }
    if (header.rfind("YUV4MPEG2", 0) != 0) {
        std::fclose(f);
        return std::nullopt;
    }

    Y4mInfo info;
    std::string colorspace = "C420";
    size_t pos = 9;
    while (pos < header.size()) {
        while (pos < header.size() && header[pos] == ' ') ++pos;
        size_t end = header.find(' ', pos);
        if (end == std::string::npos) end = header.size();
        std::string tag = header.substr(pos, end - pos);
        if (!tag.empty()) {
            switch (tag[0]) {
                case 'W': info.width = std::atoi(tag.c_str() + 1); break;
                case 'H': info.height = std::atoi(tag.c_str() + 1); break;
                case 'F': {
                    long num = 0, den = 1;
                    if (std::sscanf(tag.c_str() + 1, "%ld:%ld", &num, &den) == 2 && den > 0) {
                        info.fps = static_cast<double>(num) / static_cast<double>(den);
                    }
                    break;
                }
                case 'C': colorspace = tag; break;
                default: break;
            }
        }
        pos = end + 1;
    }
    if (info.width <= 0 || info.height <= 0) {
        std::fclose(f);
        return std::nullopt;
    }

    if (count_frames) {
        long frame_bytes = static_cast<long>(
            static_cast<double>(info.width) * info.height * plane_factor(colorspace));
        char line[256];
        while (std::fgets(line, sizeof(line), f)) {
            if (std::strncmp(line, "FRAME", 5) != 0) break;
            ++info.frames;
            if (std::fseek(f, frame_bytes, SEEK_CUR) != 0) break;
        }
    }
    std::fclose(f);
    return info;
}

}  // namespace lagrange
