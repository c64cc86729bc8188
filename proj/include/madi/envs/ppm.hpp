#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "madi/core/types.hpp"

namespace madi {

// Binary PPM (P6, maxval 255).
inline void write_ppm(const std::string& path, const Frame& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "P6\n" << f.width << " " << f.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.pixels.data()),
              static_cast<std::streamsize>(f.pixels.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

// Binary PGM (P5, maxval 255) from unit-interval values scaled by 255.
inline void write_pgm_unit(const std::string& path, const float* values, int h, int w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(h) * w);
    for (size_t i = 0; i < row.size(); ++i) {
        float v = values[i];
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        row[i] = static_cast<unsigned char>(v * 255.0f + 0.5f);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!out) throw std::runtime_error("failed writing " + path);
}

// Episode recorder naming contract: frame_%06d.ppm inside `dir`.
inline std::string frame_filename(const std::string& dir, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", index);
    return dir + "/" + buf;
}

}  // namespace madi
