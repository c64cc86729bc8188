#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "madi/core/rng.hpp"
#include "madi/core/types.hpp"
#include "madi/envs/video.hpp"

namespace madi {

enum class AugmentKind { none, overlay, conv, splice, shift, crop };

inline const char* augment_name(AugmentKind k) {
    switch (k) {
        case AugmentKind::none: return "none";
        case AugmentKind::overlay: return "overlay";
        case AugmentKind::conv: return "conv";
        case AugmentKind::splice: return "splice";
        case AugmentKind::shift: return "shift";
        case AugmentKind::crop: return "crop";
    }
    return "?";
}

struct AugmentParams {
    AugmentKind kind = AugmentKind::none;
    float overlay_alpha = 0.5f;
    int shift_radius = 4;
    int crop_source = 0;  // square sizes; 0 = no crop configured
    int crop_target = 0;

    void validate() const {
        if (overlay_alpha < 0.0f || overlay_alpha > 1.0f)
            throw std::invalid_argument("AugmentParams: overlay alpha must be in [0,1]");
        if (shift_radius < 0) throw std::invalid_argument("AugmentParams: shift radius must be >= 0");
        if (kind == AugmentKind::crop && crop_target > crop_source)
            throw std::invalid_argument("AugmentParams: crop target larger than source");
    }
};

// All augmentations below operate on a single observation stored as a
// (C, H, W) float tensor in [0, 1] with C = 3k, frame-major channel order.

// Procedural still image from the augmentation namespace. The namespace seed
// must come from the `augment` substream so draws can never collide with the
// evaluation-video namespace.
inline Frame image_source_next(std::uint64_t augment_namespace_seed, RngStream& rng, int h, int w) {
    const int index = static_cast<int>(rng.uniform_index(1000));
    const double t = rng.uniform(0.0, 100.0);
    ProceduralVideo still(augment_namespace_seed, index);
    Frame f(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = still.value(static_cast<double>(x) / w,
                                             static_cast<double>(y) / h, t, c);
                f.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0l, 255l));
            }
    return f;
}

// delta_x(o) = alpha * o + (1 - alpha) * x, applied to every stacked frame.
inline void overlay(float* obs, int channels, int h, int w, const Frame& image, float alpha) {
    if (image.height != h || image.width != w)
        throw std::invalid_argument("overlay: image shape mismatch");
    if (channels % 3 != 0) throw std::invalid_argument("overlay: channel count not a multiple of 3");
    const size_t hw = static_cast<size_t>(h) * w;
    for (int ch = 0; ch < channels; ++ch) {
        const int c = ch % 3;
        float* plane = obs + ch * hw;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float xv = image.at(y, x, c) / 255.0f;
                float v = alpha * plane[y * w + x] + (1.0f - alpha) * xv;
                plane[y * w + x] = std::clamp(v, 0.0f, 1.0f);
            }
    }
}

// One 3x3 kernel, shared by all frames and channels of the observation;
// reflection padding; per-frame min-max renormalization into [0,1]
// (identity when the frame is constant).
inline void random_conv_with_kernel(float* obs, int channels, int h, int w, const double kernel[9]) {
    if (channels % 3 != 0) throw std::invalid_argument("random_conv: channels not a multiple of 3");
    const size_t hw = static_cast<size_t>(h) * w;
    const int frames = channels / 3;
    for (int fr = 0; fr < frames; ++fr) {
        float lo = 1e30f, hi = -1e30f;
        std::vector<float> out(3 * hw);
        for (int c = 0; c < 3; ++c) {
            const float* plane = obs + (fr * 3 + c) * hw;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx) {
                            int sy = y + ky, sx = x + kx;
                            if (sy < 0) sy = -sy;            // reflect
                            if (sy >= h) sy = 2 * h - 2 - sy;
                            if (sx < 0) sx = -sx;
                            if (sx >= w) sx = 2 * w - 2 - sx;
                            acc += kernel[(ky + 1) * 3 + (kx + 1)] * plane[sy * w + sx];
                        }
                    const float v = static_cast<float>(acc);
                    out[c * hw + y * w + x] = v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
        }
        for (int c = 0; c < 3; ++c) {
            float* plane = obs + (fr * 3 + c) * hw;
            for (size_t i = 0; i < hw; ++i) {
                const float v = out[c * hw + i];
                plane[i] = (hi > lo) ? (v - lo) / (hi - lo) : std::clamp(v, 0.0f, 1.0f);
            }
        }
    }
}

// Kernel weights drawn i.i.d. N(0, 1/9).
inline void random_conv(float* obs, int channels, int h, int w, RngStream& rng) {
    double kernel[9];
    for (double& k : kernel) k = rng.normal() / 3.0;
    random_conv_with_kernel(obs, channels, h, w, kernel);
}

struct Hsv {
    float h, s, v;  // h in [0,360), s,v in [0,1]
};

inline Hsv rgb_to_hsv(float r, float g, float b) {
    const float mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
    Hsv out{0.0f, mx > 0.0f ? d / mx : 0.0f, mx};
    if (d > 0.0f) {
        if (mx == r)
            out.h = 60.0f * std::fmod((g - b) / d + 6.0f, 6.0f);
        else if (mx == g)
            out.h = 60.0f * ((b - r) / d + 2.0f);
        else
            out.h = 60.0f * ((r - g) / d + 4.0f);
    }
    return out;
}

struct HsvBox {
    float h_lo = 0.0f, h_hi = 360.0f;
    float s_lo = 0.0f, s_hi = 1.0f;
    float v_lo = 0.0f, v_hi = 1.0f;

    bool contains(const Hsv& p) const {
        return p.h >= h_lo && p.h <= h_hi && p.s >= s_lo && p.s <= s_hi && p.v >= v_lo &&
               p.v <= v_hi;
    }

    // Defaults select the clean-tier gray surface with +-10% tolerance.
    static HsvBox clean_background() {
        HsvBox b;
        b.s_hi = 0.1f;
        b.v_lo = 128.0f / 255.0f - 0.1f;
        b.v_hi = 128.0f / 255.0f + 0.1f;
        return b;
    }
};

// Replace background pixels (HSV inside `box`) by the image; task pixels
// stay crisp.
inline void splice(float* obs, int channels, int h, int w, const Frame& image, const HsvBox& box) {
    if (image.height != h || image.width != w)
        throw std::invalid_argument("splice: image shape mismatch");
    const size_t hw = static_cast<size_t>(h) * w;
    const int frames = channels / 3;
    for (int fr = 0; fr < frames; ++fr) {
        float* r = obs + (fr * 3 + 0) * hw;
        float* g = obs + (fr * 3 + 1) * hw;
        float* b = obs + (fr * 3 + 2) * hw;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                if (box.contains(rgb_to_hsv(r[i], g[i], b[i]))) {
                    r[i] = image.at(y, x, 0) / 255.0f;
                    g[i] = image.at(y, x, 1) / 255.0f;
                    b[i] = image.at(y, x, 2) / 255.0f;
                }
            }
    }
}

inline void shift_by(float* obs, int channels, int h, int w, int dx, int dy) {
    if (dx == 0 && dy == 0) return;
    const size_t hw = static_cast<size_t>(h) * w;
    std::vector<float> tmp(hw);
    for (int ch = 0; ch < channels; ++ch) {
        float* plane = obs + ch * hw;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int sy = std::clamp(y - dy, 0, h - 1);
                const int sx = std::clamp(x - dx, 0, w - 1);
                tmp[y * w + x] = plane[sy * w + sx];
            }
        std::copy(tmp.begin(), tmp.end(), plane);
    }
}

// All frames translated by one shared integer offset in [-radius, radius]^2,
// edge pixels replicated.
inline void random_shift(float* obs, int channels, int h, int w, int radius, RngStream& rng) {
    if (radius >= std::min(h, w) / 2)
        throw std::invalid_argument("random_shift: radius too large");
    if (radius == 0) return;
    const int dx = rng.uniform_int(-radius, radius);
    const int dy = rng.uniform_int(-radius, radius);
    shift_by(obs, channels, h, w, dx, dy);
}

inline std::vector<float> crop_at(const float* obs, int channels, int h, int w, int th, int tw,
                                  int oy, int ox) {
    std::vector<float> out(static_cast<size_t>(channels) * th * tw);
    for (int ch = 0; ch < channels; ++ch)
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x)
                out[(static_cast<size_t>(ch) * th + y) * tw + x] =
                    obs[(static_cast<size_t>(ch) * h + (y + oy)) * w + (x + ox)];
    return out;
}

// One crop window per observation, identical across stacked frames. Returns
// the (C, th, tw) result.
inline std::vector<float> random_crop(const float* obs, int channels, int h, int w, int th, int tw,
                                      RngStream& rng) {
    if (th > h || tw > w) throw std::invalid_argument("random_crop: target larger than source");
    const int oy = static_cast<int>(rng.uniform_index(h - th + 1));
    const int ox = static_cast<int>(rng.uniform_index(w - tw + 1));
    return crop_at(obs, channels, h, w, th, tw, oy, ox);
}

}  // namespace madi
