#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "madi/core/rng.hpp"

namespace madi {

// Procedurally generated background video: one drifting sinusoidal plane per
// channel, fully determined by (namespace seed, video index). The red channel
// is compressed into [0.2, 0.65] so backgrounds never trigger the red-target
// detector (the evaluation videos must not contain strong red).
class ProceduralVideo {
public:
    ProceduralVideo() = default;

    ProceduralVideo(std::uint64_t namespace_seed, int index) {
        RngStream rng = RngStream(namespace_seed).substream("video_" + std::to_string(index));
        for (int c = 0; c < 3; ++c) {
            u_[c] = rng.uniform(0.5, 3.0);
            v_[c] = rng.uniform(0.5, 3.0);
            w_[c] = rng.uniform(0.05, 0.25);
            phi_[c] = rng.uniform(0.0, 1.0);
        }
    }

    // Unit-interval intensity at pixel (x, y), time t, channel c.
    double value(double xn, double yn, double t, int c) const {
        const double s =
            0.5 + 0.5 * std::sin(2.0 * M_PI * (u_[c] * xn + v_[c] * yn + w_[c] * t + phi_[c]));
        if (c == 0) return 0.2 + 0.45 * s;  // red kept below the detector threshold
        return s;
    }

    double param_u(int c) const { return u_[c]; }
    double param_v(int c) const { return v_[c]; }
    double param_w(int c) const { return w_[c]; }
    double param_phi(int c) const { return phi_[c]; }

private:
    double u_[3] = {0, 0, 0}, v_[3] = {0, 0, 0}, w_[3] = {0, 0, 0}, phi_[3] = {0, 0, 0};
};

}  // namespace madi
