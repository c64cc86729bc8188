#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "madi/core/rng.hpp"
#include "madi/core/types.hpp"
#include "madi/envs/spec.hpp"
#include "madi/envs/video.hpp"

namespace madi {

// Binary red-target detector used by the visual reward.
inline bool is_red_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return r > 0.7 * 255.0 && g < 0.3 * 255.0 && b < 0.3 * 255.0;
}

// Radial weight: 1 at the frame center, decaying linearly to 0 at the
// nearest edge.
inline double radial_weight(int y, int x, int h, int w) {
    const double cy = h / 2, cx = w / 2;
    const double edge = std::min(std::min(cx, cy), std::min(w - 1 - cx, h - 1 - cy));
    const double d = std::hypot(x - cx, y - cy);
    return std::max(0.0, 1.0 - d / edge);
}

// r = clip((c/hw) * sum(M ⊙ W), lo, hi). `uniform_weight` replaces W by the
// all-ones matrix (test hook).
inline double reward_visual(const Frame& frame, double c, double clip_lo, double clip_hi,
                            bool uniform_weight = false) {
    if (c <= 0.0) throw std::invalid_argument("reward_visual: c must be > 0");
    const int h = frame.height, w = frame.width;
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (is_red_pixel(frame.at(y, x, 0), frame.at(y, x, 1), frame.at(y, x, 2)))
                acc += uniform_weight ? 1.0 : radial_weight(y, x, h, w);
    return std::clamp(c / (static_cast<double>(h) * w) * acc, clip_lo, clip_hi);
}

// 1 iff the camera is within `threshold` of the target (closed boundary).
inline double reward_sparse_at(double px, double py, double gx, double gy, double threshold) {
    if (threshold <= 0.0) throw std::invalid_argument("reward_sparse: threshold must be > 0");
    return std::hypot(px - gx, py - gy) <= threshold ? 1.0 : 0.0;
}

struct StepResult {
    Observation obs;
    float reward = 0.0f;
    bool done = false;
};

// Deterministic 2-DoF camera reacher. The camera center p and the target g
// live in the unit square; centering the camera centers the target in the
// rendered frame.
class ReacherEnv {
public:
    static constexpr double kMoveScale = 0.05;        // per physics tick
    static constexpr double kDiscRadiusFrac = 0.08;   // of frame width
    static constexpr double kBandFrac = 0.1;          // keep_surface border band
    static constexpr double kMaxRotationDeg = 15.0;   // A_max for the distracting tier

    ReacherEnv(const EnvSpec& spec, const DistractionSpec& dspec, RngStream rng,
               int frame_stack = 3)
        : spec_(spec), dspec_(dspec), rng_(rng), frame_stack_(frame_stack) {
        spec_.validate();
        dspec_.validate();
    }

    const EnvSpec& spec() const { return spec_; }
    const DistractionSpec& dspec() const { return dspec_; }

    Observation reset() {
        gx_ = rng_.uniform();
        gy_ = rng_.uniform();
        px_ = 0.5;
        py_ = 0.5;
        step_ = 0;
        tick_ = 0;
        done_ = false;
        video_index_ = static_cast<int>(rng_.uniform_index(dspec_.effective_pool_size()));
        video_ = ProceduralVideo(dspec_.video_namespace_seed, video_index_);
        const Frame f = render();
        stack_.assign(frame_stack_, f);
        return current_obs();
    }

    StepResult step(const Action& a) {
        if (done_) throw std::runtime_error("ReacherEnv: episode already finished");
        if (static_cast<int>(a.values.size()) != spec_.action_dim)
            throw std::invalid_argument("ReacherEnv: action dimension mismatch");
        a.validate();
        StepResult res;
        Frame last = render();
        for (int rep = 0; rep < spec_.action_repeat; ++rep) {
            px_ = std::clamp(px_ + kMoveScale * a.values[0], 0.0, 1.0);
            py_ = std::clamp(py_ + kMoveScale * a.values[1], 0.0, 1.0);
            ++tick_;
            last = render();
            if (spec_.task == TaskId::reacher_dense) {
                res.reward += static_cast<float>(
                    reward_visual(last, spec_.reward_coeff, spec_.reward_clip_lo, spec_.reward_clip_hi));
            } else {
                res.reward += static_cast<float>(reward_sparse());
            }
        }
        ++step_;
        stack_.erase(stack_.begin());
        stack_.push_back(last);
        done_ = (step_ == spec_.episode_len);
        res.done = done_;
        res.obs = current_obs();
        return res;
    }

    double reward_sparse() const {
        return reward_sparse_at(px_, py_, gx_, gy_, spec_.sparse_threshold);
    }

    // Renders the current state at the spec's render size (frame size plus
    // margin for crop-based baselines).
    Frame render() const {
        const int s = spec_.render_size();
        Frame f(s, s);
        compose_background(f);
        if (dspec_.tier == Tier::distracting && dspec_.intensity > 0.0f) rotate_view(f);
        draw_target(f);
        return f;
    }

    // Ground-truth task pixels (the target disc) in render coordinates.
    std::vector<std::pair<int, int>> target_disc_pixels() const {
        std::vector<std::pair<int, int>> out;
        const int s = spec_.render_size();
        const double cx = (gx_ - px_ + 0.5) * s, cy = (gy_ - py_ + 0.5) * s;
        const double r = kDiscRadiusFrac * s;
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                if (sq(x + 0.5 - cx) + sq(y + 0.5 - cy) <= r * r) out.emplace_back(y, x);
        return out;
    }

    int step_count() const { return step_; }
    bool done() const { return done_; }
    int video_index() const { return video_index_; }
    double camera_x() const { return px_; }
    double camera_y() const { return py_; }
    double target_x() const { return gx_; }
    double target_y() const { return gy_; }

    // Greedy controller for oracle tests: drive the camera straight at the target.
    Action scripted_action() const {
        Action a;
        const double k = 1.0 / (kMoveScale * spec_.action_repeat);
        a.values = {static_cast<float>(std::clamp((gx_ - px_) * k, -1.0, 1.0)),
                    static_cast<float>(std::clamp((gy_ - py_) * k, -1.0, 1.0))};
        return a;
    }

private:
    static double sq(double v) { return v * v; }

    Observation current_obs() const {
        Observation o;
        o.frames = stack_;
        return o;
    }

    int band_width(int s) const { return std::max(2, static_cast<int>(kBandFrac * s + 0.5)); }

    void compose_background(Frame& f) const {
        const int s = f.width;
        if (dspec_.tier == Tier::clean) {
            std::fill(f.pixels.begin(), f.pixels.end(), static_cast<std::uint8_t>(128));
            return;
        }
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                for (int c = 0; c < 3; ++c)
                    f.at(y, x, c) = to_u8(video_.value(static_cast<double>(x) / s,
                                                       static_cast<double>(y) / s, tick_, c));
        if (dspec_.effective_keep_surface()) {
            const int bw = band_width(s);
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x)
                    if (y < bw || y >= s - bw || x < bw || x >= s - bw)
                        for (int c = 0; c < 3; ++c) f.at(y, x, c) = 128;
        }
    }

    void rotate_view(Frame& f) const {
        const int s = f.width;
        const double episode_frac = static_cast<double>(step_) / spec_.episode_len;
        const double theta = dspec_.intensity * kMaxRotationDeg * (M_PI / 180.0) *
                             std::sin(2.0 * M_PI * episode_frac);
        if (theta == 0.0) return;
        const double ct = std::cos(theta), st = std::sin(theta), cc = (s - 1) / 2.0;
        Frame src = f;
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const double dx = x - cc, dy = y - cc;
                int sx = static_cast<int>(std::lround(cc + ct * dx - st * dy));
                int sy = static_cast<int>(std::lround(cc + st * dx + ct * dy));
                sx = std::clamp(sx, 0, s - 1);
                sy = std::clamp(sy, 0, s - 1);
                for (int c = 0; c < 3; ++c) f.at(y, x, c) = src.at(sy, sx, c);
            }
    }

    void draw_target(Frame& f) const {
        const int s = f.width;
        const double cx = (gx_ - px_ + 0.5) * s, cy = (gy_ - py_ + 0.5) * s;
        const double r = kDiscRadiusFrac * s;
        std::uint8_t gb = 0;
        if (dspec_.tier == Tier::distracting) {
            // Hue drift of amplitude lambda; stays within the red detector's band.
            const double episode_frac = static_cast<double>(step_) / spec_.episode_len;
            gb = static_cast<std::uint8_t>(std::lround(
                dspec_.intensity * std::abs(std::sin(2.0 * M_PI * episode_frac)) * 74.0));
        }
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x)
                if (sq(x + 0.5 - cx) + sq(y + 0.5 - cy) <= r * r) {
                    f.at(y, x, 0) = 255;
                    f.at(y, x, 1) = gb;
                    f.at(y, x, 2) = gb;
                }
    }

    static std::uint8_t to_u8(double unit) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(unit * 255.0), 0l, 255l));
    }

    EnvSpec spec_;
    DistractionSpec dspec_;
    RngStream rng_;
    int frame_stack_;
    double px_ = 0.5, py_ = 0.5, gx_ = 0.5, gy_ = 0.5;
    int step_ = 0;
    long tick_ = 0;
    bool done_ = true;
    int video_index_ = 0;
    ProceduralVideo video_;
    std::vector<Frame> stack_;
};

}  // namespace madi
