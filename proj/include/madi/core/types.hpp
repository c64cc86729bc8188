#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace madi {

// One RGB frame, 8-bit interleaved (HWC). Network input is the same data
// divided by 255; the round-trip is exact on the whole 8-bit domain.
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3, HWC

    Frame() = default;
    Frame(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, 0) {
        validate();
    }

    void validate() const {
        if (height < 16 || width < 16)
            throw std::invalid_argument("Frame: minimum size is 16x16");
        if (pixels.size() != static_cast<size_t>(height) * width * 3)
            throw std::invalid_argument("Frame: pixel buffer size mismatch");
    }

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
};

// k stacked frames, newest last. The stacked view is CHW with frame-major
// channel order: channels [0..3) belong to the oldest frame.
struct Observation {
    std::vector<Frame> frames;

    int stack() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames[0].height; }
    int width() const { return frames.empty() ? 0 : frames[0].width; }

    void validate() const {
        if (frames.empty()) throw std::invalid_argument("Observation: empty frame stack");
        for (const auto& f : frames) {
            f.validate();
            if (f.height != height() || f.width != width())
                throw std::invalid_argument("Observation: inconsistent frame sizes");
        }
    }

    // (3k, H, W) uint8 tensor, frame-major.
    std::vector<std::uint8_t> stacked_u8() const {
        const size_t hw = static_cast<size_t>(height()) * width();
        std::vector<std::uint8_t> out(frames.size() * 3 * hw);
        size_t idx = 0;
        for (const auto& f : frames)
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < f.height; ++y)
                    for (int x = 0; x < f.width; ++x) out[idx++] = f.at(y, x, c);
        return out;
    }
};

struct Action {
    std::vector<float> values;  // each in [-1, 1]

    void validate() const {
        for (float v : values)
            if (!(v >= -1.0f && v <= 1.0f))
                throw std::invalid_argument("Action: component outside [-1, 1]");
    }
};

// Replay element. bootstrap=true means the successor value is bootstrapped
// (time-limit episode end, the only kind of end in the synthetic suite).
struct Transition {
    Observation obs;
    Action action;
    float reward = 0.0f;
    Observation next_obs;
    bool bootstrap = true;
};

}  // namespace madi
