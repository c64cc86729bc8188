#pragma once

#include <stdexcept>
#include <string>

namespace madi {

enum class Tier { clean, video_easy, video_hard, distracting };

inline const char* tier_name(Tier t) {
    switch (t) {
        case Tier::clean: return "clean";
        case Tier::video_easy: return "video_easy";
        case Tier::video_hard: return "video_hard";
        case Tier::distracting: return "distracting";
    }
    return "?";
}

inline Tier tier_from_name(const std::string& s) {
    if (s == "clean") return Tier::clean;
    if (s == "video_easy") return Tier::video_easy;
    if (s == "video_hard") return Tier::video_hard;
    if (s == "distracting") return Tier::distracting;
    throw std::invalid_argument("unknown tier: " + s);
}

enum class TaskId { reacher_dense, reacher_sparse };

inline TaskId task_from_name(const std::string& s) {
    if (s == "reacher_dense") return TaskId::reacher_dense;
    if (s == "reacher_sparse") return TaskId::reacher_sparse;
    throw std::invalid_argument("unknown task: " + s);
}

inline const char* task_name(TaskId t) {
    return t == TaskId::reacher_dense ? "reacher_dense" : "reacher_sparse";
}

struct EnvSpec {
    TaskId task = TaskId::reacher_dense;
    int frame_size = 48;     // square frames, H = W
    int episode_len = 150;   // control steps per episode
    int action_dim = 2;
    int action_repeat = 4;
    int render_margin = 0;   // extra pixels per side for crop-based baselines

    // Reward parameters of the visual-reacher formula.
    float reward_coeff = 800.0f;
    float reward_clip_lo = 0.0f;
    float reward_clip_hi = 4.0f;
    float sparse_threshold = 0.1f;

    int render_size() const { return frame_size + 2 * render_margin; }

    void validate() const {
        if (episode_len < 1) throw std::invalid_argument("EnvSpec: episode_len must be >= 1");
        if (frame_size < 16 || frame_size > 128)
            throw std::invalid_argument("EnvSpec: frame_size must be within [16, 128]");
        if (action_repeat < 1) throw std::invalid_argument("EnvSpec: action_repeat must be >= 1");
        if (render_margin < 0) throw std::invalid_argument("EnvSpec: render_margin must be >= 0");
    }
};

struct DistractionSpec {
    Tier tier = Tier::clean;
    int pool_size = 0;          // 0 -> tier default (10 easy, 100 hard, 100*(1+intensity) distracting)
    float intensity = 0.1f;     // lambda, used only by tier=distracting
    bool keep_surface = false;  // 0 -> tier default below
    std::uint64_t video_namespace_seed = 0;  // filled from the run's video substream

    int effective_pool_size() const {
        if (pool_size > 0) return pool_size;
        switch (tier) {
            case Tier::clean: return 1;
            case Tier::video_easy: return 10;
            case Tier::video_hard: return 100;
            case Tier::distracting: return static_cast<int>(100 * (1.0f + intensity) + 0.5f);
        }
        return 1;
    }

    bool effective_keep_surface() const {
        // The easy tier keeps a static band of the clean surface visible, and
        // so does the distracting tier (the agent can orient itself).
        return tier == Tier::video_easy || tier == Tier::distracting || keep_surface;
    }

    void validate() const {
        if (effective_pool_size() < 1) throw std::invalid_argument("DistractionSpec: pool size must be >= 1");
        if (intensity < 0.0f || intensity > 1.0f)
            throw std::invalid_argument("DistractionSpec: intensity must be in [0, 1]");
    }

    static DistractionSpec for_tier(Tier t, std::uint64_t video_ns_seed, float lambda = 0.1f) {
        DistractionSpec d;
        d.tier = t;
        d.intensity = lambda;
        d.video_namespace_seed = video_ns_seed;
        return d;
    }
};

}  // namespace madi
