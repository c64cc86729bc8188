#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "madi/core/rng.hpp"
#include "madi/core/types.hpp"

namespace madi {

// Batch of transitions in stacked uint8 form, ready for float conversion at
// the network boundary.
struct Batch {
    int size = 0;
    int channels = 0;  // 3k
    int height = 0;
    int width = 0;
    int action_dim = 0;
    std::vector<std::uint8_t> obs;       // (size, channels, H, W)
    std::vector<float> actions;          // (size, action_dim)
    std::vector<float> rewards;          // (size)
    std::vector<std::uint8_t> next_obs;  // (size, channels, H, W)
    std::vector<float> bootstrap;        // (size), 1.0 or 0.0
};

// Ring buffer over uint8 observations. Single-writer; sampling is uniform
// with replacement and deterministic given the rng state.
class ReplayBuffer {
public:
    ReplayBuffer(long capacity, int frame_stack, int height, int width, int action_dim)
        : capacity_(capacity),
          channels_(3 * frame_stack),
          height_(height),
          width_(width),
          action_dim_(action_dim) {
        if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
        obs_size_ = static_cast<size_t>(channels_) * height_ * width_;
        obs_.resize(static_cast<size_t>(capacity_) * obs_size_);
        next_obs_.resize(static_cast<size_t>(capacity_) * obs_size_);
        actions_.resize(static_cast<size_t>(capacity_) * action_dim_);
        rewards_.resize(capacity_);
        bootstrap_.resize(capacity_);
    }

    long size() const { return size_; }
    long capacity() const { return capacity_; }

    void push(const Transition& t) {
        check_shape(t.obs);
        check_shape(t.next_obs);
        if (static_cast<int>(t.action.values.size()) != action_dim_)
            throw std::invalid_argument("ReplayBuffer: action dimension mismatch");
        if (!std::isfinite(t.reward))
            throw std::invalid_argument("ReplayBuffer: non-finite reward");
        const auto o = t.obs.stacked_u8();
        const auto n = t.next_obs.stacked_u8();
        std::copy(o.begin(), o.end(), obs_.begin() + head_ * obs_size_);
        std::copy(n.begin(), n.end(), next_obs_.begin() + head_ * obs_size_);
        std::copy(t.action.values.begin(), t.action.values.end(),
                  actions_.begin() + head_ * action_dim_);
        rewards_[head_] = t.reward;
        bootstrap_[head_] = t.bootstrap ? 1.0f : 0.0f;
        head_ = (head_ + 1) % capacity_;
        if (size_ < capacity_) ++size_;
    }

    Batch sample(int n, RngStream& rng) const {
        if (n < 1 || n > size_) throw std::runtime_error("ReplayBuffer: not enough data to sample");
        Batch b;
        b.size = n;
        b.channels = channels_;
        b.height = height_;
        b.width = width_;
        b.action_dim = action_dim_;
        b.obs.resize(static_cast<size_t>(n) * obs_size_);
        b.next_obs.resize(static_cast<size_t>(n) * obs_size_);
        b.actions.resize(static_cast<size_t>(n) * action_dim_);
        b.rewards.resize(n);
        b.bootstrap.resize(n);
        for (int i = 0; i < n; ++i) {
            const long idx = static_cast<long>(rng.uniform_index(size_));
            std::copy(obs_.begin() + idx * obs_size_, obs_.begin() + (idx + 1) * obs_size_,
                      b.obs.begin() + static_cast<size_t>(i) * obs_size_);
            std::copy(next_obs_.begin() + idx * obs_size_, next_obs_.begin() + (idx + 1) * obs_size_,
                      b.next_obs.begin() + static_cast<size_t>(i) * obs_size_);
            std::copy(actions_.begin() + idx * action_dim_, actions_.begin() + (idx + 1) * action_dim_,
                      b.actions.begin() + static_cast<size_t>(i) * action_dim_);
            b.rewards[i] = rewards_[idx];
            b.bootstrap[i] = bootstrap_[idx];
        }
        return b;
    }

    // Oldest-first view of the stored observation slots, for tests.
    std::vector<long> stored_order() const {
        std::vector<long> order;
        order.reserve(size_);
        long start = (size_ < capacity_) ? 0 : head_;
        for (long i = 0; i < size_; ++i) order.push_back((start + i) % capacity_);
        return order;
    }

    const std::uint8_t* obs_slot(long slot) const { return obs_.data() + slot * obs_size_; }
    float reward_slot(long slot) const { return rewards_[slot]; }

private:
    void check_shape(const Observation& o) const {
        o.validate();
        if (3 * o.stack() != channels_ || o.height() != height_ || o.width() != width_)
            throw std::invalid_argument("ReplayBuffer: observation shape mismatch");
    }

    long capacity_;
    int channels_, height_, width_, action_dim_;
    size_t obs_size_ = 0;
    long head_ = 0;
    long size_ = 0;
    std::vector<std::uint8_t> obs_, next_obs_;
    std::vector<float> actions_, rewards_, bootstrap_;
};

}  // namespace madi
