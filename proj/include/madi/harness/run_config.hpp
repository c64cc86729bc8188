#pragma once

#include <string>
#include <vector>

#include "madi/agents/algorithm.hpp"
#include "madi/core/hyperparams.hpp"
#include "madi/envs/spec.hpp"

namespace madi {

// Fully resolved run description: what a config file parses into.
struct RunConfig {
    Algo algorithm = Algo::sac;
    EnvSpec env;
    HyperParams hp;
    std::vector<Tier> eval_tiers = {Tier::clean, Tier::video_easy, Tier::video_hard};
    float distract_intensity = 0.1f;
    long train_log_interval = 100;
    std::uint64_t seed = 0;

    void validate() const {
        env.validate();
        hp.validate();
        if (eval_tiers.empty()) throw std::invalid_argument("RunConfig: no eval tiers");
        if (train_log_interval < 1)
            throw std::invalid_argument("RunConfig: train_log_interval must be >= 1");
        if (distract_intensity < 0.0f || distract_intensity > 1.0f)
            throw std::invalid_argument("RunConfig: distract_intensity must be in [0,1]");
    }
};

}  // namespace madi
