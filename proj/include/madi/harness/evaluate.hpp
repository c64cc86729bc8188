#pragma once

#include "madi/agents/agent.hpp"
#include "madi/envs/reacher.hpp"

namespace madi {

// Mean undiscounted return of the deterministic policy (action = tanh(mu))
// over E episodes. Never touches training state: the environment and all
// randomness live on the rng passed in.
template <typename T>
double evaluate(Agent<T>& agent, const EnvSpec& spec, const DistractionSpec& dspec, int episodes,
                RngStream rng) {
    if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
    ReacherEnv env(spec, dspec, rng.substream("env"), agent.hp().frame_stack);
    RngStream act_rng = rng.substream("act");
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        Observation obs = env.reset();
        double ep_ret = 0.0;
        while (!env.done()) {
            const Action a = agent.act(obs, true, act_rng);
            StepResult res = env.step(a);
            ep_ret += res.reward;
            obs = res.obs;
        }
        total += ep_ret;
    }
    return total / episodes;
}

// Analytic-style oracle rollout with the scripted greedy controller, used by
// tests and sanity checks.
inline double scripted_return(const EnvSpec& spec, const DistractionSpec& dspec, RngStream rng,
                              int episodes, int frame_stack = 3) {
    ReacherEnv env(spec, dspec, rng, frame_stack);
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        env.reset();
        double ep_ret = 0.0;
        while (!env.done()) ep_ret += env.step(env.scripted_action()).reward;
        total += ep_ret;
    }
    return total / episodes;
}

}  // namespace madi
