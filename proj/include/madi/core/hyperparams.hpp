#pragma once

#include <stdexcept>

namespace madi {

// Training hyperparameters. Defaults follow the simulation column of the
// reference configuration; sizes are scaled-down desk defaults.
struct HyperParams {
    float lr_actor = 1e-3f;
    float lr_critic = 1e-3f;
    float lr_masker = 1e-3f;
    float lr_temperature = 1e-4f;
    float adam_beta1 = 0.9f;
    float adam_beta2 = 0.999f;
    float adam_beta1_temperature = 0.5f;
    float adam_beta2_temperature = 0.999f;
    float discount = 0.99f;
    int frame_stack = 3;
    int action_repeat = 4;
    int batch_size = 128;
    long buffer_capacity = 20000;
    long total_steps = 20000;
    int init_collect_steps = 1000;
    int actor_update_period = 2;    // k_a
    int target_update_period = 2;   // k_tar
    int masker_update_period = 1;   // k_m
    float tau_critic = 0.01f;
    float tau_encoder = 0.05f;
    float init_temperature = 0.1f;
    float svea_alpha = 0.5f;
    float svea_beta = 0.5f;
    long eval_interval = 1000;
    int eval_episodes = 10;

    // Desk-scale network sizes (the full-scale stack is 11 encoder layers at
    // 84x84 with trunk width 1024; both remain reachable through config).
    int encoder_layers = 5;
    int encoder_channels = 32;
    int masker_channels = 32;
    int trunk_dim = 512;
    int projection_dim = 100;

    void validate() const {
        if (lr_actor <= 0 || lr_critic <= 0 || lr_masker <= 0 || lr_temperature <= 0)
            throw std::invalid_argument("HyperParams: learning rates must be > 0");
        if (!(discount > 0.0f && discount <= 1.0f))
            throw std::invalid_argument("HyperParams: discount must be in (0,1]");
        if (!(tau_critic > 0.0f && tau_critic <= 1.0f) || !(tau_encoder > 0.0f && tau_encoder <= 1.0f))
            throw std::invalid_argument("HyperParams: tau must be in (0,1]");
        if (svea_alpha + svea_beta != 1.0f)
            throw std::invalid_argument("HyperParams: svea_alpha + svea_beta must equal 1");
        if (frame_stack < 1 || batch_size < 1 || buffer_capacity < 1)
            throw std::invalid_argument("HyperParams: invalid sizes");
    }
};

}  // namespace madi
