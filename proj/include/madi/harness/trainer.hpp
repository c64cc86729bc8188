#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

#include "madi/agents/agent.hpp"
#include "madi/envs/ppm.hpp"
#include "madi/harness/analysis.hpp"
#include "madi/harness/evaluate.hpp"
#include "madi/harness/run_config.hpp"

namespace madi {

// Raised when a checkpoint disagrees with the loading model (CLI exit 4).
struct CheckpointMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
    Algo algorithm = Algo::sac;
    TaskId task = TaskId::reacher_dense;
    int frame_stack = 3, action_dim = 2;
    int encoder_layers = 5, encoder_channels = 32, masker_channels = 32;
    int trunk_dim = 512, projection_dim = 100;
    int frame_size = 48, episode_len = 150, action_repeat = 4;
    std::uint64_t seed = 0;
};

inline void save_agent_checkpoint(Agent<float>& agent, const RunConfig& cfg,
                                  const std::string& path) {
    const std::uint64_t seed = cfg.seed;
    Tensor<float> meta({14});
    meta.v = {static_cast<float>(static_cast<int>(cfg.algorithm)),
              static_cast<float>(static_cast<int>(cfg.env.task)),
              static_cast<float>(cfg.hp.frame_stack),
              static_cast<float>(cfg.env.action_dim),
              static_cast<float>(cfg.hp.encoder_layers),
              static_cast<float>(cfg.hp.encoder_channels),
              static_cast<float>(cfg.hp.masker_channels),
              static_cast<float>(cfg.hp.trunk_dim),
              static_cast<float>(cfg.hp.projection_dim),
              static_cast<float>(cfg.env.frame_size),
              static_cast<float>(cfg.env.episode_len),
              static_cast<float>(cfg.env.action_repeat),
              static_cast<float>(static_cast<std::uint32_t>(seed & 0xffffffffull)),
              static_cast<float>(static_cast<std::uint32_t>(seed >> 32))};
    ParamSet<float> meta_set;
    meta_set.add("fields", meta);
    auto sets = agent.named_params();
    sets.emplace_back("meta", meta_set);
    ckpt::save(path, sets);
}

// Rebuilds an agent from a checkpoint alone. The optimizer state is not part
// of the format; loaded agents are evaluation snapshots.
inline std::pair<std::unique_ptr<Agent<float>>, CheckpointMeta> load_agent_checkpoint(
    const std::string& path) {
    auto loaded = ckpt::load(path);
    auto it = loaded.find("meta/fields");
    if (it == loaded.end() || it->second.data.size() != 14)
        throw CheckpointMismatch("checkpoint: missing meta tensor in " + path);
    const auto& m = it->second.data;
    CheckpointMeta meta;
    meta.algorithm = static_cast<Algo>(static_cast<int>(m[0]));
    meta.task = static_cast<TaskId>(static_cast<int>(m[1]));
    meta.frame_stack = static_cast<int>(m[2]);
    meta.action_dim = static_cast<int>(m[3]);
    meta.encoder_layers = static_cast<int>(m[4]);
    meta.encoder_channels = static_cast<int>(m[5]);
    meta.masker_channels = static_cast<int>(m[6]);
    meta.trunk_dim = static_cast<int>(m[7]);
    meta.projection_dim = static_cast<int>(m[8]);
    meta.frame_size = static_cast<int>(m[9]);
    meta.episode_len = static_cast<int>(m[10]);
    meta.action_repeat = static_cast<int>(m[11]);
    meta.seed = static_cast<std::uint64_t>(static_cast<std::uint32_t>(m[12])) |
                (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m[13])) << 32);
    HyperParams hp;
    hp.frame_stack = meta.frame_stack;
    hp.encoder_layers = meta.encoder_layers;
    hp.encoder_channels = meta.encoder_channels;
    hp.masker_channels = meta.masker_channels;
    hp.trunk_dim = meta.trunk_dim;
    hp.projection_dim = meta.projection_dim;
    const AlgorithmSpec algo = AlgorithmSpec::make(meta.algorithm, meta.frame_size);
    const int render = meta.frame_size + 2 * algo.render_margin();
    auto agent = std::make_unique<Agent<float>>(hp, algo, render, meta.action_dim, meta.seed);
    try {
        for (auto& [name, ps] : agent->named_params()) ckpt::restore(loaded, name, ps);
    } catch (const std::runtime_error& e) {
        throw CheckpointMismatch(e.what());
    }
    return {std::move(agent), meta};
}

inline EnvSpec env_spec_for(const RunConfig& cfg, const AlgorithmSpec& algo) {
    EnvSpec spec = cfg.env;
    spec.render_margin = algo.render_margin();
    spec.validate();
    return spec;
}

// Center crop of the newest frame to the network input size (identity unless
// the env renders with a margin).
inline Frame center_crop(const Frame& f, int size) {
    if (f.height == size && f.width == size) return f;
    Frame out(size, size);
    const int oy = (f.height - size) / 2, ox = (f.width - size) / 2;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = f.at(y + oy, x + ox, c);
    return out;
}

// Full training run: writes train.csv, eval.csv, periodic mask PGM dumps and
// final.ckpt into `out_dir`. Deterministic per (config, seed).
inline void train_run(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const AlgorithmSpec algo = AlgorithmSpec::make(cfg.algorithm, cfg.env.frame_size);
    const EnvSpec spec = env_spec_for(cfg, algo);
    RngStream master(cfg.seed);
    DistractionSpec train_dspec =
        DistractionSpec::for_tier(Tier::clean, master.substream("videos.clean").seed());
    ReacherEnv env(spec, train_dspec, master.substream("env.train"), cfg.hp.frame_stack);
    Agent<float> agent(cfg.hp, algo, spec.render_size(), spec.action_dim, cfg.seed);
    ReplayBuffer buffer(cfg.hp.buffer_capacity, cfg.hp.frame_stack, spec.render_size(),
                        spec.render_size(), spec.action_dim);

    std::ofstream train_csv(out_dir + "/train.csv");
    std::ofstream eval_csv(out_dir + "/eval.csv");
    if (!train_csv || !eval_csv) throw std::runtime_error("train_run: cannot open metric files");
    train_csv << "step,loss_q,loss_pi,loss_alpha,alpha,mask_task_mean,mask_bg_mean\n";
    eval_csv << "step,tier,mean_return\n";

    Observation cur_obs = env.reset();
    float last_loss_pi = 0.0f, last_loss_alpha = 0.0f;
    char line[256];
    for (long t = 1; t <= cfg.hp.total_steps; ++t) {
        auto info = agent.agent_step(t, env, buffer, cur_obs);
        if (info.updated_actor) {
            last_loss_pi = info.loss_pi;
            last_loss_alpha = info.loss_alpha;
        }
        if (info.updated_critic && t % cfg.train_log_interval == 0) {
            const auto [mt, mb] = mask_stats(agent, cur_obs, env.target_disc_pixels());
            std::snprintf(line, sizeof(line), "%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", t,
                          static_cast<double>(info.loss_q), static_cast<double>(last_loss_pi),
                          static_cast<double>(last_loss_alpha), static_cast<double>(agent.alpha()),
                          static_cast<double>(mt), static_cast<double>(mb));
            train_csv << line;
        }
        if (t % cfg.hp.eval_interval == 0) {
            for (Tier tier : cfg.eval_tiers) {
                const std::string tname = tier_name(tier);
                DistractionSpec d = DistractionSpec::for_tier(
                    tier, master.substream("videos." + tname).seed(), cfg.distract_intensity);
                const double ret =
                    evaluate(agent, spec, d, cfg.hp.eval_episodes,
                             master.substream("eval." + tname + "." + std::to_string(t)));
                std::snprintf(line, sizeof(line), "%ld,%s,%.6f\n", t, tname.c_str(), ret);
                eval_csv << line;
            }
            // Mask snapshot on the newest training frame.
            const Frame newest = center_crop(cur_obs.frames.back(), agent.net_size());
            const int net = agent.net_size();
            Tensor<float> x({1, 3, net, net});
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < net; ++y)
                    for (int xx = 0; xx < net; ++xx)
                        x.v[(static_cast<long>(c) * net + y) * net + xx] = newest.at(y, xx, c) / 255.0f;
            typename Masker<float>::Cache mc;
            agent.masker().forward(x, net, net, mc);
            std::snprintf(line, sizeof(line), "%s/mask_step%06ld.pgm", out_dir.c_str(), t);
            write_pgm_unit(line, mc.mask.data(), net, net);
        }
    }
    save_agent_checkpoint(agent, cfg, out_dir + "/final.ckpt");
    if (!train_csv || !eval_csv) throw std::runtime_error("train_run: metric write failed");
}

}  // namespace madi
