#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "madi/cli/config.hpp"
#include "madi/harness/report.hpp"
#include "madi/harness/trainer.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheckpoint = 4;

// MADI_SEED overrides --seed when present.
std::uint64_t resolve_seed(std::uint64_t cli_seed) {
    const char* env = std::getenv("MADI_SEED");
    if (!env) return cli_seed;
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(env, &pos);
        if (pos != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw madi::ConfigError(std::string("MADI_SEED is not an integer: ") + env);
    }
}

int cmd_train(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_dir) {
    madi::RunConfig cfg = madi::load_run_config(config_path);
    if (seed_set) cfg.seed = seed;
    cfg.seed = resolve_seed(cfg.seed);
    std::filesystem::create_directories(out_dir);
    madi::write_resolved_config(cfg, out_dir + "/config.resolved");
    madi::train_run(cfg, out_dir);
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& tier_name, int episodes) {
    const madi::Tier tier = madi::tier_from_name(tier_name);  // throws -> exit 2
    auto [agent, meta] = madi::load_agent_checkpoint(ckpt_path);
    madi::EnvSpec spec;
    spec.task = meta.task;
    spec.frame_size = meta.frame_size;
    spec.episode_len = meta.episode_len;
    spec.action_repeat = meta.action_repeat;
    spec.render_margin = (agent->render_size() - meta.frame_size) / 2;
    madi::RngStream master(meta.seed);
    const madi::DistractionSpec d = madi::DistractionSpec::for_tier(
        tier, master.substream(std::string("videos.") + tier_name).seed());
    const double ret = madi::evaluate(*agent, spec, d, episodes, master.substream("cli-eval"));
    std::printf("tier=%s mean_return=%.6f\n", tier_name.c_str(), ret);
    return 0;
}

int cmd_masks(const std::string& ckpt_path, const std::string& tier_name, int frames,
              const std::string& out_dir) {
    const madi::Tier tier = madi::tier_from_name(tier_name);
    auto [agent, meta] = madi::load_agent_checkpoint(ckpt_path);
    if (!agent->algo().use_masker)
        throw madi::CheckpointMismatch("checkpoint has no masker: " + ckpt_path);
    madi::EnvSpec spec;
    spec.task = meta.task;
    spec.frame_size = meta.frame_size;
    spec.episode_len = meta.episode_len;
    spec.action_repeat = meta.action_repeat;
    madi::RngStream master(meta.seed);
    const madi::DistractionSpec d = madi::DistractionSpec::for_tier(
        tier, master.substream(std::string("videos.") + tier_name).seed());
    madi::ReacherEnv env(spec, d, master.substream("cli-masks"), meta.frame_stack);
    madi::RngStream act_rng = master.substream("cli-masks.act");
    std::filesystem::create_directories(out_dir);
    madi::Observation obs = env.reset();
    const int net = agent->net_size();
    for (int i = 0; i < frames; ++i) {
        const madi::Frame& newest = obs.frames.back();
        madi::Tensor<float> x({1, 3, net, net});
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < net; ++y)
                for (int xx = 0; xx < net; ++xx)
                    x.v[(static_cast<long>(c) * net + y) * net + xx] = newest.at(y, xx, c) / 255.0f;
        madi::Masker<float>::Cache mc;
        agent->masker().forward(x, net, net, mc);
        madi::Frame masked(net, net);
        for (int y = 0; y < net; ++y)
            for (int xx = 0; xx < net; ++xx) {
                const float m = mc.mask.v[static_cast<long>(y) * net + xx];
                for (int c = 0; c < 3; ++c)
                    masked.at(y, xx, c) =
                        static_cast<std::uint8_t>(newest.at(y, xx, c) * m + 0.5f);
            }
        const std::string base = out_dir + "/";
        madi::write_ppm(base + "obs_" + std::to_string(i) + ".ppm", newest);
        madi::write_pgm_unit(base + "mask_" + std::to_string(i) + ".pgm", mc.mask.data(), net, net);
        madi::write_ppm(base + "masked_" + std::to_string(i) + ".ppm", masked);
        if (env.done()) env.reset();
        obs = env.step(agent->act(obs, true, act_rng)).obs;
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    for (const auto& dir : run_dirs)
        if (!std::filesystem::exists(dir + "/eval.csv"))
            throw madi::ConfigError("not a run directory (missing eval.csv): " + dir);
    const auto rows = madi::report_runs(run_dirs, out_dir);
    for (const auto& r : rows) {
        std::printf("%-10s %-12s mean=%.3f", r.algorithm.c_str(), r.tier.c_str(), r.score.mean);
        if (r.score.per_seed.size() >= 2) std::printf(" stderr=%.3f", r.score.stderr_);
        if (r.p_vs_best >= 0.0) std::printf(" p_vs_best=%.4f", r.p_vs_best);
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MaDi laboratory: masked-distraction RL on the synthetic reacher suite"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", ckpt_path, tier = "clean";
    std::uint64_t seed = 0;
    int episodes = 10, frames = 1;
    std::vector<std::string> run_dirs;

    auto* train = app.add_subcommand("train", "train one run from a config file");
    train->add_option("--config", config_path, "config file")->required();
    auto* seed_opt = train->add_option("--seed", seed, "seed override");
    train->add_option("--out", out_dir, "output directory")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one tier");
    eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    eval->add_option("--tier", tier, "distraction tier")->required();
    eval->add_option("--episodes", episodes, "episode count");

    auto* masks = app.add_subcommand("masks", "render mask triplets from a checkpoint");
    masks->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    masks->add_option("--tier", tier, "distraction tier")->required();
    masks->add_option("--frames", frames, "frame count");
    masks->add_option("--out", out_dir, "output directory");

    auto* report = app.add_subcommand("report", "aggregate run directories");
    report->add_option("--runs", run_dirs, "run directories")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train))
            return cmd_train(config_path, seed, seed_opt->count() > 0, out_dir);
        if (app.got_subcommand(eval)) return cmd_eval(ckpt_path, tier, episodes);
        if (app.got_subcommand(masks)) return cmd_masks(ckpt_path, tier, frames, out_dir);
        if (app.got_subcommand(report)) return cmd_report(run_dirs, out_dir);
    } catch (const madi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const madi::CheckpointMismatch& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
