#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "madi/cli/config.hpp"
#include "madi/envs/ppm.hpp"
#include "madi/harness/analysis.hpp"
#include "madi/harness/welch.hpp"

namespace madi {

struct RunData {
    std::string algorithm;
    std::uint64_t seed = 0;
    long total_steps = 0;
    // tier -> (step, mean_return) in file order
    std::map<std::string, std::vector<std::pair<long, double>>> eval;
};

inline RunData read_run_dir(const std::string& dir) {
    RunData run;
    const RunConfig cfg = load_run_config(dir + "/config.resolved");
    run.algorithm = algo_name(cfg.algorithm);
    run.seed = cfg.seed;
    run.total_steps = cfg.hp.total_steps;
    std::ifstream in(dir + "/eval.csv");
    if (!in) throw std::runtime_error("missing eval.csv in " + dir);
    std::string line;
    if (!std::getline(in, line) || line != "step,tier,mean_return")
        throw std::runtime_error("bad eval.csv header in " + dir);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string step_s, tier_s, ret_s;
        if (!std::getline(ss, step_s, ',') || !std::getline(ss, tier_s, ',') ||
            !std::getline(ss, ret_s))
            throw std::runtime_error("corrupt eval.csv row in " + dir + ": " + line);
        run.eval[tier_s].emplace_back(std::stol(step_s), std::stod(ret_s));
    }
    if (run.eval.empty()) throw std::runtime_error("empty eval.csv in " + dir);
    return run;
}

struct SummaryRow {
    std::string algorithm, tier;
    FinalScore score;
    double p_vs_best = -1.0;  // < 0 -> not applicable
};

// Per (algorithm, tier): FinalScore over seeds and Welch p against the
// best-scoring algorithm on that tier.
inline std::vector<SummaryRow> summarize_runs(const std::vector<RunData>& runs) {
    if (runs.empty()) throw std::runtime_error("summarize_runs: no runs");
    std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
    for (const auto& run : runs)
        for (const auto& [tier, points] : run.eval)
            cells[{run.algorithm, tier}].push_back(final_window_mean(points, run.total_steps));
    std::vector<SummaryRow> rows;
    for (const auto& [key, per_seed] : cells) {
        SummaryRow r;
        r.algorithm = key.first;
        r.tier = key.second;
        r.score = final_score(per_seed);
        rows.push_back(std::move(r));
    }
    // Welch p against the best mean in each tier.
    std::map<std::string, const SummaryRow*> best;
    for (const auto& r : rows) {
        auto it = best.find(r.tier);
        if (it == best.end() || r.score.mean > it->second->score.mean) best[r.tier] = &r;
    }
    for (auto& r : rows) {
        const SummaryRow* b = best[r.tier];
        if (b == &r || b->algorithm == r.algorithm) continue;
        if (r.score.per_seed.size() < 2 || b->score.per_seed.size() < 2) continue;
        try {
            r.p_vs_best = welch_t_test(r.score.per_seed, b->score.per_seed).p;
        } catch (const std::invalid_argument&) {
            // degenerate variance on both sides with equal means -> skip
        }
    }
    return rows;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "algorithm,tier,mean,stderr,p_vs_best\n";
    char line[256];
    for (const auto& r : rows) {
        std::string se, p;
        if (r.score.per_seed.size() >= 2) {
            std::snprintf(line, sizeof(line), "%.6f", r.score.stderr_);
            se = line;
        }
        if (r.p_vs_best >= 0.0) {
            std::snprintf(line, sizeof(line), "%.6f", r.p_vs_best);
            p = line;
        }
        std::snprintf(line, sizeof(line), "%s,%s,%.6f,%s,%s\n", r.algorithm.c_str(), r.tier.c_str(),
                      r.score.mean, se.c_str(), p.c_str());
        out << line;
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

// Courtesy learning-curve plot (PPM): seed-averaged return per algorithm.
inline void write_learning_curve_ppm(const std::vector<RunData>& runs, const std::string& tier,
                                     const std::string& path) {
    const int W = 480, H = 320, margin = 20;
    Frame img(H, W);
    std::fill(img.pixels.begin(), img.pixels.end(), static_cast<std::uint8_t>(255));
    // mean curve per algorithm: step -> mean over runs
    std::map<std::string, std::map<long, std::pair<double, int>>> acc;
    for (const auto& run : runs) {
        auto it = run.eval.find(tier);
        if (it == run.eval.end()) continue;
        for (const auto& [step, ret] : it->second) {
            auto& cell = acc[run.algorithm][step];
            cell.first += ret;
            cell.second += 1;
        }
    }
    if (acc.empty()) return;
    long max_step = 1;
    double lo = 0.0, hi = 1e-9;
    for (const auto& [_, curve] : acc)
        for (const auto& [step, cell] : curve) {
            max_step = std::max(max_step, step);
            const double v = cell.first / cell.second;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const std::uint8_t palette[6][3] = {{200, 30, 30},  {30, 120, 200}, {30, 160, 60},
                                        {200, 140, 20}, {140, 60, 180}, {60, 60, 60}};
    auto px = [&](long step) {
        return margin + static_cast<int>((W - 2.0 * margin) * step / max_step);
    };
    auto py = [&](double v) {
        return H - margin - static_cast<int>((H - 2.0 * margin) * (v - lo) / (hi - lo));
    };
    // axes
    for (int x = margin; x < W - margin; ++x)
        for (int c = 0; c < 3; ++c) img.at(H - margin, x, c) = 0;
    for (int y = margin; y <= H - margin; ++y)
        for (int c = 0; c < 3; ++c) img.at(y, margin, c) = 0;
    int color = 0;
    for (const auto& [algo, curve] : acc) {
        const auto* rgb = palette[color++ % 6];
        int prev_x = -1, prev_y = -1;
        for (const auto& [step, cell] : curve) {
            const int x1 = px(step), y1 = py(cell.first / cell.second);
            if (prev_x >= 0) {
                const int steps_n = std::max(std::abs(x1 - prev_x), std::abs(y1 - prev_y)) + 1;
                for (int s = 0; s <= steps_n; ++s) {
                    const int x = prev_x + (x1 - prev_x) * s / steps_n;
                    const int y = prev_y + (y1 - prev_y) * s / steps_n;
                    if (y >= 0 && y < H && x >= 0 && x < W)
                        for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
                }
            }
            prev_x = x1;
            prev_y = y1;
        }
    }
    write_ppm(path, img);
}

// report entry point: reads run dirs, writes summary.csv and per-tier plots
// into `out_dir`.
inline std::vector<SummaryRow> report_runs(const std::vector<std::string>& run_dirs,
                                           const std::string& out_dir) {
    if (run_dirs.empty()) throw std::runtime_error("report: no run directories");
    std::vector<RunData> runs;
    for (const auto& dir : run_dirs) runs.push_back(read_run_dir(dir));
    auto rows = summarize_runs(runs);
    std::filesystem::create_directories(out_dir);
    write_summary_csv(rows, out_dir + "/summary.csv");
    std::vector<std::string> tiers;
    for (const auto& r : rows)
        if (std::find(tiers.begin(), tiers.end(), r.tier) == tiers.end()) tiers.push_back(r.tier);
    for (const auto& t : tiers) write_learning_curve_ppm(runs, t, out_dir + "/curve_" + t + ".ppm");
    return rows;
}

}  // namespace madi
