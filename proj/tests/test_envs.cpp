#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "madi/envs/ppm.hpp"
#include "madi/envs/reacher.hpp"
#include "madi/envs/spec.hpp"
#include "madi/envs/video.hpp"

using namespace madi;

namespace {

EnvSpec small_spec() {
    EnvSpec s;
    s.frame_size = 48;
    s.episode_len = 20;
    return s;
}

DistractionSpec tier_spec(Tier t, std::uint64_t ns = 777, float lambda = 0.1f) {
    return DistractionSpec::for_tier(t, ns, lambda);
}

std::set<std::pair<int, int>> disc_set(const ReacherEnv& env) {
    const auto px = env.target_disc_pixels();
    return {px.begin(), px.end()};
}

}  // namespace

TEST_CASE("spec validation") {
    EnvSpec s;
    CHECK_NOTHROW(s.validate());
    s.frame_size = 12;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = EnvSpec{};
    s.episode_len = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    DistractionSpec d;
    d.intensity = 1.5f;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("tier pool defaults: 10 easy, 100 hard") {
    CHECK(tier_spec(Tier::video_easy).effective_pool_size() == 10);
    CHECK(tier_spec(Tier::video_hard).effective_pool_size() == 100);
    CHECK(tier_spec(Tier::clean).effective_pool_size() == 1);
}

TEST_CASE("reset on the clean tier: mid-gray background with a visible red disc") {
    ReacherEnv env(small_spec(), tier_spec(Tier::clean), RngStream(5));
    env.reset();
    const Frame f = env.render();
    const auto disc = disc_set(env);
    CHECK(!disc.empty());
    long red = 0;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            if (disc.count({y, x})) {
                if (is_red_pixel(f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2))) ++red;
            } else {
                CHECK(f.at(y, x, 0) == 128);
                CHECK(f.at(y, x, 1) == 128);
                CHECK(f.at(y, x, 2) == 128);
            }
        }
    CHECK(red > 0);
}

TEST_CASE("reset determinism: cloned rng draws the same video index") {
    ReacherEnv a(small_spec(), tier_spec(Tier::video_easy), RngStream(9));
    ReacherEnv b(small_spec(), tier_spec(Tier::video_easy), RngStream(9));
    a.reset();
    b.reset();
    CHECK(a.video_index() == b.video_index());
    CHECK(a.video_index() >= 0);
    CHECK(a.video_index() < 10);
}

TEST_CASE("video_hard: background varies over time at most non-target pixels") {
    ReacherEnv env(small_spec(), tier_spec(Tier::video_hard), RngStream(3));
    env.reset();
    const auto disc = disc_set(env);
    Action zero;
    zero.values = {0.0f, 0.0f};
    std::vector<Frame> frames;
    frames.push_back(env.render());
    for (int i = 0; i < 9; ++i) frames.push_back(env.step(zero).obs.frames.back());
    const int s = frames[0].width;
    long varying = 0, total = 0;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            if (disc.count({y, x})) continue;
            ++total;
            bool changes = false;
            for (size_t i = 1; i < frames.size() && !changes; ++i)
                for (int c = 0; c < 3; ++c)
                    if (frames[i].at(y, x, c) != frames[0].at(y, x, c)) changes = true;
            if (changes) ++varying;
        }
    CHECK(varying * 2 >= total);
}

TEST_CASE("step: zero action on a centered target yields the saturated max reward") {
    EnvSpec spec = small_spec();
    spec.episode_len = 100;
    ReacherEnv env(spec, tier_spec(Tier::clean), RngStream(17));
    env.reset();
    // Drive the camera onto the target, then hold still.
    for (int i = 0; i < 10; ++i) env.step(env.scripted_action());
    REQUIRE(std::abs(env.camera_x() - env.target_x()) < 1e-6);
    REQUIRE(std::abs(env.camera_y() - env.target_y()) < 1e-6);
    Action zero;
    zero.values = {0.0f, 0.0f};
    const StepResult res = env.step(zero);
    // Centered 48x48 disc saturates the per-tick clip of 4; summed over the
    // action repeat of 4 that is 16 per control step.
    CHECK(res.reward == doctest::Approx(spec.action_repeat * spec.reward_clip_hi));
}

TEST_CASE("step: camera clipped to the unit square") {
    ReacherEnv env(small_spec(), tier_spec(Tier::clean), RngStream(2));
    env.reset();
    Action push;
    push.values = {1.0f, 1.0f};
    for (int i = 0; i < 5; ++i) env.step(push);
    CHECK(env.camera_x() == 1.0);
    CHECK(env.camera_y() == 1.0);
}

TEST_CASE("step: T control steps end the episode; repeat sums per-tick rewards") {
    EnvSpec spec = small_spec();
    ReacherEnv env(spec, tier_spec(Tier::clean), RngStream(4));
    env.reset();
    Action a;
    a.values = {0.3f, -0.2f};
    int steps = 0;
    while (!env.done()) {
        env.step(a);
        ++steps;
    }
    CHECK(steps == spec.episode_len);
    CHECK(env.step_count() == spec.episode_len);
    CHECK_THROWS(env.step(a));

    // action_repeat 4 equals four repeat-1 steps with the same action.
    EnvSpec s4 = small_spec(), s1 = small_spec();
    s1.action_repeat = 1;
    s1.episode_len = 4 * s4.episode_len;
    ReacherEnv e4(s4, tier_spec(Tier::clean), RngStream(8));
    ReacherEnv e1(s1, tier_spec(Tier::clean), RngStream(8));
    e4.reset();
    e1.reset();
    const StepResult r4 = e4.step(a);
    float sum1 = 0.0f;
    for (int i = 0; i < 4; ++i) sum1 += e1.step(a).reward;
    CHECK(r4.reward == doctest::Approx(sum1));
    CHECK(e1.camera_x() == doctest::Approx(e4.camera_x()));
}

TEST_CASE("reward_visual: crafted frames match the closed form") {
    const int s = 48;
    Frame zero_red(s, s);
    std::fill(zero_red.pixels.begin(), zero_red.pixels.end(), static_cast<std::uint8_t>(128));
    CHECK(reward_visual(zero_red, 800.0, 0.0, 4.0) == 0.0);

    Frame all_red(s, s);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) all_red.at(y, x, 0) = 255;
    // c = h*w with the uniform-weight hook: (hw/hw) * hw = hw, clipped to 4.
    CHECK(reward_visual(all_red, static_cast<double>(s) * s, 0.0, 4.0, true) == 4.0);

    Frame one_center(s, s);
    one_center.at(24, 24, 0) = 255;
    // W(center) = 1, so r = 800/2304.
    CHECK(reward_visual(one_center, 800.0, 0.0, 4.0) == doctest::Approx(800.0 / 2304.0));

    // Pixel at the nearest edge has zero weight.
    Frame edge(s, s);
    edge.at(24, 0, 0) = 255;
    CHECK(reward_visual(edge, 800.0, 0.0, 4.0) == doctest::Approx(0.0));

    // Two known pixels: hand-evaluated weight sum.
    Frame two(s, s);
    two.at(24, 24, 0) = 255;
    two.at(24, 30, 0) = 255;
    const double w2 = radial_weight(24, 30, s, s);
    CHECK(reward_visual(two, 800.0, 0.0, 4.0) ==
          doctest::Approx(std::clamp(800.0 / 2304.0 * (1.0 + w2), 0.0, 4.0)));

    // Clip floor: negative lo keeps the zero-mask result at clip_lo.
    CHECK(reward_visual(zero_red, 800.0, 0.5, 4.0) == 0.5);
    CHECK_THROWS_AS(reward_visual(zero_red, 0.0, 0.0, 4.0), std::invalid_argument);
}

TEST_CASE("red detector thresholds") {
    CHECK(is_red_pixel(255, 0, 0));
    CHECK(is_red_pixel(200, 50, 50));
    CHECK(!is_red_pixel(178, 0, 0));   // r must exceed 0.7 * 255
    CHECK(!is_red_pixel(255, 77, 0));  // g must stay below 0.3 * 255
    CHECK(!is_red_pixel(255, 0, 77));
}

TEST_CASE("reward_sparse: closed boundary and p = g") {
    CHECK(reward_sparse_at(0.3, 0.4, 0.3, 0.4, 0.1) == 1.0);   // p = g
    CHECK(reward_sparse_at(0.0, 0.0, 0.1, 0.0, 0.1) == 1.0);   // exactly on the boundary
    CHECK(reward_sparse_at(0.0, 0.0, 0.100001, 0.0, 0.1) == 0.0);
    CHECK_THROWS_AS(reward_sparse_at(0, 0, 0, 0, 0.0), std::invalid_argument);
}

TEST_CASE("reward_sparse: scripted controller collects at least T/2 in an episode") {
    EnvSpec spec = small_spec();
    spec.task = TaskId::reacher_sparse;
    spec.episode_len = 150;
    ReacherEnv env(spec, tier_spec(Tier::clean), RngStream(21));
    env.reset();
    double total = 0.0;
    while (!env.done()) total += env.step(env.scripted_action()).reward;
    CHECK(total >= spec.episode_len / 2.0);
}

TEST_CASE("render: purity, two renders give identical bytes") {
    ReacherEnv env(small_spec(), tier_spec(Tier::video_hard), RngStream(6));
    env.reset();
    const Frame a = env.render();
    const Frame b = env.render();
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("render: distracting with lambda = 0 equals video_hard with the surface band") {
    DistractionSpec hard = tier_spec(Tier::video_hard);
    hard.keep_surface = true;
    DistractionSpec dist = tier_spec(Tier::distracting, 777, 0.0f);
    REQUIRE(dist.effective_pool_size() == hard.effective_pool_size());
    ReacherEnv a(small_spec(), hard, RngStream(12));
    ReacherEnv b(small_spec(), dist, RngStream(12));
    a.reset();
    b.reset();
    Action act;
    act.values = {0.4f, -0.6f};
    CHECK(a.render().pixels == b.render().pixels);
    for (int i = 0; i < 5; ++i) {
        const Frame fa = a.step(act).obs.frames.back();
        const Frame fb = b.step(act).obs.frames.back();
        CHECK(fa.pixels == fb.pixels);
    }
}

TEST_CASE("render: distracting rotation amplitude is bounded by lambda * A_max") {
    // The schedule is theta = lambda * A_max * sin(2 pi t / T); check the
    // implementation tracks it behaviorally: no rotation at t = 0, a visible
    // difference from lambda = 0 mid-episode, and the analytic bound holds.
    const float lambda = 0.1f;
    EnvSpec spec = small_spec();
    DistractionSpec drot = tier_spec(Tier::distracting, 777, lambda);
    DistractionSpec dflat = tier_spec(Tier::distracting, 777, 0.0f);
    drot.pool_size = dflat.pool_size = 100;  // pin the pool so only lambda differs
    ReacherEnv rot(spec, drot, RngStream(13));
    ReacherEnv flat(spec, dflat, RngStream(13));
    rot.reset();
    flat.reset();
    CHECK(rot.render().pixels == flat.render().pixels);  // sin(0) = 0
    Action zero;
    zero.values = {0.0f, 0.0f};
    for (int t = 1; t <= spec.episode_len / 4; ++t) {
        rot.step(zero);
        flat.step(zero);
        const double frac = static_cast<double>(t) / spec.episode_len;
        const double theta =
            lambda * ReacherEnv::kMaxRotationDeg * (M_PI / 180.0) * std::sin(2.0 * M_PI * frac);
        CHECK(std::abs(theta) <= lambda * ReacherEnv::kMaxRotationDeg * (M_PI / 180.0) + 1e-12);
    }
    CHECK(rot.render().pixels != flat.render().pixels);  // quarter period: max angle
}

TEST_CASE("tier monotonicity of frame-to-frame background change") {
    auto changed_fraction = [](Tier tier) {
        ReacherEnv env(small_spec(), tier_spec(tier), RngStream(30));
        env.reset();
        const auto disc = disc_set(env);
        Action zero;
        zero.values = {0.0f, 0.0f};
        const Frame f0 = env.render();
        const Frame f1 = env.step(zero).obs.frames.back();
        long changed = 0, total = 0;
        for (int y = 0; y < f0.height; ++y)
            for (int x = 0; x < f0.width; ++x) {
                if (disc.count({y, x})) continue;
                ++total;
                for (int c = 0; c < 3; ++c)
                    if (f0.at(y, x, c) != f1.at(y, x, c)) {
                        ++changed;
                        break;
                    }
            }
        return static_cast<double>(changed) / total;
    };
    const double clean = changed_fraction(Tier::clean);
    const double easy = changed_fraction(Tier::video_easy);
    const double hard = changed_fraction(Tier::video_hard);
    CHECK(clean == 0.0);
    CHECK(easy > 0.0);
    CHECK(easy <= hard + 1e-12);
}

TEST_CASE("red detectability: the disc stays detectable under every tier") {
    for (Tier tier : {Tier::clean, Tier::video_easy, Tier::video_hard, Tier::distracting}) {
        ReacherEnv env(small_spec(), tier_spec(tier), RngStream(40));
        env.reset();
        Action zero;
        zero.values = {0.0f, 0.0f};
        for (int t = 0; t < 8; ++t) {
            const Frame f = env.render();
            const auto disc = env.target_disc_pixels();
            long red = 0;
            for (const auto& [y, x] : disc)
                if (is_red_pixel(f.at(y, x, 0), f.at(y, x, 1), f.at(y, x, 2))) ++red;
            CHECK(red * 10 >= static_cast<long>(disc.size()) * 9);
            env.step(zero);
        }
    }
}

TEST_CASE("video namespaces: evaluation and augmentation parameters never collide") {
    RngStream master(123);
    const std::uint64_t eval_ns = master.substream("videos.video_hard").seed();
    const std::uint64_t aug_ns = master.substream("augment.images").seed();
    CHECK(eval_ns != aug_ns);
    for (int i = 0; i < 100; ++i) {
        const ProceduralVideo a(eval_ns, i), b(aug_ns, i);
        bool same = true;
        for (int c = 0; c < 3; ++c)
            same &= a.param_u(c) == b.param_u(c) && a.param_v(c) == b.param_v(c) &&
                    a.param_w(c) == b.param_w(c) && a.param_phi(c) == b.param_phi(c);
        CHECK(!same);
    }
}

TEST_CASE("procedural video: value range and red compression") {
    const ProceduralVideo v(42, 7);
    for (int c = 0; c < 3; ++c)
        for (double t : {0.0, 1.5, 20.0})
            for (double x : {0.0, 0.3, 0.9}) {
                const double val = v.value(x, 0.5, t, c);
                CHECK(val >= 0.0);
                CHECK(val <= 1.0);
                if (c == 0) CHECK(val <= 0.65 + 1e-12);  // below the red detector threshold
            }
}

TEST_CASE("trajectory determinism: identical seeds and actions give identical bytes") {
    ReacherEnv a(small_spec(), tier_spec(Tier::video_hard), RngStream(55));
    ReacherEnv b(small_spec(), tier_spec(Tier::video_hard), RngStream(55));
    Observation oa = a.reset(), ob = b.reset();
    CHECK(oa.stacked_u8() == ob.stacked_u8());
    RngStream act_rng(77);
    for (int i = 0; i < 10; ++i) {
        Action act;
        act.values = {static_cast<float>(act_rng.uniform(-1, 1)),
                      static_cast<float>(act_rng.uniform(-1, 1))};
        oa = a.step(act).obs;
        ob = b.step(act).obs;
        CHECK(oa.stacked_u8() == ob.stacked_u8());
    }
}

TEST_CASE("ppm recorder: P6 format and frame naming contract") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "madi_test_ppm";
    fs::create_directories(dir);
    ReacherEnv env(small_spec(), tier_spec(Tier::clean), RngStream(1));
    env.reset();
    const Frame f = env.render();
    const std::string path = frame_filename(dir.string(), 3);
    CHECK(path.substr(path.size() - 16) == "frame_000003.ppm");
    write_ppm(path, f);
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P6");
    CHECK(w == f.width);
    CHECK(h == f.height);
    CHECK(maxval == 255);
    in.get();  // single whitespace after the header
    std::vector<char> data(f.pixels.size());
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
    CHECK(in.gcount() == static_cast<std::streamsize>(f.pixels.size()));
    in.get();
    CHECK(in.eof());
    fs::remove_all(dir);
}

TEST_CASE("render margin: crop-based baselines get a larger canvas") {
    EnvSpec spec = small_spec();
    spec.render_margin = 8;
    CHECK(spec.render_size() == 64);
    ReacherEnv env(spec, tier_spec(Tier::clean), RngStream(2));
    env.reset();
    const Frame f = env.render();
    CHECK(f.width == 64);
    CHECK(f.height == 64);
}
