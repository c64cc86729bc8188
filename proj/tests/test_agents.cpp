#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "madi/agents/agent.hpp"

using namespace madi;

namespace {

// Desk-scale sizes small enough for finite-difference sweeps.
HyperParams tiny_hp() {
    HyperParams hp;
    hp.frame_stack = 2;
    hp.batch_size = 4;
    hp.encoder_layers = 2;
    hp.encoder_channels = 3;
    hp.masker_channels = 4;
    hp.trunk_dim = 16;
    hp.projection_dim = 8;
    hp.init_collect_steps = 20;
    return hp;
}

template <typename T>
Batch random_batch(int n, int frame_stack, int size, int action_dim, RngStream& rng) {
    Batch b;
    b.size = n;
    b.channels = 3 * frame_stack;
    b.height = size;
    b.width = size;
    b.action_dim = action_dim;
    const size_t obs_sz = static_cast<size_t>(n) * b.channels * size * size;
    b.obs.resize(obs_sz);
    b.next_obs.resize(obs_sz);
    for (auto& v : b.obs) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    for (auto& v : b.next_obs) v = static_cast<std::uint8_t>(rng.uniform_index(256));
    b.actions.resize(static_cast<size_t>(n) * action_dim);
    for (auto& a : b.actions) a = static_cast<float>(rng.uniform(-1.0, 1.0));
    b.rewards.resize(n);
    for (auto& r : b.rewards) r = static_cast<float>(rng.uniform(-1.0, 2.0));
    b.bootstrap.assign(n, 1.0f);
    return b;
}

template <typename T>
ParamSet<T> merge(std::initializer_list<ParamSet<T>> sets) {
    ParamSet<T> out;
    for (const auto& s : sets)
        for (const auto& e : s.entries) out.entries.push_back(e);
    return out;
}

template <typename T>
std::vector<T> flatten(ParamSet<T> p) {
    std::vector<T> out;
    for (const auto& e : p.entries) out.insert(out.end(), e.param->v.begin(), e.param->v.end());
    return out;
}

// Central-difference audit identical to the nets suite.
template <typename Loss>
void fd_audit(ParamSet<double>& params, Loss loss, double h = 1e-5, double tol = 1e-5,
              double floor = 1e-8) {
    params.zero_grads();
    loss(true);
    // Snapshot: probe evaluations may refill the same grad tensors.
    std::vector<std::vector<double>> analytic;
    for (auto& e : params.entries) {
        REQUIRE(e.grad != nullptr);
        analytic.emplace_back(e.grad->v.begin(), e.grad->v.end());
    }
    for (size_t ei = 0; ei < params.entries.size(); ++ei) {
        auto& e = params.entries[ei];
        for (long j = 0; j < e.param->numel(); ++j) {
            const double orig = e.param->v[j];
            e.param->v[j] = orig + h;
            const double lp = loss(false);
            e.param->v[j] = orig - h;
            const double lm = loss(false);
            e.param->v[j] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic[ei][j];
            const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
            if (err > tol) {
                CAPTURE(e.name);
                CAPTURE(j);
                CAPTURE(fd);
                CAPTURE(an);
                CHECK(err <= tol);
                return;
            }
        }
    }
    CHECK(true);
}

}  // namespace

TEST_CASE("algorithm spec: factory flags per algorithm") {
    const auto sac = AlgorithmSpec::make(Algo::sac, 48);
    CHECK(!sac.use_masker);
    CHECK(!sac.doubling);
    CHECK(sac.augment.kind == AugmentKind::none);
    CHECK(sac.render_margin() == 0);

    const auto drq = AlgorithmSpec::make(Algo::drq, 48);
    CHECK(drq.augment.kind == AugmentKind::shift);
    CHECK(drq.augment.shift_radius == 4);
    CHECK(drq.render_margin() == 0);

    const auto rad = AlgorithmSpec::make(Algo::rad, 48);
    CHECK(rad.augment.kind == AugmentKind::crop);
    CHECK(rad.augment.crop_source == 64);
    CHECK(rad.augment.crop_target == 48);
    CHECK(rad.render_margin() == 8);

    const auto svea = AlgorithmSpec::make(Algo::svea, 48);
    CHECK(svea.doubling);
    CHECK(!svea.use_masker);
    CHECK(svea.augment.kind == AugmentKind::overlay);

    const auto madi = AlgorithmSpec::make(Algo::madi, 48);
    CHECK(madi.doubling);
    CHECK(madi.use_masker);

    const auto msac = AlgorithmSpec::make(Algo::madi_sac, 48);
    CHECK(msac.use_masker);
    CHECK(!msac.doubling);

    AlgorithmSpec bad;
    bad.name = Algo::madi;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.name = Algo::madi_sac;
    bad.doubling = true;
    bad.use_masker = true;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    for (Algo a : {Algo::sac, Algo::drq, Algo::rad, Algo::svea, Algo::madi, Algo::madi_sac})
        CHECK(algo_from_name(algo_name(a)) == a);
    CHECK_THROWS_AS(algo_from_name("ppo"), std::invalid_argument);
}

TEST_CASE("preprocess: sac is exact float conversion at every phase") {
    const auto hp = tiny_hp();
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, 7);
    RngStream rng(11);
    const auto b = random_batch<float>(3, hp.frame_stack, 12, 2, rng);
    for (Phase ph : {Phase::act, Phase::critic, Phase::actor_update}) {
        Agent<float>::Processed proc;
        RngStream r(5);
        agent.preprocess(b.obs.data(), b.size, ph, r, proc);
        CHECK(!proc.masked);
        REQUIRE(proc.net_in.shape == std::vector<long>{3, 6, 12, 12});
        for (long i = 0; i < proc.net_in.numel(); ++i)
            REQUIRE(proc.net_in.v[i] == static_cast<float>(b.obs[i]) / 255.0f);
    }
}

TEST_CASE("preprocess: drq shifts only at update phases") {
    const auto hp = tiny_hp();
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::drq, 16), 16, 2, 7);
    RngStream rng(12);
    const auto b = random_batch<float>(2, hp.frame_stack, 16, 2, rng);

    Agent<float>::Processed proc;
    RngStream r1(5);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r1, proc);
    for (long i = 0; i < proc.net_in.numel(); ++i)
        REQUIRE(proc.net_in.v[i] == static_cast<float>(b.obs[i]) / 255.0f);

    RngStream r2(5), r2c(5);
    agent.preprocess(b.obs.data(), b.size, Phase::critic, r2, proc);
    // Reproduce: per-sample random_shift on the float copy with a cloned rng.
    const size_t per = static_cast<size_t>(6) * 16 * 16;
    for (int i = 0; i < b.size; ++i) {
        std::vector<float> f(per);
        for (size_t j = 0; j < per; ++j) f[j] = static_cast<float>(b.obs[i * per + j]) / 255.0f;
        random_shift(f.data(), 6, 16, 16, 4, r2c);
        for (size_t j = 0; j < per; ++j) REQUIRE(proc.net_in.v[i * per + j] == f[j]);
    }
}

TEST_CASE("preprocess: rad crops at every phase, including acting") {
    const auto hp = tiny_hp();
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::rad, 12), 28, 2, 7);
    CHECK(agent.net_size() == 12);
    RngStream rng(13);
    const auto b = random_batch<float>(2, hp.frame_stack, 28, 2, rng);
    Agent<float>::Processed proc;
    RngStream r(9), rc(9);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r, proc);
    REQUIRE(proc.net_in.shape == std::vector<long>{2, 6, 12, 12});
    const size_t per = static_cast<size_t>(6) * 28 * 28;
    for (int i = 0; i < b.size; ++i) {
        std::vector<float> f(per);
        for (size_t j = 0; j < per; ++j) f[j] = static_cast<float>(b.obs[i * per + j]) / 255.0f;
        const auto c = random_crop(f.data(), 6, 28, 28, 12, 12, rc);
        for (size_t j = 0; j < c.size(); ++j) REQUIRE(proc.net_in.v[i * c.size() + j] == c[j]);
    }
}

TEST_CASE("preprocess: svea doubles the critic batch with overlays") {
    const auto hp = tiny_hp();
    const std::uint64_t seed = 21;
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::svea, 16), 16, 2, seed);
    RngStream rng(14);
    const auto b = random_batch<float>(3, hp.frame_stack, 16, 2, rng);
    const size_t per = static_cast<size_t>(6) * 16 * 16;

    Agent<float>::Processed proc;
    RngStream r(33), rc(33);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r, proc);
    CHECK(proc.net_in.shape[0] == 3);  // acting stays undoubled

    RngStream r2(33);
    agent.preprocess(b.obs.data(), b.size, Phase::critic, r2, proc);
    REQUIRE(proc.net_in.shape == std::vector<long>{6, 6, 16, 16});
    // First half: the clean conversion.
    for (size_t i = 0; i < 3 * per; ++i)
        REQUIRE(proc.net_in.v[i] == static_cast<float>(b.obs[i]) / 255.0f);
    // Second half: overlay with images from the agent's augment namespace.
    const std::uint64_t ns = RngStream(seed).substream("augment.images").seed();
    for (int i = 0; i < 3; ++i) {
        std::vector<float> f(per);
        for (size_t j = 0; j < per; ++j) f[j] = static_cast<float>(b.obs[i * per + j]) / 255.0f;
        const Frame img = image_source_next(ns, rc, 16, 16);
        overlay(f.data(), 6, 16, 16, img, 0.5f);
        for (size_t j = 0; j < per; ++j) REQUIRE(proc.net_in.v[(3 + i) * per + j] == f[j]);
    }
}

TEST_CASE("preprocess: mask hooks pass through or blank the input") {
    const auto hp = tiny_hp();
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::madi_sac, 12), 12, 2, 7);
    RngStream rng(15);
    const auto b = random_batch<float>(2, hp.frame_stack, 12, 2, rng);
    Agent<float>::Processed proc;
    RngStream r(1);

    agent.set_mask_hook(MaskHook::ones);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r, proc);
    CHECK(proc.masked);
    for (long i = 0; i < proc.net_in.numel(); ++i) REQUIRE(proc.net_in.v[i] == proc.premask.v[i]);

    agent.set_mask_hook(MaskHook::zeros);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r, proc);
    for (long i = 0; i < proc.net_in.numel(); ++i) REQUIRE(proc.net_in.v[i] == 0.0f);

    agent.set_mask_hook(MaskHook::none);
    agent.preprocess(b.obs.data(), b.size, Phase::act, r, proc);
    // A fresh masker sits near 0.5, so masked pixels are roughly halved.
    for (long i = 0; i < proc.net_in.numel(); ++i) {
        REQUIRE(proc.net_in.v[i] >= 0.0f);
        REQUIRE(proc.net_in.v[i] <= proc.premask.v[i]);
        REQUIRE(proc.net_in.v[i] >= 0.44f * proc.premask.v[i]);
        REQUIRE(proc.net_in.v[i] <= 0.56f * proc.premask.v[i]);
    }
}

TEST_CASE("critic target: bootstrap flag zeroes the bootstrapped term") {
    const auto hp = tiny_hp();
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, 31);
    RngStream rng(16);
    auto b = random_batch<double>(4, hp.frame_stack, 12, 2, rng);
    std::fill(b.bootstrap.begin(), b.bootstrap.end(), 0.0f);
    const auto y = agent.critic_target(b);
    REQUIRE(y.numel() == 4);
    for (int i = 0; i < 4; ++i) REQUIRE(y.v[i] == doctest::Approx(b.rewards[i]).epsilon(1e-12));
}

TEST_CASE("critic target: matches the soft-Bellman hand formula") {
    const auto hp = tiny_hp();
    const std::uint64_t seed = 32;
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, seed);
    RngStream rng(17);
    const auto b = random_batch<double>(4, hp.frame_stack, 12, 2, rng);

    // Hand evaluation with the agent's own target nets and a reproduction of
    // its update-noise substream (fresh agent: no draws consumed yet).
    Tensor<double> x({4, 6, 12, 12});
    for (long i = 0; i < x.numel(); ++i) x.v[i] = static_cast<double>(b.next_obs[i]) / 255.0;
    Encoder<double>::Cache ec;
    Tensor<double> feat;
    agent.encoder_tgt().forward(x, ec, feat);
    Actor<double>::Cache ac;
    agent.actor().forward(feat, ac);
    RngStream noise = RngStream(seed).substream("update-noise");
    Tensor<double> eps({4, 2});
    for (auto& e : eps.v) e = noise.normal();
    Actor<double>::Sample s;
    agent.actor().sample(ac, eps, s);
    Critic<double>::Cache cc;
    agent.critic_tgt().forward(feat, s.a, cc);
    const double alpha = agent.alpha();
    CHECK(alpha == doctest::Approx(0.1).epsilon(1e-6));
    const double gamma = static_cast<double>(hp.discount);

    const auto y = agent.critic_target(b);
    REQUIRE(y.numel() == 4);
    for (int i = 0; i < 4; ++i) {
        const double q = std::min(cc.q1.v[i], cc.q2.v[i]);
        const double want = b.rewards[i] + gamma * (q - alpha * s.log_prob.v[i]);
        REQUIRE(y.v[i] == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("critic target: doubling duplicates the clean targets") {
    const auto hp = tiny_hp();
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::svea, 12), 12, 2, 33);
    RngStream rng(18);
    const auto b = random_batch<double>(3, hp.frame_stack, 12, 2, rng);
    const auto y = agent.critic_target(b);
    REQUIRE(y.numel() == 6);
    for (int i = 0; i < 3; ++i) REQUIRE(y.v[i] == y.v[i + 3]);
}

TEST_CASE("critic loss: plain mean for sac, svea weights over the doubled batch") {
    const auto hp = tiny_hp();
    RngStream rng(19);
    const auto b = random_batch<double>(4, hp.frame_stack, 16, 2, rng);
    Tensor<double> y0({4});  // fixed target of zeros isolates the quadratic form

    {
        const std::uint64_t seed = 41;
        Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 16), 16, 2, seed);
        Agent<double> probe = agent;
        Tensor<double> x({4, 6, 16, 16});
        for (long i = 0; i < x.numel(); ++i) x.v[i] = static_cast<double>(b.obs[i]) / 255.0;
        Encoder<double>::Cache ec;
        Tensor<double> feat;
        probe.encoder().forward(x, ec, feat);
        Tensor<double> actions({4, 2});
        for (long i = 0; i < 8; ++i) actions.v[i] = b.actions[i];
        Critic<double>::Cache cc;
        probe.critic().forward(feat, actions, cc);
        double want = 0.0;
        for (int i = 0; i < 4; ++i)
            want += (cc.q1.v[i] * cc.q1.v[i] + cc.q2.v[i] * cc.q2.v[i]) / 4.0;
        const double loss = agent.compute_critic_grads(b, &y0);
        REQUIRE(loss == doctest::Approx(want).epsilon(1e-10));
    }
    {
        // alpha = beta = 0.5 must reduce to the plain mean over the 2B batch.
        const std::uint64_t seed = 42;
        Agent<double> agent(hp, AlgorithmSpec::make(Algo::svea, 16), 16, 2, seed);
        Agent<double> probe = agent;
        Tensor<double> y2({8});
        Agent<double>::Processed proc;
        RngStream aug = RngStream(seed).substream("augment.draws");
        probe.preprocess(b.obs.data(), b.size, Phase::critic, aug, proc);
        Encoder<double>::Cache ec;
        Tensor<double> feat;
        probe.encoder().forward(proc.net_in, ec, feat);
        Tensor<double> actions({8, 2});
        for (long i = 0; i < 8; ++i) {
            actions.v[i * 2] = b.actions[(i % 4) * 2];
            actions.v[i * 2 + 1] = b.actions[(i % 4) * 2 + 1];
        }
        Critic<double>::Cache cc;
        probe.critic().forward(feat, actions, cc);
        double want = 0.0;
        for (int i = 0; i < 8; ++i)
            want += (cc.q1.v[i] * cc.q1.v[i] + cc.q2.v[i] * cc.q2.v[i]) / 8.0;
        const double loss = agent.compute_critic_grads(b, &y2);
        REQUIRE(loss == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("critic update: gradient routing and target isolation") {
    const auto hp = tiny_hp();
    RngStream rng(20);
    const auto b = random_batch<double>(4, hp.frame_stack, 12, 2, rng);

    Agent<double> agent(hp, AlgorithmSpec::make(Algo::madi_sac, 12), 12, 2, 51);
    auto actor_params = agent.actor().params();
    actor_params.zero_grads();
    const auto tgt_before = flatten(agent.critic_tgt().params());
    const auto etgt_before = flatten(agent.encoder_tgt().params());

    agent.update_critic(b);

    CHECK(agent.masker().params().grad_norm() > 0.0);
    CHECK(agent.encoder().params().grad_norm() > 0.0);
    CHECK(agent.critic().params().grad_norm() > 0.0);
    CHECK(actor_params.grad_norm() == 0.0);  // the actor never sees L_Q
    CHECK(flatten(agent.critic_tgt().params()) == tgt_before);
    CHECK(flatten(agent.encoder_tgt().params()) == etgt_before);
}

TEST_CASE("actor update: encoder and masker stay frozen") {
    const auto hp = tiny_hp();
    RngStream rng(22);
    const auto b = random_batch<double>(4, hp.frame_stack, 12, 2, rng);
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::madi_sac, 12), 12, 2, 52);

    auto ep = agent.encoder().params();
    auto mp = agent.masker().params();
    auto cp = agent.critic().params();
    ep.zero_grads();
    mp.zero_grads();
    cp.zero_grads();
    const auto enc_before = flatten(agent.encoder().params());
    const auto msk_before = flatten(agent.masker().params());
    const auto cri_before = flatten(agent.critic().params());

    agent.compute_actor_grads(b);
    CHECK(agent.actor().params().grad_norm() > 0.0);
    CHECK(ep.grad_norm() == 0.0);
    CHECK(mp.grad_norm() == 0.0);
    CHECK(cp.grad_norm() == 0.0);

    agent.update_actor_and_alpha(b);
    CHECK(flatten(agent.encoder().params()) == enc_before);
    CHECK(flatten(agent.masker().params()) == msk_before);
    CHECK(flatten(agent.critic().params()) == cri_before);
}

TEST_CASE("temperature: init, zero-gradient point, sign, and guard") {
    const auto hp = tiny_hp();
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, 61);
    CHECK(agent.alpha() == doctest::Approx(0.1).epsilon(1e-6));
    CHECK_THROWS_AS(agent.compute_alpha_grad(), std::logic_error);

    // H_tgt = -action_dim, so log pi = +action_dim is the stationary point.
    Tensor<double> lp({5});
    for (auto& v : lp.v) v = 2.0;
    CHECK(std::abs(agent.compute_alpha_grad(lp)) < 1e-12);

    for (auto& v : lp.v) v = 3.0;  // entropy below target -> alpha pushed up
    CHECK(agent.compute_alpha_grad(lp) == doctest::Approx(-agent.alpha()).epsilon(1e-12));
    for (auto& v : lp.v) v = 1.0;  // entropy above target -> alpha pushed down
    CHECK(agent.compute_alpha_grad(lp) == doctest::Approx(agent.alpha()).epsilon(1e-12));
}

TEST_CASE("agent step: warmup, then the update schedule") {
    auto hp = tiny_hp();
    hp.init_collect_steps = 20;
    EnvSpec es;
    es.frame_size = 16;
    es.episode_len = 10;
    es.action_repeat = 2;
    DistractionSpec ds;  // clean
    ReacherEnv env(es, ds, RngStream(3).substream("env"), hp.frame_stack);
    ReplayBuffer buffer(200, hp.frame_stack, 16, 16, 2);
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::sac, 16), 16, 2, 71);

    Observation obs = env.reset();
    int n_critic = 0, n_actor = 0, n_targets = 0, n_done = 0;
    for (long t = 1; t <= 40; ++t) {
        const auto info = agent.agent_step(t, env, buffer, obs);
        if (t <= 20) {
            REQUIRE(!info.updated_critic);
            REQUIRE(!info.updated_actor);
            REQUIRE(!info.updated_targets);
        } else {
            REQUIRE(info.updated_critic);
            REQUIRE(info.updated_actor == (t % 2 == 0));
            REQUIRE(info.updated_targets == (t % 2 == 0));
        }
        n_critic += info.updated_critic;
        n_actor += info.updated_actor;
        n_targets += info.updated_targets;
        n_done += info.episode_done;
        REQUIRE(buffer.size() == t);
    }
    CHECK(n_critic == 20);
    CHECK(n_actor == 10);
    CHECK(n_targets == 10);
    CHECK(n_done == 4);  // episode_len 10 over 40 steps
}

TEST_CASE("finite differences: critic loss over critic, encoder, masker (double)") {
    const auto hp = tiny_hp();
    RngStream rng(24);
    const auto b = random_batch<double>(3, hp.frame_stack, 12, 2, rng);
    Tensor<double> y({3});
    for (auto& v : y.v) v = rng.uniform(-1.0, 1.0);

    Agent<double> agent(hp, AlgorithmSpec::make(Algo::madi_sac, 12), 12, 2, 81);
    // Undo the 1e-4 init scaling of the masker head (it suppresses upstream
    // masker gradients below finite-difference noise) and move the zero-init
    // biases off the exact ReLU kinks, where one-sided slopes differ.
    for (auto& v : agent.masker().c3.w.v) v *= 1e4;
    RngStream brng(7);
    for (auto& v : agent.masker().c1.b.v) v = brng.uniform(0.01, 0.05);
    for (auto& v : agent.masker().c2.b.v) v = brng.uniform(0.01, 0.05);
    auto params = merge<double>(
        {agent.critic().params(), agent.encoder().params(), agent.masker().params()});
    auto loss = [&](bool) { return agent.compute_critic_grads(b, &y); };
    // Gradients through the sigmoid mask head bottom out near 1e-8; the floor
    // keeps cancellation noise in the difference quotients from dominating.
    fd_audit(params, loss, 1e-6, 1e-4, 1e-7);
}

TEST_CASE("finite differences: actor loss with fixed sampling noise (double)") {
    const auto hp = tiny_hp();
    RngStream rng(25);
    const auto b = random_batch<double>(3, hp.frame_stack, 12, 2, rng);
    Tensor<double> eps({3, 2});
    for (auto& e : eps.v) e = rng.normal();

    Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, 82);
    auto params = agent.actor().params();
    auto loss = [&](bool) { return agent.compute_actor_grads(b, &eps); };
    fd_audit(params, loss, 1e-4, 1e-3);
}

TEST_CASE("finite differences: temperature loss (double)") {
    const auto hp = tiny_hp();
    Agent<double> agent(hp, AlgorithmSpec::make(Algo::sac, 12), 12, 2, 83);
    Tensor<double> lp({4});
    RngStream rng(26);
    for (auto& v : lp.v) v = rng.uniform(-3.0, 3.0);
    auto params = agent.alpha_params();
    auto loss = [&](bool) { return agent.compute_alpha_grad(lp); };
    fd_audit(params, loss);
}

TEST_CASE("madi_sac with the ones hook reproduces sac bit-for-bit") {
    auto hp = tiny_hp();
    hp.init_collect_steps = 10;
    hp.batch_size = 4;
    EnvSpec es;
    es.frame_size = 16;
    es.episode_len = 10;
    es.action_repeat = 2;
    DistractionSpec ds;

    const std::uint64_t seed = 91;
    Agent<float> sac(hp, AlgorithmSpec::make(Algo::sac, 16), 16, 2, seed);
    Agent<float> msac(hp, AlgorithmSpec::make(Algo::madi_sac, 16), 16, 2, seed);
    msac.set_mask_hook(MaskHook::ones);

    ReacherEnv env_a(es, ds, RngStream(4).substream("env"), hp.frame_stack);
    ReacherEnv env_b(es, ds, RngStream(4).substream("env"), hp.frame_stack);
    ReplayBuffer buf_a(200, hp.frame_stack, 16, 16, 2);
    ReplayBuffer buf_b(200, hp.frame_stack, 16, 16, 2);
    Observation oa = env_a.reset(), ob = env_b.reset();
    for (long t = 1; t <= 30; ++t) {
        const auto ia = sac.agent_step(t, env_a, buf_a, oa);
        const auto ib = msac.agent_step(t, env_b, buf_b, ob);
        REQUIRE(ia.reward == ib.reward);
        REQUIRE(ia.loss_q == ib.loss_q);
        REQUIRE(ia.loss_pi == ib.loss_pi);
    }
    CHECK(flatten(sac.encoder().params()) == flatten(msac.encoder().params()));
    CHECK(flatten(sac.actor().params()) == flatten(msac.actor().params()));
    CHECK(flatten(sac.critic().params()) == flatten(msac.critic().params()));
    CHECK(flatten(sac.critic_tgt().params()) == flatten(msac.critic_tgt().params()));
    CHECK(sac.alpha() == msac.alpha());
}

TEST_CASE("act: bounded, deterministic mean action, reproducible sampling") {
    const auto hp = tiny_hp();
    EnvSpec es;
    es.frame_size = 16;
    es.episode_len = 10;
    DistractionSpec ds;
    ReacherEnv env(es, ds, RngStream(5).substream("env"), hp.frame_stack);
    Agent<float> agent(hp, AlgorithmSpec::make(Algo::madi_sac, 16), 16, 2, 101);
    const Observation obs = env.reset();

    RngStream r0(1);
    const Action d1 = agent.act(obs, true, r0);
    const Action d2 = agent.act(obs, true, r0);
    REQUIRE(d1.values == d2.values);
    for (float v : d1.values) {
        CHECK(v >= -1.0f);
        CHECK(v <= 1.0f);
    }
    RngStream r1(6), r2(6);
    const Action s1 = agent.act(obs, false, r1);
    const Action s2 = agent.act(obs, false, r2);
    REQUIRE(s1.values == s2.values);
    CHECK(s1.values != d1.values);
}
