// Python module over the main lab operations: masking, environment, rewards,
// augmentations, evaluation, training, and the Welch test.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "madi/augment/augment.hpp"
#include "madi/cli/config.hpp"
#include "madi/harness/report.hpp"
#include "madi/harness/trainer.hpp"
#include "madi/harness/welch.hpp"

namespace py = pybind11;
using namespace madi;

namespace {

Frame frame_from_array(const py::array_t<std::uint8_t>& a) {
    const auto buf = a.request();
    if (buf.ndim != 3 || buf.shape[2] != 3)
        throw std::invalid_argument("frame must be a (H, W, 3) uint8 array");
    Frame f(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]));
    const auto view = a.unchecked<3>();
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c) f.at(y, x, c) = view(y, x, c);
    return f;
}

py::array_t<std::uint8_t> obs_to_array(const Observation& o) {
    const auto data = o.stacked_u8();
    py::array_t<std::uint8_t> out({o.stack() * 3, o.height(), o.width()});
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

Tensor<float> tensor_from_array(const py::array_t<float, py::array::c_style>& a) {
    const auto buf = a.request();
    std::vector<long> shape(buf.shape.begin(), buf.shape.end());
    Tensor<float> t(shape);
    std::copy(static_cast<const float*>(buf.ptr), static_cast<const float*>(buf.ptr) + t.numel(),
              t.data());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor<float>& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<float> out(shape);
    std::copy(t.v.begin(), t.v.end(), out.mutable_data());
    return out;
}

// Owns a Masker plus the rng it was initialized from.
struct PyMasker {
    Masker<float> net;
    PyMasker(int h1, int h2, std::uint64_t seed) : net(h1, h2) {
        RngStream rng(seed);
        net.init(rng);
    }
    py::array_t<float> mask(const py::array_t<float, py::array::c_style>& frames) {
        const Tensor<float> x = tensor_from_array(frames);
        if (x.shape.size() != 4 || x.shape[1] != 3)
            throw std::invalid_argument("mask: need a (N, 3, H, W) float32 array");
        Masker<float>::Cache cc;
        net.forward(x, static_cast<int>(x.shape[2]), static_cast<int>(x.shape[3]), cc);
        return array_from_tensor(cc.mask);
    }
    py::array_t<float> apply(const py::array_t<float, py::array::c_style>& obs) {
        const Tensor<float> x = tensor_from_array(obs);
        if (x.shape.size() != 4)
            throw std::invalid_argument("apply: need a (B, 3k, H, W) float32 array");
        Tensor<float> out;
        MaskApplyCache<float> cc;
        apply_mask(net, x, static_cast<int>(x.shape[2]), static_cast<int>(x.shape[3]), out, cc);
        return array_from_tensor(out);
    }
    long num_params() { return net.params().total_params(); }
};

struct PyReacherEnv {
    ReacherEnv env;
    PyReacherEnv(int frame_size, const std::string& tier, std::uint64_t seed, int episode_len,
                 int action_repeat, int frame_stack, int render_margin)
        : env(make_spec(frame_size, episode_len, action_repeat, render_margin),
              DistractionSpec::for_tier(tier_from_name(tier),
                                        RngStream(seed).substream("videos." + tier).seed()),
              RngStream(seed).substream("env"), frame_stack) {}

    static EnvSpec make_spec(int frame_size, int episode_len, int action_repeat,
                             int render_margin) {
        EnvSpec s;
        s.frame_size = frame_size;
        s.episode_len = episode_len;
        s.action_repeat = action_repeat;
        s.render_margin = render_margin;
        return s;
    }

    py::array_t<std::uint8_t> reset() { return obs_to_array(env.reset()); }

    py::tuple step(const std::vector<float>& action) {
        Action a;
        a.values = action;
        const StepResult r = env.step(a);
        return py::make_tuple(obs_to_array(r.obs), r.reward, r.done);
    }

    std::vector<float> scripted_action() { return env.scripted_action().values; }
};

double evaluate_checkpoint(const std::string& path, const std::string& tier, int episodes) {
    auto [agent, meta] = load_agent_checkpoint(path);
    EnvSpec spec;
    spec.task = meta.task;
    spec.frame_size = meta.frame_size;
    spec.episode_len = meta.episode_len;
    spec.action_repeat = meta.action_repeat;
    spec.render_margin = (agent->render_size() - meta.frame_size) / 2;
    RngStream master(meta.seed);
    const DistractionSpec d = DistractionSpec::for_tier(
        tier_from_name(tier), master.substream("videos." + tier).seed());
    return evaluate(*agent, spec, d, episodes, master.substream("cli-eval"));
}

py::dict checkpoint_meta(const std::string& path) {
    const auto meta = load_agent_checkpoint(path).second;
    py::dict d;
    d["algorithm"] = algo_name(meta.algorithm);
    d["frame_stack"] = meta.frame_stack;
    d["action_dim"] = meta.action_dim;
    d["frame_size"] = meta.frame_size;
    d["episode_len"] = meta.episode_len;
    d["action_repeat"] = meta.action_repeat;
    d["seed"] = meta.seed;
    return d;
}

void train(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_run_config(config_path);
    std::filesystem::create_directories(out_dir);
    write_resolved_config(cfg, out_dir + "/config.resolved");
    train_run(cfg, out_dir);
}

}  // namespace

PYBIND11_MODULE(_madi, m) {
    m.doc() = "soft-masking reinforcement-learning lab (native core)";

    py::class_<PyMasker>(m, "Masker")
        .def(py::init<int, int, std::uint64_t>(), py::arg("h1") = 32, py::arg("h2") = 32,
             py::arg("seed") = 0)
        .def("mask", &PyMasker::mask, py::arg("frames"),
             "(N, 3, H, W) float32 frames -> (N, 1, H, W) masks in (0, 1)")
        .def("apply", &PyMasker::apply, py::arg("obs"),
             "(B, 3k, H, W) float32 observations -> masked observations")
        .def_property_readonly("num_params", &PyMasker::num_params);

    py::class_<PyReacherEnv>(m, "ReacherEnv")
        .def(py::init<int, const std::string&, std::uint64_t, int, int, int, int>(),
             py::arg("frame_size") = 48, py::arg("tier") = "clean", py::arg("seed") = 0,
             py::arg("episode_len") = 150, py::arg("action_repeat") = 4,
             py::arg("frame_stack") = 3, py::arg("render_margin") = 0)
        .def("reset", &PyReacherEnv::reset, "-> (3k, H, W) uint8 observation")
        .def("step", &PyReacherEnv::step, py::arg("action"), "-> (obs, reward, done)")
        .def("scripted_action", &PyReacherEnv::scripted_action)
        .def_property_readonly("done", [](PyReacherEnv& e) { return e.env.done(); })
        .def_property_readonly("camera", [](PyReacherEnv& e) {
            return py::make_tuple(e.env.camera_x(), e.env.camera_y());
        })
        .def_property_readonly("target", [](PyReacherEnv& e) {
            return py::make_tuple(e.env.target_x(), e.env.target_y());
        })
        .def("target_disc_pixels", [](PyReacherEnv& e) { return e.env.target_disc_pixels(); });

    m.def(
        "reward_visual",
        [](const py::array_t<std::uint8_t>& frame, double c, double clip_lo, double clip_hi,
           bool uniform_weight) {
            return reward_visual(frame_from_array(frame), c, clip_lo, clip_hi, uniform_weight);
        },
        py::arg("frame"), py::arg("c") = 800.0, py::arg("clip_lo") = 0.0, py::arg("clip_hi") = 4.0,
        py::arg("uniform_weight") = false);
    m.def("radial_weight", &radial_weight, py::arg("y"), py::arg("x"), py::arg("h"), py::arg("w"));
    m.def("is_red_pixel", &is_red_pixel, py::arg("r"), py::arg("g"), py::arg("b"));

    m.def(
        "overlay",
        [](const py::array_t<float, py::array::c_style>& obs,
           const py::array_t<std::uint8_t>& image, float alpha) {
            Tensor<float> t = tensor_from_array(obs);
            if (t.shape.size() != 3)
                throw std::invalid_argument("overlay: need a (C, H, W) float32 array");
            overlay(t.data(), static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                    static_cast<int>(t.shape[2]), frame_from_array(image), alpha);
            return array_from_tensor(t);
        },
        py::arg("obs"), py::arg("image"), py::arg("alpha"));

    m.def(
        "welch_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const WelchResult r = welch_t_test(a, b);
            return py::make_tuple(r.t, r.df, r.p);
        },
        py::arg("a"), py::arg("b"), "-> (t, df, p)");
    m.def("incomplete_beta", &incomplete_beta, py::arg("a"), py::arg("b"), py::arg("x"));

    m.def("evaluate_checkpoint", &evaluate_checkpoint, py::arg("path"), py::arg("tier"),
          py::arg("episodes") = 10);
    m.def("checkpoint_meta", &checkpoint_meta, py::arg("path"));
    m.def("train", &train, py::arg("config_path"), py::arg("out_dir"),
          "run training per the config file, writing the standard run directory");
}
