#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "madi/nets/tensor.hpp"

namespace madi {

// Named view over a network's parameter tensors and their gradients.
// Ordered; target copies are separate ParamSets with matching names/shapes.
template <typename T>
struct ParamSet {
    struct Entry {
        std::string name;
        Tensor<T>* param;
        Tensor<T>* grad;  // may be nullptr for target copies
    };
    std::vector<Entry> entries;

    void add(const std::string& name, Tensor<T>& p, Tensor<T>* g = nullptr) {
        entries.push_back({name, &p, g});
    }

    long total_params() const {
        long n = 0;
        for (const auto& e : entries) n += e.param->numel();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries)
            if (e.grad) e.grad->zero();
    }

    double grad_norm() const {
        double s = 0.0;
        for (const auto& e : entries)
            if (e.grad)
                for (const auto& g : e.grad->v) s += static_cast<double>(g) * g;
        return std::sqrt(s);
    }
};

// target <- (1 - tau) * target + tau * online, matched by position; names and
// shapes must agree.
template <typename T>
void ema_update(const ParamSet<T>& online, ParamSet<T>& target, T tau) {
    if (online.entries.size() != target.entries.size())
        throw std::invalid_argument("ema_update: parameter set size mismatch");
    for (size_t i = 0; i < online.entries.size(); ++i) {
        const auto& src = online.entries[i];
        auto& dst = target.entries[i];
        if (src.name != dst.name || !src.param->same_shape(*dst.param))
            throw std::invalid_argument("ema_update: name/shape mismatch at " + src.name);
        for (long j = 0; j < src.param->numel(); ++j)
            dst.param->v[j] = (T(1) - tau) * dst.param->v[j] + tau * src.param->v[j];
    }
}

template <typename T>
void copy_params(const ParamSet<T>& online, ParamSet<T>& target) {
    ema_update(online, target, T(1));
}

// Adam with per-tensor moment buffers, aligned with a ParamSet by position.
template <typename T>
class Adam {
public:
    Adam() = default;
    Adam(const ParamSet<T>& params, T lr, T beta1, T beta2, T eps = T(1e-8))
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        for (const auto& e : params.entries) {
            m_.emplace_back(e.param->shape);
            v_.emplace_back(e.param->shape);
        }
    }

    void step(ParamSet<T>& params) {
        ++t_;
        const T bc1 = T(1) - std::pow(b1_, T(t_));
        const T bc2 = T(1) - std::pow(b2_, T(t_));
        for (size_t i = 0; i < params.entries.size(); ++i) {
            auto& e = params.entries[i];
            if (!e.grad) throw std::logic_error("Adam: parameter without gradient: " + e.name);
            for (long j = 0; j < e.param->numel(); ++j) {
                const T g = e.grad->v[j];
                m_[i].v[j] = b1_ * m_[i].v[j] + (T(1) - b1_) * g;
                v_[i].v[j] = b2_ * v_[i].v[j] + (T(1) - b2_) * g * g;
                const T mhat = m_[i].v[j] / bc1;
                const T vhat = v_[i].v[j] / bc2;
                e.param->v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    T lr_ = T(1e-3), b1_ = T(0.9), b2_ = T(0.999), eps_ = T(1e-8);
    long t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

// Checkpoint format: magic "MADI", version byte 1, u32 tensor count, then per
// tensor: u16 name length, name bytes, u8 rank, u32 dims, raw little-endian
// 32-bit floats.
namespace ckpt {

inline void write_u16(std::ostream& o, std::uint16_t v) { o.write(reinterpret_cast<char*>(&v), 2); }
inline void write_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<char*>(&v), 4); }

template <typename T>
void save(const std::string& path, const std::vector<std::pair<std::string, ParamSet<T>>>& sets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
    out.write("MADI", 4);
    const char version = 1;
    out.write(&version, 1);
    std::uint32_t count = 0;
    for (const auto& [_, ps] : sets) count += static_cast<std::uint32_t>(ps.entries.size());
    write_u32(out, count);
    for (const auto& [set_name, ps] : sets)
        for (const auto& e : ps.entries) {
            const std::string full = set_name + "/" + e.name;
            write_u16(out, static_cast<std::uint16_t>(full.size()));
            out.write(full.data(), static_cast<std::streamsize>(full.size()));
            const std::uint8_t rank = static_cast<std::uint8_t>(e.param->shape.size());
            out.write(reinterpret_cast<const char*>(&rank), 1);
            for (long d : e.param->shape) write_u32(out, static_cast<std::uint32_t>(d));
            std::vector<float> buf(e.param->v.begin(), e.param->v.end());
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * 4));
        }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

struct LoadedTensor {
    std::vector<long> shape;
    std::vector<float> data;
};

inline std::map<std::string, LoadedTensor> load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MADI", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    char version = 0;
    in.read(&version, 1);
    if (!in || version != 1) throw std::runtime_error("checkpoint: unsupported version");
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    std::map<std::string, LoadedTensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 2);
        std::string name(len, '\0');
        in.read(name.data(), len);
        std::uint8_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 1);
        LoadedTensor t;
        long numel = 1;
        for (int r = 0; r < rank; ++r) {
            std::uint32_t d = 0;
            in.read(reinterpret_cast<char*>(&d), 4);
            t.shape.push_back(d);
            numel *= d;
        }
        t.data.resize(static_cast<size_t>(numel));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(numel) * 4);
        if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

template <typename T>
void restore(const std::map<std::string, LoadedTensor>& loaded, const std::string& set_name,
             ParamSet<T>& ps) {
    for (auto& e : ps.entries) {
        const std::string full = set_name + "/" + e.name;
        auto it = loaded.find(full);
        if (it == loaded.end()) throw std::runtime_error("checkpoint: missing tensor " + full);
        if (it->second.shape != e.param->shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + full);
        for (long j = 0; j < e.param->numel(); ++j) e.param->v[j] = static_cast<T>(it->second.data[j]);
    }
}

}  // namespace ckpt
}  // namespace madi
