#pragma once

#include <stdexcept>
#include <string>

#include "madi/augment/augment.hpp"

namespace madi {

enum class Algo { sac, drq, rad, svea, madi, madi_sac };

inline const char* algo_name(Algo a) {
    switch (a) {
        case Algo::sac: return "sac";
        case Algo::drq: return "drq";
        case Algo::rad: return "rad";
        case Algo::svea: return "svea";
        case Algo::madi: return "madi";
        case Algo::madi_sac: return "madi_sac";
    }
    return "?";
}

inline Algo algo_from_name(const std::string& s) {
    if (s == "sac") return Algo::sac;
    if (s == "drq") return Algo::drq;
    if (s == "rad") return Algo::rad;
    if (s == "svea") return Algo::svea;
    if (s == "madi") return Algo::madi;
    if (s == "madi_sac") return Algo::madi_sac;
    throw std::invalid_argument("unknown algorithm: " + s);
}

struct AlgorithmSpec {
    Algo name = Algo::sac;
    AugmentParams augment;
    bool use_masker = false;
    bool doubling = false;  // SVEA-style critic batch doubling

    void validate() const {
        augment.validate();
        if (name == Algo::madi && !(use_masker && doubling))
            throw std::invalid_argument("AlgorithmSpec: madi requires masker and doubling");
        if (name == Algo::madi_sac && !(use_masker && !doubling))
            throw std::invalid_argument("AlgorithmSpec: madi_sac requires masker without doubling");
    }

    // `frame_size` is the network input size; rad renders frame_size + 16 and
    // crops back down.
    static AlgorithmSpec make(Algo a, int frame_size) {
        AlgorithmSpec s;
        s.name = a;
        switch (a) {
            case Algo::sac:
                break;
            case Algo::drq:
                s.augment.kind = AugmentKind::shift;
                s.augment.shift_radius = 4;
                break;
            case Algo::rad:
                s.augment.kind = AugmentKind::crop;
                s.augment.crop_source = frame_size + 16;
                s.augment.crop_target = frame_size;
                break;
            case Algo::svea:
                s.augment.kind = AugmentKind::overlay;
                s.doubling = true;
                break;
            case Algo::madi:
                s.augment.kind = AugmentKind::overlay;
                s.use_masker = true;
                s.doubling = true;
                break;
            case Algo::madi_sac:
                s.use_masker = true;
                break;
        }
        s.validate();
        return s;
    }

    // Extra pixels per side the environment must render for this algorithm.
    int render_margin() const { return augment.kind == AugmentKind::crop ? 8 : 0; }
};

}  // namespace madi
