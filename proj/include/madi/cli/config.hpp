#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "madi/harness/run_config.hpp"

namespace madi {

// Config problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Flat `key = value` lines with `#` comments and dotted keys.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
        kv[key] = value;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    return parse_config_text(in);
}

namespace detail {

inline long to_long(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + v);
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + v);
    }
}

inline std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

// Applies a parsed key/value map onto Table-4 defaults; unknown keys are
// rejected.
inline RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;
    for (const auto& [key, value] : kv) {
        using detail::to_double;
        using detail::to_long;
        if (key == "algorithm") {
            try {
                cfg.algorithm = algo_from_name(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
        } else if (key == "train_log_interval") {
            cfg.train_log_interval = to_long(key, value);
        } else if (key == "distract.intensity") {
            cfg.distract_intensity = static_cast<float>(to_double(key, value));
        } else if (key == "eval.tiers") {
            cfg.eval_tiers.clear();
            for (const auto& name : detail::split_csv(value)) {
                try {
                    cfg.eval_tiers.push_back(tier_from_name(name));
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            }
        } else if (key == "env.task") {
            try {
                cfg.env.task = task_from_name(value);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "env.frame_size") {
            cfg.env.frame_size = static_cast<int>(to_long(key, value));
        } else if (key == "env.episode_len") {
            cfg.env.episode_len = static_cast<int>(to_long(key, value));
        } else if (key == "env.action_repeat") {
            cfg.env.action_repeat = static_cast<int>(to_long(key, value));
            cfg.hp.action_repeat = cfg.env.action_repeat;
        } else if (key == "env.sparse_threshold") {
            cfg.env.sparse_threshold = static_cast<float>(to_double(key, value));
        } else if (key == "hp.lr_actor") {
            cfg.hp.lr_actor = static_cast<float>(to_double(key, value));
        } else if (key == "hp.lr_critic") {
            cfg.hp.lr_critic = static_cast<float>(to_double(key, value));
        } else if (key == "hp.lr_masker") {
            cfg.hp.lr_masker = static_cast<float>(to_double(key, value));
        } else if (key == "hp.lr_temperature") {
            cfg.hp.lr_temperature = static_cast<float>(to_double(key, value));
        } else if (key == "hp.discount") {
            cfg.hp.discount = static_cast<float>(to_double(key, value));
        } else if (key == "hp.frame_stack") {
            cfg.hp.frame_stack = static_cast<int>(to_long(key, value));
        } else if (key == "hp.batch_size") {
            cfg.hp.batch_size = static_cast<int>(to_long(key, value));
        } else if (key == "hp.buffer_capacity") {
            cfg.hp.buffer_capacity = to_long(key, value);
        } else if (key == "hp.total_steps") {
            cfg.hp.total_steps = to_long(key, value);
        } else if (key == "hp.init_collect_steps") {
            cfg.hp.init_collect_steps = static_cast<int>(to_long(key, value));
        } else if (key == "hp.actor_update_period") {
            cfg.hp.actor_update_period = static_cast<int>(to_long(key, value));
        } else if (key == "hp.target_update_period") {
            cfg.hp.target_update_period = static_cast<int>(to_long(key, value));
        } else if (key == "hp.masker_update_period") {
            cfg.hp.masker_update_period = static_cast<int>(to_long(key, value));
        } else if (key == "hp.tau_critic") {
            cfg.hp.tau_critic = static_cast<float>(to_double(key, value));
        } else if (key == "hp.tau_encoder") {
            cfg.hp.tau_encoder = static_cast<float>(to_double(key, value));
        } else if (key == "hp.init_temperature") {
            cfg.hp.init_temperature = static_cast<float>(to_double(key, value));
        } else if (key == "hp.svea_alpha") {
            cfg.hp.svea_alpha = static_cast<float>(to_double(key, value));
        } else if (key == "hp.svea_beta") {
            cfg.hp.svea_beta = static_cast<float>(to_double(key, value));
        } else if (key == "hp.eval_interval") {
            cfg.hp.eval_interval = to_long(key, value);
        } else if (key == "hp.eval_episodes") {
            cfg.hp.eval_episodes = static_cast<int>(to_long(key, value));
        } else if (key == "hp.encoder_layers") {
            cfg.hp.encoder_layers = static_cast<int>(to_long(key, value));
        } else if (key == "hp.encoder_channels") {
            cfg.hp.encoder_channels = static_cast<int>(to_long(key, value));
        } else if (key == "hp.masker_channels") {
            cfg.hp.masker_channels = static_cast<int>(to_long(key, value));
        } else if (key == "hp.trunk_dim") {
            cfg.hp.trunk_dim = static_cast<int>(to_long(key, value));
        } else if (key == "hp.projection_dim") {
            cfg.hp.projection_dim = static_cast<int>(to_long(key, value));
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    return config_from_map(parse_config_file(path));
}

// Every key written explicitly, so the file reproduces the run when re-fed.
inline void write_resolved_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "algorithm = " << algo_name(cfg.algorithm) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "train_log_interval = " << cfg.train_log_interval << "\n";
    out << "distract.intensity = " << cfg.distract_intensity << "\n";
    out << "eval.tiers = ";
    for (size_t i = 0; i < cfg.eval_tiers.size(); ++i)
        out << (i ? "," : "") << tier_name(cfg.eval_tiers[i]);
    out << "\n";
    out << "env.task = " << task_name(cfg.env.task) << "\n";
    out << "env.frame_size = " << cfg.env.frame_size << "\n";
    out << "env.episode_len = " << cfg.env.episode_len << "\n";
    out << "env.action_repeat = " << cfg.env.action_repeat << "\n";
    out << "env.sparse_threshold = " << cfg.env.sparse_threshold << "\n";
    out << "hp.lr_actor = " << cfg.hp.lr_actor << "\n";
    out << "hp.lr_critic = " << cfg.hp.lr_critic << "\n";
    out << "hp.lr_masker = " << cfg.hp.lr_masker << "\n";
    out << "hp.lr_temperature = " << cfg.hp.lr_temperature << "\n";
    out << "hp.discount = " << cfg.hp.discount << "\n";
    out << "hp.frame_stack = " << cfg.hp.frame_stack << "\n";
    out << "hp.batch_size = " << cfg.hp.batch_size << "\n";
    out << "hp.buffer_capacity = " << cfg.hp.buffer_capacity << "\n";
    out << "hp.total_steps = " << cfg.hp.total_steps << "\n";
    out << "hp.init_collect_steps = " << cfg.hp.init_collect_steps << "\n";
    out << "hp.actor_update_period = " << cfg.hp.actor_update_period << "\n";
    out << "hp.target_update_period = " << cfg.hp.target_update_period << "\n";
    out << "hp.masker_update_period = " << cfg.hp.masker_update_period << "\n";
    out << "hp.tau_critic = " << cfg.hp.tau_critic << "\n";
    out << "hp.tau_encoder = " << cfg.hp.tau_encoder << "\n";
    out << "hp.init_temperature = " << cfg.hp.init_temperature << "\n";
    out << "hp.svea_alpha = " << cfg.hp.svea_alpha << "\n";
    out << "hp.svea_beta = " << cfg.hp.svea_beta << "\n";
    out << "hp.eval_interval = " << cfg.hp.eval_interval << "\n";
    out << "hp.eval_episodes = " << cfg.hp.eval_episodes << "\n";
    out << "hp.encoder_layers = " << cfg.hp.encoder_layers << "\n";
    out << "hp.encoder_channels = " << cfg.hp.encoder_channels << "\n";
    out << "hp.masker_channels = " << cfg.hp.masker_channels << "\n";
    out << "hp.trunk_dim = " << cfg.hp.trunk_dim << "\n";
    out << "hp.projection_dim = " << cfg.hp.projection_dim << "\n";
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace madi
