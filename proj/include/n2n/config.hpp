#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace n2n {

// Flat key=value run configuration. Every key has a default; a config file
// may override known keys only. The full resolved set is echoed next to each
// command's outputs so a run can be reproduced from its output directory.
class RunConfig {
public:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            {"frame_len", "960"},
            {"minibatch", "128"},
            {"lr", "0.0004"},
            {"epochs", "25"},
            {"seed", "0"},
            {"sample_rate", "48000"},
            {"k_max", "4"},
            {"tau", "1.0"},
            {"vad_offset_db", "6.0"},
            {"channel", "left"},
            {"switch_frames", "0"},
            {"n_utterances", "10"},
            {"noises", "white"},
            {"snrs_db", "-5,0,5"},
            {"utterance_s", "1.0"},
            {"pair_mode", "independent"},
            {"test_fraction", "0.2"},
            {"f0_min_hz", "100"},
            {"f0_max_hz", "140"},
            {"conv_layers", "6"},
            {"channels", "55"},
            {"kernel", "30"},
        };
        return d;
    }

    RunConfig() : kv_(defaults()) {}

    static RunConfig from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config: " + path.string());
        RunConfig cfg;
        std::map<std::string, bool> seen;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto stripped = strip(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
            const std::string key = strip(stripped.substr(0, eq));
            const std::string value = strip(stripped.substr(eq + 1));
            if (seen[key])
                throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + key);
            seen[key] = true;
            cfg.set(key, value);
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        if (!defaults().count(key)) throw ConfigError("unknown config key: " + key);
        kv_[key] = value;
    }

    const std::string& str(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("unknown config key: " + key);
        return it->second;
    }

    double num(const std::string& key) const {
        const auto& s = str(key);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not a number: " + s);
        }
        if (used != s.size()) throw ConfigError("config key " + key + ": not a number: " + s);
        return v;
    }

    std::uint64_t u64(const std::string& key) const {
        const auto& s = str(key);
        // stoull tolerates a sign and wraps, so insist on plain digits
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("config key " + key + ": not an unsigned integer: " + s);
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": not an unsigned integer: " + s);
        }
    }

    std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

    std::vector<std::string> str_list(const std::string& key) const {
        std::vector<std::string> out;
        std::istringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = strip(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    std::vector<double> num_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : str_list(key)) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(s, &used));
                if (used != s.size()) throw std::invalid_argument(s);
            } catch (const std::exception&) {
                throw ConfigError("config key " + key + ": not a number list entry: " + s);
            }
        }
        return out;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write config: " + path.string());
        for (const auto& [k, v] : kv_) out << k << '=' << v << '\n';
        if (!out) throw IoError("config write failed: " + path.string());
    }

private:
    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> kv_;
};

} // namespace n2n
