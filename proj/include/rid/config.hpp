// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rid/errors.hpp"
#include "rid/strategies.hpp"

namespace rid {

struct CorpusSection {
    uint64_t seed = 1000;
    int classes = 4;
    int styles_per_class = 16;
    int images_per_condition = 64;
    double test_fraction = 0.125;
};

struct PretrainSection {
    int epochs = 20;
    int batch = 32;
    double lr = 0.2;
    double momentum = 0.9;
    int hidden = 256;
    int n_hidden = 3;
    int time_dim = 32;
    int cond_dim = 16;
    int ddim_steps = 50;
    double beta_min = 0.02;
    double beta_max = 0.25;
};

struct TasksSection {
    int lora_rank = 4;
    double lambda = 0.1;
    double ema_momentum = 0.99;
    bool teacher_persist = false;
    uint64_t scorer_seed = 2000;
    int jpeg_quality = 80;
    double soft_round_tau = 1.0;
    double joint_w_smooth = 0.01;
    double joint_w_pref = 2.0;
    double joint_w_compress = 1.0;
    std::vector<TaskOptions> tasks;
};

struct EvalSection {
    int samples_per_condition = 16;
    int jpeg_quality = 80;
};

struct SoupSection {
    double alpha = 0.333;
    double beta = 0.333;
};

struct RunConfig {
    uint64_t seed = 42;
    CorpusSection corpus;
    PretrainSection pretrain;
    TasksSection tasks;
    EvalSection eval;
    SoupSection soup;
    std::string raw_text;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& path, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error(path + ": expected a number, got '" + v + "'");
    }
}

inline int64_t parse_int(const std::string& path, const std::string& v) {
    try {
        size_t pos = 0;
        const int64_t i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw config_error(path + ": expected an integer, got '" + v + "'");
    }
}

inline uint64_t parse_u64(const std::string& path, const std::string& v) {
    try {
        size_t pos = 0;
        const uint64_t i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw config_error(path + ": expected an unsigned integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& path, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(path + ": expected a boolean, got '" + v + "'");
}

inline void check_range(const std::string& path, bool ok, const std::string& what) {
    if (!ok) throw config_error(path + ": " + what);
}

/// Fills method- and reward-dependent defaults the way the hyperparameter
/// ledger prescribes: large batch / high lr for baseline-style methods,
/// small batch / low lr for RID; unequal per-reward epoch budgets.
inline void fill_task_defaults(TaskOptions& t, bool epochs_set, bool lr_set, bool batch_set) {
    const bool rid_like = t.method == Method::Rid || t.method == Method::RidFullstep;
    if (!lr_set) t.lr = rid_like ? 5e-5 : 1e-3;
    if (!batch_set) t.batch = rid_like ? 8 : 32;
    if (!epochs_set) {
        switch (t.reward) {
            case RewardKind::Smooth: t.epochs = 6; break;
            case RewardKind::Pref: t.epochs = 18; break;
            case RewardKind::Compress: t.epochs = 9; break;
        }
    }
}

inline TaskOptions parse_task_line(const std::string& path, const std::string& value,
                                   const TasksSection& section) {
    TaskOptions t;
    t.lambda = section.lambda;
    t.ema_momentum = section.ema_momentum;
    t.joint_weights = {section.joint_w_smooth, section.joint_w_pref, section.joint_w_compress};

    bool reward_set = false, epochs_set = false, lr_set = false, batch_set = false;
    double scale = 1.0;
    std::istringstream iss(value);
    std::string pair;
    while (iss >> pair) {
        const size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ": expected key=value entries, got '" + pair + "'");
        const std::string k = pair.substr(0, eq), v = pair.substr(eq + 1);
        if (k == "reward") {
            t.reward = reward_from_name(v);
            reward_set = true;
        } else if (k == "method") {
            t.method = method_from_name(v);
        } else if (k == "epochs") {
            t.epochs = static_cast<int>(parse_int(path + "." + k, v));
            check_range(path + ".epochs", t.epochs >= 0, "must be nonnegative");
            epochs_set = true;
        } else if (k == "lr") {
            t.lr = parse_double(path + "." + k, v);
            check_range(path + ".lr", t.lr > 0, "must be positive");
            lr_set = true;
        } else if (k == "batch") {
            t.batch = static_cast<int>(parse_int(path + "." + k, v));
            check_range(path + ".batch", t.batch >= 1, "must be at least 1");
            batch_set = true;
        } else if (k == "scale") {
            scale = parse_double(path + "." + k, v);
            check_range(path + ".scale", scale > 0, "must be positive");
        } else {
            throw config_error(path + "." + k + ": unknown key");
        }
    }
    if (!reward_set) throw config_error(path + ": missing reward=");
    (void)scale;  // applied by the runner when building the reward set
    fill_task_defaults(t, epochs_set, lr_set, batch_set);
    t.scale = scale;
    return t;
}

}  // namespace detail

/// Parses the structured key/value config text. Unknown sections or keys are
/// rejected with their key path.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.raw_text = text;

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    std::vector<std::string> task_lines;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("line " + std::to_string(line_no) + ": malformed section header");
            section = line.substr(1, line.size() - 2);
            if (section != "seed" && section != "corpus" && section != "pretrain" &&
                section != "tasks" && section != "eval" && section != "soup")
                throw config_error(section + ": unknown section");
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string path = section.empty() ? key : section + "." + key;
        if (section.empty()) throw config_error(path + ": key outside any section");

        using namespace detail;
        if (section == "seed") {
            if (key == "value") cfg.seed = parse_u64(path, value);
            else throw config_error(path + ": unknown key");
        } else if (section == "corpus") {
            if (key == "seed") cfg.corpus.seed = parse_u64(path, value);
            else if (key == "classes") cfg.corpus.classes = static_cast<int>(parse_int(path, value));
            else if (key == "styles_per_class") cfg.corpus.styles_per_class = static_cast<int>(parse_int(path, value));
            else if (key == "images_per_condition") cfg.corpus.images_per_condition = static_cast<int>(parse_int(path, value));
            else if (key == "test_fraction") cfg.corpus.test_fraction = parse_double(path, value);
            else throw config_error(path + ": unknown key");
        } else if (section == "pretrain") {
            if (key == "epochs") cfg.pretrain.epochs = static_cast<int>(parse_int(path, value));
            else if (key == "batch") cfg.pretrain.batch = static_cast<int>(parse_int(path, value));
            else if (key == "lr") cfg.pretrain.lr = parse_double(path, value);
            else if (key == "momentum") cfg.pretrain.momentum = parse_double(path, value);
            else if (key == "hidden") cfg.pretrain.hidden = static_cast<int>(parse_int(path, value));
            else if (key == "n_hidden") cfg.pretrain.n_hidden = static_cast<int>(parse_int(path, value));
            else if (key == "time_dim") cfg.pretrain.time_dim = static_cast<int>(parse_int(path, value));
            else if (key == "cond_dim") cfg.pretrain.cond_dim = static_cast<int>(parse_int(path, value));
            else if (key == "ddim_steps") cfg.pretrain.ddim_steps = static_cast<int>(parse_int(path, value));
            else if (key == "beta_min") cfg.pretrain.beta_min = parse_double(path, value);
            else if (key == "beta_max") cfg.pretrain.beta_max = parse_double(path, value);
            else throw config_error(path + ": unknown key");
        } else if (section == "tasks") {
            if (key == "task") task_lines.push_back(value);
            else if (key == "lora_rank") cfg.tasks.lora_rank = static_cast<int>(parse_int(path, value));
            else if (key == "lambda") cfg.tasks.lambda = parse_double(path, value);
            else if (key == "ema_momentum") cfg.tasks.ema_momentum = parse_double(path, value);
            else if (key == "teacher_persist") cfg.tasks.teacher_persist = parse_bool(path, value);
            else if (key == "scorer_seed") cfg.tasks.scorer_seed = parse_u64(path, value);
            else if (key == "jpeg_quality") cfg.tasks.jpeg_quality = static_cast<int>(parse_int(path, value));
            else if (key == "soft_round_tau") cfg.tasks.soft_round_tau = parse_double(path, value);
            else if (key == "joint_w_smooth") cfg.tasks.joint_w_smooth = parse_double(path, value);
            else if (key == "joint_w_pref") cfg.tasks.joint_w_pref = parse_double(path, value);
            else if (key == "joint_w_compress") cfg.tasks.joint_w_compress = parse_double(path, value);
            else throw config_error(path + ": unknown key");
        } else if (section == "eval") {
            if (key == "samples_per_condition") cfg.eval.samples_per_condition = static_cast<int>(parse_int(path, value));
            else if (key == "jpeg_quality") cfg.eval.jpeg_quality = static_cast<int>(parse_int(path, value));
            else throw config_error(path + ": unknown key");
        } else if (section == "soup") {
            if (key == "alpha") cfg.soup.alpha = parse_double(path, value);
            else if (key == "beta") cfg.soup.beta = parse_double(path, value);
            else throw config_error(path + ": unknown key");
        }
    }

    // Task lines parse after section-level defaults are known.
    for (size_t i = 0; i < task_lines.size(); ++i)
        cfg.tasks.tasks.push_back(detail::parse_task_line(
            "tasks.task[" + std::to_string(i) + "]", task_lines[i], cfg.tasks));

    // Range validation.
    using detail::check_range;
    check_range("corpus.classes", cfg.corpus.classes >= 2, "need at least 2 classes");
    check_range("corpus.styles_per_class", cfg.corpus.styles_per_class >= 2, "need at least 2 styles");
    check_range("corpus.images_per_condition", cfg.corpus.images_per_condition >= 1, "must be positive");
    check_range("corpus.test_fraction",
                cfg.corpus.test_fraction > 0.0 && cfg.corpus.test_fraction < 1.0, "must be in (0,1)");
    check_range("pretrain.epochs", cfg.pretrain.epochs >= 0, "must be nonnegative");
    check_range("pretrain.batch", cfg.pretrain.batch >= 1, "must be at least 1");
    check_range("pretrain.lr", cfg.pretrain.lr > 0, "must be positive");
    check_range("pretrain.momentum", cfg.pretrain.momentum >= 0 && cfg.pretrain.momentum < 1, "must be in [0,1)");
    check_range("pretrain.hidden", cfg.pretrain.hidden >= 4, "too small");
    check_range("pretrain.n_hidden", cfg.pretrain.n_hidden >= 1, "need at least one hidden layer");
    check_range("pretrain.ddim_steps", cfg.pretrain.ddim_steps >= 2, "need at least 2 steps");
    check_range("pretrain.beta", 0 < cfg.pretrain.beta_min && cfg.pretrain.beta_min < cfg.pretrain.beta_max && cfg.pretrain.beta_max < 1,
                "require 0 < beta_min < beta_max < 1");
    check_range("tasks.lora_rank", cfg.tasks.lora_rank >= 1, "must be at least 1");
    check_range("tasks.lambda", cfg.tasks.lambda >= 0, "must be nonnegative");
    check_range("tasks.ema_momentum", cfg.tasks.ema_momentum >= 0 && cfg.tasks.ema_momentum <= 1, "must be in [0,1]");
    check_range("tasks.jpeg_quality", cfg.tasks.jpeg_quality >= 1 && cfg.tasks.jpeg_quality <= 100, "must be in [1,100]");
    check_range("tasks.soft_round_tau", cfg.tasks.soft_round_tau >= 0 && cfg.tasks.soft_round_tau <= 1, "must be in [0,1]");
    check_range("eval.samples_per_condition", cfg.eval.samples_per_condition >= 1, "must be positive");
    check_range("eval.jpeg_quality", cfg.eval.jpeg_quality >= 1 && cfg.eval.jpeg_quality <= 100, "must be in [1,100]");
    check_range("soup", cfg.soup.alpha >= 0 && cfg.soup.beta >= 0 && cfg.soup.alpha + cfg.soup.beta <= 1.0 + 1e-12,
                "alpha and beta must be nonnegative with alpha + beta <= 1");
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace rid
