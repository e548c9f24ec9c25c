// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rid/checkpoint.hpp"
#include "rid/config.hpp"
#include "rid/corpus.hpp"
#include "rid/evaluate.hpp"
#include "rid/pgm.hpp"
#include "rid/pretrain.hpp"
#include "rid/sha1.hpp"
#include "rid/strategies.hpp"

namespace rid {

namespace fs = std::filesystem;

inline int eval_threads_from_env() {
    const char* v = std::getenv("RID_THREADS");
    if (v == nullptr) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int n = std::atoi(v);
    return n >= 1 ? n : 1;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void ensure_fresh_dir(const std::string& out_dir, bool force) {
    const fs::path manifest = fs::path(out_dir) / "manifest.json";
    if (fs::exists(manifest) && !force)
        throw config_error("output directory '" + out_dir +
                           "' already holds a run; pass --force to overwrite");
    fs::create_directories(out_dir);
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw io_error("write failed for " + path);
}

inline void write_manifest(const RunConfig& cfg, const std::string& out_dir) {
    nlohmann::ordered_json j;
    j["run"] = fs::path(out_dir).filename().string();
    j["corpus_seed"] = cfg.corpus.seed;
    j["seed"] = cfg.seed;
    j["config_sha1"] = git_blob_sha1(cfg.raw_text);
    j["out_dir"] = out_dir;
    j["config"] = cfg.raw_text;
    write_text((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

inline std::string metrics_csv(const MetricsHistory& history) {
    std::ostringstream os;
    os << "task_index,metric,value,direction,active_from\n";
    for (const auto& rec : history.records)
        for (const auto& name : metric_names()) {
            const MetricInfo& info = history.info(name);
            os << rec.task_index << "," << name << "," << fmt_double(rec.value(name)) << ","
               << (info.higher_is_better ? "higher" : "lower") << "," << info.active_from << "\n";
        }
    return os.str();
}

inline nlohmann::ordered_json report_json(const RunConfig& cfg, const MetricsHistory& history) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["tasks"] = nlohmann::ordered_json::array();
    for (const auto& t : cfg.tasks.tasks) {
        nlohmann::ordered_json tj;
        tj["reward"] = reward_name(t.reward);
        tj["method"] = method_name(t.method);
        tj["epochs"] = t.epochs;
        tj["lr"] = t.lr;
        tj["batch"] = t.batch;
        j["tasks"].push_back(tj);
    }
    j["soup"] = {{"alpha", cfg.soup.alpha}, {"beta", cfg.soup.beta}};
    j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& name : metric_names()) {
        const MetricInfo& info = history.info(name);
        nlohmann::ordered_json m;
        m["direction"] = info.higher_is_better ? "higher" : "lower";
        m["active_from"] = info.active_from;
        m["values"] = nlohmann::ordered_json::array();
        for (const auto& rec : history.records) m["values"].push_back(rec.value(name));
        auto f = forgetting(history, name);
        if (f.has_value())
            m["forgetting"] = *f;
        else
            m["forgetting"] = nullptr;
        j["metrics"][name] = m;
    }
    j["noise_hashes"] = nlohmann::ordered_json::array();
    for (const auto& rec : history.records) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rec.noise_hash));
        j["noise_hashes"].push_back(buf);
    }
    return j;
}

inline void write_sample_grid(const std::string& dir, const EvalOutput& ev, int n_conditions,
                              int samples_per_condition) {
    fs::create_directories(dir);
    const int rows = std::min(8, n_conditions);
    const int cols = std::min(8, samples_per_condition);
    std::vector<Tensor> tiles;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            tiles.push_back(ev.images[static_cast<size_t>(r) * static_cast<size_t>(samples_per_condition) + static_cast<size_t>(c)]);
    write_pgm_grid((fs::path(dir) / "grid.pgm").string(), tiles, rows, cols);
}

struct Workbench {
    Corpus corpus;
    NoiseSchedule sched;
    RewardSet rewards;
};

inline Workbench make_workbench(const RunConfig& cfg) {
    Workbench w;
    w.corpus = generate_corpus(cfg.corpus.seed, cfg.corpus.classes, cfg.corpus.styles_per_class,
                               cfg.corpus.images_per_condition, cfg.corpus.test_fraction);
    w.sched = build_schedule(cfg.pretrain.ddim_steps, cfg.pretrain.beta_min, cfg.pretrain.beta_max);
    w.rewards = make_reward_set(cfg.tasks.scorer_seed,
                                JpegConfig{cfg.tasks.jpeg_quality, cfg.tasks.soft_round_tau},
                                w.corpus.img_h, w.corpus.img_w, w.corpus.cond_dim);
    return w;
}

inline Denoiser pretrained_model(const RunConfig& cfg, const Workbench& w) {
    DenoiserConfig dcfg{w.corpus.img_h, w.corpus.img_w, cfg.pretrain.hidden,
                        cfg.pretrain.n_hidden, cfg.pretrain.time_dim, cfg.pretrain.cond_dim};
    rng::Stream init = rng::Stream::named(cfg.seed, "model-init");
    Denoiser model(dcfg, w.sched.steps, init);
    PretrainOptions opt{cfg.pretrain.epochs, cfg.pretrain.batch, cfg.pretrain.lr,
                        cfg.pretrain.momentum, cfg.seed};
    PretrainResult res = pretrain(model, w.corpus, w.sched, opt);
    std::cout << "pretrain: " << res.steps << " steps, probe noise MSE " << res.noise_mse_before
              << " -> " << res.noise_mse_after << "\n";
    return model;
}

}  // namespace detail

inline int cmd_pretrain(const RunConfig& cfg, const std::string& out_dir, bool force) {
    detail::ensure_fresh_dir(out_dir, force);
    detail::Workbench w = detail::make_workbench(cfg);
    Denoiser model = detail::pretrained_model(cfg, w);
    save_checkpoint((fs::path(out_dir) / "pretrained.rid").string(), model, w.sched,
                    cfg.pretrain.beta_min, cfg.pretrain.beta_max);
    detail::write_manifest(cfg, out_dir);
    std::cout << "wrote " << (fs::path(out_dir) / "pretrained.rid").string() << "\n";
    return 0;
}

inline int cmd_run(const RunConfig& cfg, const std::string& out_dir, bool force,
                   const std::string& pretrained_path = "") {
    detail::ensure_fresh_dir(out_dir, force);
    detail::Workbench w = detail::make_workbench(cfg);

    Denoiser model = [&] {
        if (pretrained_path.empty()) return detail::pretrained_model(cfg, w);
        LoadedCheckpoint lc = load_checkpoint(pretrained_path);
        if (lc.schedule.steps != w.sched.steps)
            throw config_error("pretrained checkpoint schedule does not match config");
        return std::move(lc.model);
    }();

    Evaluator evaluator(w.corpus, w.rewards, w.sched, cfg.seed, cfg.eval.samples_per_condition,
                        cfg.eval.jpeg_quality, eval_threads_from_env());

    const fs::path out(out_dir);
    fs::create_directories(out / "checkpoints");
    fs::create_directories(out / "samples");

    auto sink = [&](int task_index, const Denoiser& m, const EvalOutput& ev) {
        save_checkpoint((out / "checkpoints" / ("task_" + std::to_string(task_index) + ".rid")).string(),
                        m, w.sched, cfg.pretrain.beta_min, cfg.pretrain.beta_max);
        detail::write_sample_grid((out / "samples" / ("task_" + std::to_string(task_index))).string(),
                                  ev, static_cast<int>(w.corpus.test_conditions.size()),
                                  cfg.eval.samples_per_condition);
        std::cout << "task " << task_index << ": smooth " << ev.record.smooth_score << ", pref "
                  << ev.record.pref_score << ", lossy " << ev.record.lossy_bytes << ", align "
                  << ev.record.align_score << ", fd " << ev.record.feat_fd << "\n";
    };

    SequenceResult result = run_sequence(model, cfg.tasks.tasks, cfg.tasks.lora_rank,
                                         cfg.tasks.teacher_persist, w.corpus, w.sched, w.rewards,
                                         evaluator, cfg.seed, sink);

    detail::write_text((out / "metrics.csv").string(), detail::metrics_csv(result.history));
    detail::write_text((out / "report.json").string(),
                       detail::report_json(cfg, result.history).dump(2) + "\n");
    detail::write_manifest(cfg, out_dir);
    std::cout << "wrote " << (out / "metrics.csv").string() << "\n";
    return 0;
}

inline int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
    detail::Workbench w = detail::make_workbench(cfg);
    LoadedCheckpoint lc = load_checkpoint(checkpoint_path);
    Evaluator evaluator(w.corpus, w.rewards, lc.schedule, cfg.seed, cfg.eval.samples_per_condition,
                        cfg.eval.jpeg_quality, eval_threads_from_env());
    EvalOutput ev = evaluator.evaluate(lc.model, 0);
    std::cout << "metric,value\n";
    for (const auto& name : metric_names())
        std::cout << name << "," << detail::fmt_double(ev.record.value(name)) << "\n";
    return 0;
}

inline int cmd_soup(const RunConfig& cfg, const std::vector<std::string>& checkpoint_paths,
                    const std::string& out_dir, bool force) {
    if (checkpoint_paths.size() != 3)
        throw config_error("soup: expected exactly 3 checkpoints, got " +
                           std::to_string(checkpoint_paths.size()));
    detail::ensure_fresh_dir(out_dir, force);

    std::vector<LoadedCheckpoint> loaded;
    for (const auto& p : checkpoint_paths) loaded.push_back(load_checkpoint(p));
    std::vector<const Denoiser*> models;
    for (const auto& lc : loaded) models.push_back(&lc.model);

    const double a = cfg.soup.alpha, b = cfg.soup.beta;
    Denoiser soup = model_soup(models, {a, b, 1.0 - a - b});
    save_checkpoint((fs::path(out_dir) / "soup.rid").string(), soup, loaded[0].schedule,
                    loaded[0].beta_min, loaded[0].beta_max);
    std::cout << "wrote " << (fs::path(out_dir) / "soup.rid").string() << " with coefficients ("
              << a << ", " << b << ", " << 1.0 - a - b << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Report: render the metric table with forgetting values from metrics.csv.
// ---------------------------------------------------------------------------

namespace detail {

struct CsvHistory {
    MetricsHistory history;
};

inline CsvHistory read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("report: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("report: empty " + path);
    if (line != "task_index,metric,value,direction,active_from")
        throw io_error("report: unexpected header in " + path);

    CsvHistory out;
    std::map<int, MetricsRecord> records;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        std::string task_s, metric, value_s, direction, active_s;
        if (!std::getline(ls, task_s, ',') || !std::getline(ls, metric, ',') ||
            !std::getline(ls, value_s, ',') || !std::getline(ls, direction, ',') ||
            !std::getline(ls, active_s, ','))
            throw io_error("report: malformed row '" + line + "'");
        const int task = static_cast<int>(parse_int("metrics.task_index", task_s));
        const double value = parse_double("metrics.value", value_s);
        const int active = static_cast<int>(parse_int("metrics.active_from", active_s));

        MetricsRecord& rec = records[task];
        rec.task_index = task;
        if (metric == "smooth_score") rec.smooth_score = value;
        else if (metric == "pref_score") rec.pref_score = value;
        else if (metric == "lossless_bytes") rec.lossless_bytes = value;
        else if (metric == "lossy_bytes") rec.lossy_bytes = value;
        else if (metric == "align_score") rec.align_score = value;
        else if (metric == "feat_fd") rec.feat_fd = value;
        else throw io_error("report: unknown metric '" + metric + "'");

        for (auto& m : out.history.metrics)
            if (m.name == metric) {
                m.higher_is_better = direction == "higher";
                m.active_from = active;
            }
    }
    for (auto& [task, rec] : records) out.history.records.push_back(rec);
    return out;
}

}  // namespace detail

/// Renders the per-task metric table with Eq.-style forgetting in parentheses
/// and emits pivoted curve data alongside the metrics file.
inline int cmd_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    detail::CsvHistory csv = detail::read_metrics_csv((dir / "metrics.csv").string());
    const MetricsHistory& h = csv.history;

    std::printf("%-16s", "metric");
    for (const auto& rec : h.records) std::printf(" %12s", ("task" + std::to_string(rec.task_index)).c_str());
    std::printf(" %14s\n", "forgetting");
    for (const auto& name : metric_names()) {
        std::printf("%-16s", name.c_str());
        for (const auto& rec : h.records) std::printf(" %12.5g", rec.value(name));
        auto f = forgetting(h, name);
        if (f.has_value())
            std::printf("        (%.6g)\n", *f);
        else
            std::printf("           (-)\n");
    }

    std::ostringstream curves;
    curves << "task_index";
    for (const auto& name : metric_names()) curves << "," << name;
    curves << "\n";
    for (const auto& rec : h.records) {
        curves << rec.task_index;
        for (const auto& name : metric_names()) curves << "," << detail::fmt_double(rec.value(name));
        curves << "\n";
    }
    detail::write_text((dir / "curves.csv").string(), curves.str());
    return 0;
}

}  // namespace rid
