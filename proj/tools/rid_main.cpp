// Copyright (c) 2026 the rid authors
// SPDX-License-Identifier: Apache-2.0
//
// rid: pretrain a small conditional diffusion model, fine-tune it across a
// sequence of reward tasks, and quantify forgetting.
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "rid/config.hpp"
#include "rid/runner.hpp"

namespace {

rid::RunConfig load_config(const std::string& path, bool seed_set, uint64_t seed) {
    rid::RunConfig cfg = rid::parse_config(path);
    if (seed_set) cfg.seed = seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reward-incremental diffusion fine-tuning"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, pretrained_path;
    std::vector<std::string> soup_inputs;
    uint64_t seed = 0;
    bool force = false;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "config file")->required();
        if (needs_out) cmd->add_option("--out", out_dir, "output directory")->required();
        cmd->add_option("--seed", seed, "override the run seed");
        cmd->add_flag("--force", force, "allow writing into an existing run directory");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain the base model");
    add_common(pretrain, true);

    CLI::App* run = app.add_subcommand("run", "run the reward task sequence");
    add_common(run, true);
    run->add_option("--pretrained", pretrained_path, "reuse a pretrained checkpoint");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test conditions");
    add_common(eval, false);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate")->required();

    CLI::App* soup = app.add_subcommand("soup", "mix three checkpoints into a model soup");
    add_common(soup, true);
    soup->add_option("checkpoints", soup_inputs, "three .rid checkpoints")->expected(3);

    CLI::App* report = app.add_subcommand("report", "render the metric table for a finished run");
    report->add_option("--out", out_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const bool seed_set = app.count_all() && (pretrain->count("--seed") || run->count("--seed") ||
                                                  eval->count("--seed") || soup->count("--seed"));
        if (pretrain->parsed())
            return rid::cmd_pretrain(load_config(config_path, seed_set, seed), out_dir, force);
        if (run->parsed())
            return rid::cmd_run(load_config(config_path, seed_set, seed), out_dir, force, pretrained_path);
        if (eval->parsed())
            return rid::cmd_eval(load_config(config_path, seed_set, seed), checkpoint_path);
        if (soup->parsed())
            return rid::cmd_soup(load_config(config_path, seed_set, seed), soup_inputs, out_dir, force);
        if (report->parsed()) return rid::cmd_report(out_dir);
    } catch (const rid::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const rid::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
