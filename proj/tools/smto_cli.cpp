// Command-line front end: seeded planning runs from JSON problem files,
// structured result emission, SVG plots and hyperparameter sweeps.
//
// Exit codes: 0 success, 1 input error, 2 planning finished but no solution
// met the collision threshold. SMTO_THREADS caps parallel sections.

#include "smto/smto.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;
using smto::json;

namespace {

struct RunOutput {
    smto::SolutionSet result;
    json resolved;
};

RunOutput run_problem(json doc, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) smto::apply_override(doc, o);
    smto::Problem problem = smto::problem_from_json(doc);
    RunOutput out;
    if (smto::is_binary_region_problem(problem)) {
        doc["smto"]["T"] = 50;  // pinned by the flat-task planner
        doc["smto"]["K"] = 2;
        out.result = smto::plan_binary_region(problem);
    } else if (problem.config.refine_only) {
        out.result = smto::refine_only_plan(problem);
    } else {
        out.result = smto::smto_plan(problem);
    }
    out.resolved = std::move(doc);
    return out;
}

int feasible_count(const smto::SolutionSet& r, double threshold) {
    int n = 0;
    for (const auto& s : r.solutions)
        if (s.collision_cost < threshold) ++n;
    return n;
}

int cmd_plan(const std::string& problem_path, const std::string& output_path,
             const std::string& plot_dir, const std::vector<std::string>& overrides) {
    json doc = smto::read_json_file(problem_path);
    for (const auto& o : overrides) smto::apply_override(doc, o);
    smto::Problem problem = smto::problem_from_json(doc);
    RunOutput run = run_problem(doc, {});
    smto::write_text_atomic(output_path,
                            smto::result_to_json(run.result, run.resolved).dump(2) + "\n");
    if (!plot_dir.empty()) smto::write_plots(problem, run.result, plot_dir);
    std::cout << "solutions: " << run.result.solutions.size()
              << (run.result.infeasible ? " (no solution met the collision threshold)" : "")
              << "\nresult: " << output_path << "\n";
    return run.result.infeasible ? 2 : 0;
}

int cmd_sweep(const std::string& problem_path, const std::string& grid_path,
              const std::string& output_dir, const std::vector<std::string>& overrides) {
    json base = smto::read_json_file(problem_path);
    for (const auto& o : overrides) smto::apply_override(base, o);
    json grid = smto::read_json_file(grid_path);
    smto::require(grid.is_object() && !grid.empty(),
                  "sweep grid must be an object of {key: [values...]}");

    std::vector<std::string> keys;
    std::vector<std::vector<double>> values;
    for (const auto& [key, vals] : grid.items()) {
        smto::require(key == "O" || key == "N" || key == "cost_scale_alpha",
                      "sweep grid keys must be O, N or cost_scale_alpha, got: " + key);
        smto::require(vals.is_array() && !vals.empty(),
                      "sweep grid values for " + key + " must be a nonempty array");
        keys.push_back(key);
        values.push_back(vals.get<std::vector<double>>());
    }

    std::vector<std::vector<double>> cells{{}};
    for (const auto& vals : values) {
        std::vector<std::vector<double>> next;
        for (const auto& cell : cells)
            for (double v : vals) {
                auto c = cell;
                c.push_back(v);
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }

    fs::create_directories(output_dir);
    constexpr int kSeedsPerCell = 3;
    std::ostringstream csv;
    for (const auto& key : keys) csv << key << ",";
    csv << "mean_runtime_seconds,mean_solution_count,failed_runs\n";

    std::uint64_t base_seed = base.at("smto").at("seed").get<std::uint64_t>();
    for (const auto& cell : cells) {
        double runtime_sum = 0.0;
        double count_sum = 0.0;
        int failures = 0;
        std::string cell_tag;
        for (std::size_t k = 0; k < keys.size(); ++k)
            cell_tag += keys[k] + std::to_string(cell[k]) + "_";
        for (int s = 0; s < kSeedsPerCell; ++s) {
            json doc = base;
            for (std::size_t k = 0; k < keys.size(); ++k) doc["smto"][keys[k]] = cell[k];
            doc["smto"]["seed"] = base_seed + static_cast<std::uint64_t>(s);
            try {
                RunOutput run = run_problem(doc, {});
                runtime_sum += run.result.diagnostics.runtime_seconds;
                double threshold = smto::problem_from_json(doc).config.collision_accept_threshold;
                count_sum += feasible_count(run.result, threshold);
                smto::write_text_atomic(
                    (fs::path(output_dir) / (cell_tag + "seed" + std::to_string(s) + ".json"))
                        .string(),
                    smto::result_to_json(run.result, run.resolved).dump(2) + "\n");
            } catch (const std::exception& e) {
                ++failures;
                std::cerr << "cell " << cell_tag << " seed " << s << " failed: " << e.what()
                          << "\n";
            }
        }
        int ok = kSeedsPerCell - failures;
        for (double v : cell) csv << v << ",";
        csv << (ok > 0 ? runtime_sum / ok : 0.0) << "," << (ok > 0 ? count_sum / ok : 0.0) << ","
            << failures << "\n";
    }
    smto::write_text_atomic((fs::path(output_dir) / "summary.csv").string(), csv.str());
    std::cout << "sweep summary: " << (fs::path(output_dir) / "summary.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal trajectory optimizer for planar arms and point robots"};
    app.require_subcommand(1);

    std::string problem_path, output_path, plot_dir, grid_path, output_dir;
    std::vector<std::string> overrides;

    auto* plan = app.add_subcommand("plan", "Plan trajectories for a problem file");
    plan->add_option("problem", problem_path, "problem JSON file")->required();
    plan->add_option("-o,--output", output_path, "result JSON file")->required();
    plan->add_option("--plot", plot_dir, "directory for SVG plots");
    plan->add_option("--set", overrides, "override problem fields, e.g. --set smto.seed=7");

    auto* sweep = app.add_subcommand("sweep", "Run a hyperparameter grid (3 seeds per cell)");
    sweep->add_option("problem", problem_path, "problem JSON file")->required();
    sweep->add_option("--grid", grid_path, "grid JSON file, e.g. {\"N\": [200, 500]}")->required();
    sweep->add_option("-o,--output", output_dir, "output directory")->required();
    sweep->add_option("--set", overrides, "override problem fields before sweeping");

    CLI11_PARSE(app, argc, argv);
    try {
        if (plan->parsed()) return cmd_plan(problem_path, output_path, plot_dir, overrides);
        return cmd_sweep(problem_path, grid_path, output_dir, overrides);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
