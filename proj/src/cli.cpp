// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mimo_doa/cli.hpp"

#include "mimo_doa/experiment.hpp"
#include "mimo_doa/subspace_doa.hpp"

#include "text_util.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mimo_doa {

namespace {

const std::vector<std::string> kVerbs{"gen-data", "train", "eval", "sweep", "grid", "denoise", "crb", "demo"};

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string keys_footer() {
    std::ostringstream os;
    os << "Verbs:\n"
          "  gen-data   write training pools and test sets\n"
          "  train      train every missing emulator model\n"
          "  eval       evaluate trained models and baselines -> evaluation.csv\n"
          "  sweep      train on demand, then write sweep_<case>.csv for every case\n"
          "  grid       best-training-SNR grid -> grid.csv, cumulative.csv\n"
          "  denoise    covariance error vs. SNR-offset references -> denoise.csv\n"
          "  crb        Cramer-Rao bounds of the low and high arrays -> crb.csv\n"
          "  demo       noiseless two-target MUSIC example\n\n"
          "Config keys (file lines 'key = value', or --set key=value):\n";
    for (const auto &[k, d] : ExperimentConfig::key_help()) {
        os << "  " << std::left << std::setw(26) << k << d << '\n';
    }
    return os.str();
}

int run_demo(std::ostream &out) {
    const ArrayConfig cfg{4, 4, 0.5};
    const std::vector<double> truth_deg{-12.3, 17.6};
    TargetScene scene;
    for (double d : truth_deg) {
        scene.angles_rad.push_back(deg_to_rad(d));
    }
    scene.rcs = draw_rcs(2, 64, 7);
    const SnapshotBlock block = synthesize(scene, cfg, std::numeric_limits<double>::infinity(), 0);
    const auto cov = sample_covariance(block, {0, block.data.cols()});
    const PeakPick pick = music_estimate(cov, cfg, 2, {-40.0, 40.0, 0.1});
    out << "array 4x4 (16 virtual elements), 2 targets, 64 noiseless snapshots\n";
    for (std::size_t i = 0; i < pick.angles_deg.size(); ++i) {
        out << "target " << i + 1 << ": true " << text::format_number(truth_deg[i]) << " deg, estimated "
            << std::fixed << std::setprecision(1) << pick.angles_deg[i] << " deg\n";
        out.unsetf(std::ios::floatfield);
    }
    return kExitOk;
}

void print_sweep(std::ostream &out, const char *name, const SweepResult &res) {
    out << name << ":\n";
    for (const auto &r : res.rows) {
        out << "  range " << r.angle_range << "  snr " << std::setw(4) << r.test_snr_db << " dB  set "
            << std::setw(8) << r.train_set_id << "  mse " << std::scientific << std::setprecision(3)
            << r.doa_mse_rad2 << " rad^2\n";
        out.unsetf(std::ios::floatfield);
        out << std::setprecision(6);
    }
}

int run_verb(const std::string &verb, const ExperimentConfig &cfg, std::ostream &out) {
    if (verb == "demo") {
        return run_demo(out);
    }
    Experiment exp(cfg);
    const auto &dir = cfg.out_dir;
    if (verb == "gen-data") {
        exp.build_datasets();
        out << "datasets and test sets written under " << dir.string() << '\n';
    } else if (verb == "train") {
        exp.train_models();
        out << "models written under " << (dir / "models").string() << '\n';
    } else if (verb == "eval") {
        const SweepResult res = exp.evaluate();
        write_results(res, dir / "evaluation.csv");
        out << res.rows.size() << " rows written to " << (dir / "evaluation.csv").string() << '\n';
    } else if (verb == "sweep") {
        for (auto c : {SweepCase::mixed_m1, SweepCase::matched_snr, SweepCase::best_of_all, SweepCase::raw_low,
                       SweepCase::raw_high}) {
            const SweepResult res = exp.run_case_sweep(c);
            write_results(res, dir / (std::string("sweep_") + to_string(c) + ".csv"));
            print_sweep(out, to_string(c), res);
        }
    } else if (verb == "grid") {
        const GridTable g = exp.best_train_snr_grid();
        write_grid(g, dir / "grid.csv", dir / "cumulative.csv");
        out << g.cells.size() << " grid cells written to " << (dir / "grid.csv").string() << '\n';
    } else if (verb == "denoise") {
        const DenoiseTable t = exp.denoise_analysis(cfg.offsets_db);
        write_denoise(t, dir / "denoise.csv");
        out << t.rows.size() << " rows written to " << (dir / "denoise.csv").string() << '\n';
    } else if (verb == "crb") {
        const auto rows = exp.crb_table();
        write_crb(rows, dir / "crb.csv");
        out << rows.size() << " rows written to " << (dir / "crb.csv").string() << '\n';
    }
    return kExitOk;
}

} // namespace

int parse_and_dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"MIMO radar DOA estimation with an emulated large virtual array", "mimo_doa"};
    app.footer(keys_footer());
    std::string verb;
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out_dir;
    app.add_option("verb", verb, "one of: gen-data train eval sweep grid denoise crb demo")->required();
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--set", overrides, "override one config key, KEY=VALUE (repeatable)")->take_all();
    auto *seed_opt = app.add_option("--seed", seed, "base random seed");
    auto *workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    ExperimentConfig cfg;
    try {
        if (std::find(kVerbs.begin(), kVerbs.end(), verb) == kVerbs.end()) {
            throw UsageError("unknown verb '" + verb + "'");
        }
        if (!config_path.empty()) {
            if (!std::filesystem::exists(config_path)) {
                throw UsageError("config file not found: " + config_path);
            }
            cfg = ExperimentConfig::load(config_path);
        }
        for (const auto &o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                throw UsageError("--set expects KEY=VALUE, got '" + o + "'");
            }
            cfg.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (*seed_opt) {
            cfg.seed = seed;
        }
        if (*workers_opt) {
            cfg.workers = workers;
        }
        if (!out_dir.empty()) {
            cfg.out_dir = out_dir;
        }
        cfg.validate();
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        return run_verb(verb, cfg, out);
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace mimo_doa
