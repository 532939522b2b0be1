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

#pragma once

#include "mimo_doa/array_model.hpp"
#include "mimo_doa/neural_emulator.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mimo_doa {

/// Everything that defines one experiment run.
///
/// Defaults are the desk-scale protocol (4x4 low, 8x8 high, 8000-sample single-SNR
/// sets, 3000 test pulses, Ns = 150). ExperimentConfig::full_scale() returns the
/// full-size protocol.
struct ExperimentConfig {
    ArrayConfig low{4, 4, 0.5};
    ArrayConfig high{8, 8, 0.5};
    std::vector<AngleRange> ranges{{0.0, 25.0}, {20.0, 45.0}, {40.0, 65.0}};
    int targets = 4;
    double min_sep_deg = 5.0;
    std::vector<double> snr_train_db;  // defaults to -16:10:2
    std::vector<double> snr_test_db;   // defaults to -16:10:2
    int samples_per_set = 8000;        // train + validation pool of every single-SNR set
    int mixed_large = 112000;          // M1
    int mixed_small = 8000;            // M2
    int test_samples = 3000;
    int snapshots = 150;               // Ns
    int pulses_per_scene = 150;        // training scenes are redrawn every this many pulses
    int epochs = 150;
    int batch_size = 120;
    AdamParams adam;
    double val_fraction = 0.25;        // of each pool; 60/20 of the 80% non-test share
    std::string output_activation = "best";  // linear | relu | best
    double grid_step_deg = 0.1;
    double grid_pad_deg = 5.0;
    std::vector<double> offsets_db{8.0, 12.0};
    std::uint64_t seed = 2020;
    std::filesystem::path out_dir = "mimo_doa_out";
    int workers = 1;

    ExperimentConfig();
    static ExperimentConfig full_scale();

    int trials() const { return test_samples / snapshots; }
    void validate() const;

    /// Applies one key=value setting. Unknown keys and malformed values throw DomainError.
    void set(const std::string &key, const std::string &value);

    /// Canonical key = value text, one per line, in documented key order.
    std::string to_text() const;

    /// Parses a flat key = value file. '#' starts a comment.
    static ExperimentConfig from_text(const std::string &text);
    static ExperimentConfig load(const std::filesystem::path &path);

    /// Documented keys with a one-line description each.
    static const std::vector<std::pair<std::string, std::string>> &key_help();
};

/// "lo:hi" with shortest round-trip numbers, used in CSV columns and file names.
std::string range_label(const AngleRange &r);

/// Identifier of a training set: "snr-16", "snr0", "snr10", "M1", "M2".
std::string single_set_id(double snr_db);
inline const std::string kMixedLargeId = "M1";
inline const std::string kMixedSmallId = "M2";
inline const std::string kRawLowId = "raw_low";
inline const std::string kRawHighId = "raw_high";

struct TrainingSetSpec {
    std::string id;
    std::vector<double> snrs_db;  // one entry for single-SNR sets
    int samples = 0;
    int index = 0;                // stable position, used for seeding
};

/// The 14 single-SNR sets (one per training SNR) followed by M1 and M2.
std::vector<TrainingSetSpec> training_sets(const ExperimentConfig &cfg);

/// Generates one training set for one angle range. Deterministic in (cfg.seed, range index, set index).
Dataset generate_training_set(const ExperimentConfig &cfg, int range_index, const TrainingSetSpec &set);

/// Held-out evaluation data for one (range, test SNR): Q trials of Ns pulses.
struct TestSet {
    std::vector<TargetScene> scenes;  // one per trial, rcs is K x Ns
    Eigen::MatrixXcd low;             // L x (Q * Ns)
    Eigen::MatrixXcd high;            // H x (Q * Ns)
    double snr_db = 0.0;
};

/// Test scenes depend only on (seed, range, trial), so every test SNR sees the same targets.
TestSet generate_test_set(const ExperimentConfig &cfg, int range_index, double snr_db);

/// High-array pulses for the test scenes of (range, trial) at an arbitrary SNR. At the
/// SNR of an existing test set this reproduces its high block exactly.
Eigen::MatrixXcd high_reference(const ExperimentConfig &cfg, int range_index, const TestSet &tests, double snr_db);

// ---- persisted files -------------------------------------------------------

/// Dataset file: magic "MDOADSET", u32 version, u64 samples, u32 2L, u32 2H,
/// samples x f32 SNR labels, then inputs (2L x S) and targets (2H x S) as row-major f64.
void save_dataset(const Dataset &data, const std::filesystem::path &path);
Dataset load_dataset(const std::filesystem::path &path);

/// Test set = dataset file of stacked low/high pulses plus a scene file holding
/// the per-trial angles and RCS realizations.
void save_test_set(const TestSet &tests, const std::filesystem::path &dataset_path,
                   const std::filesystem::path &scene_path);
TestSet load_test_set(const std::filesystem::path &dataset_path, const std::filesystem::path &scene_path);

// ---- results ---------------------------------------------------------------

struct SweepRow {
    std::string angle_range;
    std::string train_set_id;
    double test_snr_db = 0.0;
    double doa_mse_rad2 = 0.0;
    double crb_low = 0.0;
    double crb_high = 0.0;
    double mse_low_array = 0.0;
    double mse_high_array = 0.0;
    double r_e = 0.0;
    double r_offset = 0.0;

    bool operator==(const SweepRow &) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

enum class SweepCase { mixed_m1, matched_snr, best_of_all, raw_low, raw_high };
const char *to_string(SweepCase c);
SweepCase parse_sweep_case(const std::string &s);

struct GridCell {
    std::string angle_range;
    double test_snr_db = 0.0;
    double train_snr_db = 0.0;
    double doa_mse_rad2 = 0.0;
    bool best = false;
    bool second_best = false;
    bool within_10pct = false;
};

struct CumulativeRow {
    std::string angle_range;
    std::string train_set_id;
    double cumulative_mse = 0.0;  // sum over test SNRs
};

struct GridTable {
    std::vector<GridCell> cells;
    std::vector<CumulativeRow> cumulative;
};

/// Flags best, second best and within-10%-of-best per test SNR. Cells of one range only.
void flag_grid_column(std::vector<GridCell *> &column);

struct DenoiseRow {
    std::string angle_range;
    std::string model;  // "M2" or "matched"
    double test_snr_db = 0.0;
    double r_e = 0.0;
    std::vector<double> r_offset;  // one per requested offset
};

struct DenoiseTable {
    std::vector<double> offsets_db;
    std::vector<DenoiseRow> rows;
};

struct CrbRow {
    std::string angle_range;
    double test_snr_db = 0.0;
    double crb_low = 0.0;
    double crb_high = 0.0;
};

// CSV writers. Numbers use the shortest round-trip representation, so files are
// byte-identical across reruns with the same seed.
void write_results(const SweepResult &result, const std::filesystem::path &path);
SweepResult read_results(const std::filesystem::path &path);
void write_grid(const GridTable &grid, const std::filesystem::path &cells_path,
                const std::filesystem::path &cumulative_path);
void write_denoise(const DenoiseTable &table, const std::filesystem::path &path);
void write_crb(const std::vector<CrbRow> &rows, const std::filesystem::path &path);
void write_history(const LossHistory &history, const std::filesystem::path &path);

// ---- orchestration ---------------------------------------------------------

/// Runs the protocol against an output directory:
///
///   <out>/config.txt                      canonical configuration of the run
///   <out>/datasets/<range>_<set>.bin      training pools
///   <out>/models/<range>_<set>.mlp        trained emulators (+ .history.csv)
///   <out>/test/<range>_<snr>.bin|.scenes  evaluation pulses
///   <out>/*.csv                           results
///
/// Artifacts already present are reused. A directory created with a different
/// configuration is rejected.
class Experiment {
  public:
    explicit Experiment(ExperimentConfig cfg);

    const ExperimentConfig &config() const { return cfg_; }

    std::filesystem::path dataset_path(int range_index, const std::string &set_id) const;
    std::filesystem::path model_path(int range_index, const std::string &set_id) const;
    std::filesystem::path test_path(int range_index, double snr_db) const;
    std::filesystem::path scene_path(int range_index, double snr_db) const;

    /// Writes all training pools and test sets.
    void build_datasets();

    /// Trains every missing model (generating data on demand).
    void train_models();

    /// Model for (range, set), loading it from disk. Throws IoError naming the set if absent.
    MlpModel require_model(int range_index, const std::string &set_id) const;

    /// Trains one model from its dataset file and returns it with the chosen history.
    TrainResult train_one(int range_index, const TrainingSetSpec &set) const;

    /// Evaluates all sets plus raw low/high baselines at every test SNR.
    /// Requires trained models; never trains.
    SweepResult evaluate() const;

    SweepResult run_case_sweep(SweepCase which);
    GridTable best_train_snr_grid();
    DenoiseTable denoise_analysis(const std::vector<double> &offsets_db);
    std::vector<CrbRow> crb_table() const;

  private:
    void check_directory() const;
    TestSet ensure_test_set(int range_index, double snr_db) const;
    const SweepResult &evaluation();

    ExperimentConfig cfg_;
    std::vector<TrainingSetSpec> sets_;
    bool evaluated_ = false;
    SweepResult evaluation_;
};

/// Derives one sweep case from the full evaluation table.
SweepResult select_case(const SweepResult &evaluation, SweepCase which, const ExperimentConfig &cfg);

/// Builds the train-SNR x test-SNR grid and cumulative ranking from the full evaluation table.
GridTable grid_from_evaluation(const SweepResult &evaluation, const ExperimentConfig &cfg);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are rethrown on the caller.
void parallel_for(int n, int workers, const std::function<void(int)> &fn);

} // namespace mimo_doa
