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

#include "mimo_doa/experiment.hpp"

#include "mimo_doa/metrics.hpp"
#include "mimo_doa/rng.hpp"
#include "mimo_doa/subspace_doa.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace mimo_doa {

namespace fs = std::filesystem;

void parallel_for(int n, int workers, const std::function<void(int)> &fn) {
    if (n <= 0) {
        return;
    }
    const int threads = std::clamp(workers, 1, n);
    if (threads == 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    next = n;
                }
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

const char *to_string(SweepCase c) {
    switch (c) {
    case SweepCase::mixed_m1:
        return "mixed_M1";
    case SweepCase::matched_snr:
        return "matched_snr";
    case SweepCase::best_of_all:
        return "best_of_all";
    case SweepCase::raw_low:
        return "raw_low";
    case SweepCase::raw_high:
        return "raw_high";
    }
    return "?";
}

SweepCase parse_sweep_case(const std::string &s) {
    for (auto c : {SweepCase::mixed_m1, SweepCase::matched_snr, SweepCase::best_of_all, SweepCase::raw_low,
                   SweepCase::raw_high}) {
        if (s == to_string(c)) {
            return c;
        }
    }
    throw DomainError("unknown sweep case '" + s + "'");
}

namespace {

// Writes through a temporary name so an interrupted run never leaves a truncated artifact behind.
template <typename WriteFn>
void publish(const fs::path &path, WriteFn &&write) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    write(tmp);
    fs::rename(tmp, path);
}

std::string config_fingerprint(const ExperimentConfig &cfg) {
    std::istringstream in(cfg.to_text());
    std::string line;
    std::string out;
    while (std::getline(in, line)) {
        if (line.rfind("out_dir", 0) == 0 || line.rfind("workers", 0) == 0) {
            continue;
        }
        out += line + '\n';
    }
    return out;
}

std::vector<double> angles_deg(const TargetScene &s) {
    std::vector<double> d;
    for (double a : s.angles_rad) {
        d.push_back(rad_to_deg(a));
    }
    return d;
}

/// Train SNR whose single-SNR set serves a given test SNR: exact match, else nearest.
double matched_train_snr(const ExperimentConfig &cfg, double test_snr) {
    double best = cfg.snr_train_db.front();
    for (double s : cfg.snr_train_db) {
        if (std::abs(s - test_snr) < std::abs(best - test_snr)) {
            best = s;
        }
    }
    return best;
}

std::vector<CovarianceEstimate> trial_covariances(const Eigen::MatrixXcd &data, int trials, int ns) {
    std::vector<CovarianceEstimate> out;
    out.reserve(static_cast<std::size_t>(trials));
    for (int q = 0; q < trials; ++q) {
        out.push_back(sample_covariance(data, {static_cast<Eigen::Index>(q) * ns, ns}));
    }
    return out;
}

double music_mse(const std::vector<CovarianceEstimate> &covs, const SteeringGrid &grid, int k,
                 const std::vector<std::vector<double>> &truths) {
    std::vector<std::vector<double>> est;
    est.reserve(covs.size());
    for (const auto &c : covs) {
        est.push_back(music_estimate(c, grid, k).angles_deg);
    }
    return doa_mse(est, truths);
}

double mean_cov_error(const std::vector<CovarianceEstimate> &ref, const std::vector<CovarianceEstimate> &pred) {
    double s = 0.0;
    for (std::size_t q = 0; q < ref.size(); ++q) {
        s += cov_error(ref[q], pred[q]);
    }
    return s / static_cast<double>(ref.size());
}

double mean_crb(const TestSet &t, double sigma2, const ArrayConfig &cfg) {
    double s = 0.0;
    for (const auto &sc : t.scenes) {
        s += crb(sc.angles_rad, sc.rcs, sigma2, cfg).mean_diagonal();
    }
    return s / static_cast<double>(t.scenes.size());
}

} // namespace

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    sets_ = training_sets(cfg_);
    check_directory();
}

void Experiment::check_directory() const {
    const fs::path lock = cfg_.out_dir / "config.txt";
    const std::string fp = config_fingerprint(cfg_);
    if (fs::exists(lock)) {
        std::ifstream in(lock, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        if (ss.str() != fp) {
            throw DomainError("output directory " + cfg_.out_dir.string() +
                              " was created with a different configuration; choose a fresh --out directory");
        }
        return;
    }
    fs::create_directories(cfg_.out_dir);
    std::ofstream out(lock, std::ios::binary);
    out << fp;
    if (!out) {
        throw IoError("cannot write " + lock.string());
    }
}

fs::path Experiment::dataset_path(int range_index, const std::string &set_id) const {
    return cfg_.out_dir / "datasets" / ("range" + std::to_string(range_index) + "_" + set_id + ".bin");
}

fs::path Experiment::model_path(int range_index, const std::string &set_id) const {
    return cfg_.out_dir / "models" / ("range" + std::to_string(range_index) + "_" + set_id + ".mlp");
}

fs::path Experiment::test_path(int range_index, double snr_db) const {
    return cfg_.out_dir / "test" / ("range" + std::to_string(range_index) + "_" + single_set_id(snr_db) + ".bin");
}

fs::path Experiment::scene_path(int range_index, double snr_db) const {
    return cfg_.out_dir / "test" / ("range" + std::to_string(range_index) + "_" + single_set_id(snr_db) + ".scenes");
}

TestSet Experiment::ensure_test_set(int range_index, double snr_db) const {
    const fs::path dp = test_path(range_index, snr_db);
    const fs::path sp = scene_path(range_index, snr_db);
    if (fs::exists(dp) && fs::exists(sp)) {
        return load_test_set(dp, sp);
    }
    TestSet t = generate_test_set(cfg_, range_index, snr_db);
    fs::create_directories(dp.parent_path());
    const fs::path dtmp = dp.string() + ".tmp";
    const fs::path stmp = sp.string() + ".tmp";
    save_test_set(t, dtmp, stmp);
    fs::rename(stmp, sp);
    fs::rename(dtmp, dp);
    return t;
}

void Experiment::build_datasets() {
    const int n_ranges = static_cast<int>(cfg_.ranges.size());
    const int n_sets = static_cast<int>(sets_.size());
    parallel_for(n_ranges * n_sets, cfg_.workers, [&](int task) {
        const int r = task / n_sets;
        const auto &set = sets_[static_cast<std::size_t>(task % n_sets)];
        const fs::path p = dataset_path(r, set.id);
        if (!fs::exists(p)) {
            publish(p, [&](const fs::path &tmp) { save_dataset(generate_training_set(cfg_, r, set), tmp); });
        }
    });
    const int n_snr = static_cast<int>(cfg_.snr_test_db.size());
    parallel_for(n_ranges * n_snr, cfg_.workers, [&](int task) {
        ensure_test_set(task / n_snr, cfg_.snr_test_db[static_cast<std::size_t>(task % n_snr)]);
    });
}

TrainResult Experiment::train_one(int range_index, const TrainingSetSpec &set) const {
    const fs::path dp = dataset_path(range_index, set.id);
    Dataset data;
    if (fs::exists(dp)) {
        data = load_dataset(dp);
    } else {
        data = generate_training_set(cfg_, range_index, set);
        publish(dp, [&](const fs::path &tmp) { save_dataset(data, tmp); });
    }

    TrainConfig tc;
    tc.epochs = cfg_.epochs;
    tc.batch_size = cfg_.batch_size;
    tc.adam = cfg_.adam;
    tc.train_fraction = 1.0 - cfg_.val_fraction;
    tc.val_fraction = cfg_.val_fraction;
    tc.test_fraction = 0.0;
    tc.seed = derive_seed(cfg_.seed, {5, static_cast<std::uint64_t>(range_index), static_cast<std::uint64_t>(set.index)});

    auto score = [](const LossHistory &h) {
        return h.best_epoch >= 0 ? h.val[static_cast<std::size_t>(h.best_epoch)] : h.train.back();
    };
    if (cfg_.output_activation != "best") {
        tc.output_activation = parse_output_activation(cfg_.output_activation);
        return train(data, tc);
    }
    tc.output_activation = OutputActivation::linear;
    TrainResult lin = train(data, tc);
    tc.output_activation = OutputActivation::relu;
    TrainResult relu = train(data, tc);
    return score(relu.history) < score(lin.history) ? relu : lin;
}

void Experiment::train_models() {
    std::vector<std::pair<int, const TrainingSetSpec *>> todo;
    for (int r = 0; r < static_cast<int>(cfg_.ranges.size()); ++r) {
        for (const auto &s : sets_) {
            if (!fs::exists(model_path(r, s.id))) {
                todo.emplace_back(r, &s);
            }
        }
    }
    parallel_for(static_cast<int>(todo.size()), cfg_.workers, [&](int i) {
        const auto [r, set] = todo[static_cast<std::size_t>(i)];
        const TrainResult res = train_one(r, *set);
        const fs::path mp = model_path(r, set->id);
        fs::create_directories(mp.parent_path());
        write_history(res.history, mp.string() + ".history.csv");
        publish(mp, [&](const fs::path &tmp) { save_model(res.model, tmp); });
    });
    evaluated_ = false;
}

MlpModel Experiment::require_model(int range_index, const std::string &set_id) const {
    const fs::path p = model_path(range_index, set_id);
    if (!fs::exists(p)) {
        throw IoError("model for training set " + set_id + " (range " + range_label(cfg_.ranges[range_index]) +
                      ") not found: " + p.string() + "; run the train command first");
    }
    return load_model(p);
}

SweepResult Experiment::evaluate() const {
    const int k = cfg_.targets;
    const int ns = cfg_.snapshots;
    const int q_trials = cfg_.trials();
    const double offset = cfg_.offsets_db.empty() ? 0.0 : cfg_.offsets_db.front();
    const int n_snr = static_cast<int>(cfg_.snr_test_db.size());
    std::vector<std::vector<SweepRow>> per_task(cfg_.ranges.size() * static_cast<std::size_t>(n_snr));

    for (int r = 0; r < static_cast<int>(cfg_.ranges.size()); ++r) {
        const AngleRange range = cfg_.ranges[static_cast<std::size_t>(r)];
        const std::string label = range_label(range);
        const AngleGrid grid = search_grid_for(range, cfg_.grid_pad_deg, cfg_.grid_step_deg);
        const SteeringGrid low_grid = make_steering_grid(cfg_.low, grid);
        const SteeringGrid high_grid = make_steering_grid(cfg_.high, grid);
        std::vector<MlpModel> models;
        for (const auto &s : sets_) {
            models.push_back(require_model(r, s.id));
        }

        parallel_for(n_snr, cfg_.workers, [&](int si) {
            const double snr = cfg_.snr_test_db[static_cast<std::size_t>(si)];
            const TestSet t = ensure_test_set(r, snr);
            std::vector<std::vector<double>> truths;
            for (const auto &sc : t.scenes) {
                truths.push_back(angles_deg(sc));
            }
            const auto low_cov = trial_covariances(t.low, q_trials, ns);
            const auto high_cov = trial_covariances(t.high, q_trials, ns);
            const auto ho_cov = trial_covariances(high_reference(cfg_, r, t, snr + offset), q_trials, ns);

            SweepRow base;
            base.angle_range = label;
            base.test_snr_db = snr;
            base.mse_low_array = music_mse(low_cov, low_grid, k, truths);
            base.mse_high_array = music_mse(high_cov, high_grid, k, truths);
            const double sigma2 = snr_to_noise_var(snr);
            base.crb_low = mean_crb(t, sigma2, cfg_.low);
            base.crb_high = mean_crb(t, sigma2, cfg_.high);

            auto &rows = per_task[static_cast<std::size_t>(r * n_snr + si)];
            const SnapshotBlock low_block{t.low, snr, cfg_.low};
            for (std::size_t m = 0; m < models.size(); ++m) {
                const SnapshotBlock pred = predict(models[m], low_block, cfg_.high);
                const auto pred_cov = trial_covariances(pred.data, q_trials, ns);
                SweepRow row = base;
                row.train_set_id = sets_[m].id;
                row.doa_mse_rad2 = music_mse(pred_cov, high_grid, k, truths);
                row.r_e = mean_cov_error(high_cov, pred_cov);
                row.r_offset = mean_cov_error(ho_cov, pred_cov);
                rows.push_back(std::move(row));
            }
            SweepRow low_row = base;
            low_row.train_set_id = kRawLowId;
            low_row.doa_mse_rad2 = base.mse_low_array;
            low_row.r_e = std::numeric_limits<double>::quiet_NaN();
            low_row.r_offset = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(std::move(low_row));
            SweepRow high_row = base;
            high_row.train_set_id = kRawHighId;
            high_row.doa_mse_rad2 = base.mse_high_array;
            high_row.r_e = 0.0;
            high_row.r_offset = mean_cov_error(ho_cov, high_cov);
            rows.push_back(std::move(high_row));
        });
    }

    SweepResult out;
    for (auto &rows : per_task) {
        for (auto &row : rows) {
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

const SweepResult &Experiment::evaluation() {
    if (!evaluated_) {
        train_models();
        evaluation_ = evaluate();
        evaluated_ = true;
        write_results(evaluation_, cfg_.out_dir / "evaluation.csv");
    }
    return evaluation_;
}

SweepResult select_case(const SweepResult &evaluation, SweepCase which, const ExperimentConfig &cfg) {
    SweepResult out;
    auto is_model_row = [](const SweepRow &r) { return r.train_set_id != kRawLowId && r.train_set_id != kRawHighId; };
    switch (which) {
    case SweepCase::mixed_m1:
    case SweepCase::raw_low:
    case SweepCase::raw_high: {
        const std::string id = which == SweepCase::mixed_m1 ? kMixedLargeId
                               : which == SweepCase::raw_low ? kRawLowId
                                                             : kRawHighId;
        for (const auto &r : evaluation.rows) {
            if (r.train_set_id == id) {
                out.rows.push_back(r);
            }
        }
        break;
    }
    case SweepCase::matched_snr:
        for (const auto &r : evaluation.rows) {
            if (r.train_set_id == single_set_id(matched_train_snr(cfg, r.test_snr_db))) {
                out.rows.push_back(r);
            }
        }
        break;
    case SweepCase::best_of_all: {
        const SweepRow *current = nullptr;
        for (const auto &r : evaluation.rows) {
            if (!is_model_row(r)) {
                continue;
            }
            if (current && (current->angle_range != r.angle_range || current->test_snr_db != r.test_snr_db)) {
                out.rows.push_back(*current);
                current = nullptr;
            }
            if (!current || r.doa_mse_rad2 < current->doa_mse_rad2) {
                current = &r;
            }
        }
        if (current) {
            out.rows.push_back(*current);
        }
        break;
    }
    }
    return out;
}

void flag_grid_column(std::vector<GridCell *> &column) {
    std::stable_sort(column.begin(), column.end(),
                     [](const GridCell *a, const GridCell *b) { return a->doa_mse_rad2 < b->doa_mse_rad2; });
    if (column.empty()) {
        return;
    }
    const double best = column.front()->doa_mse_rad2;
    for (std::size_t i = 0; i < column.size(); ++i) {
        column[i]->best = i == 0;
        column[i]->second_best = i == 1;
        column[i]->within_10pct = column[i]->doa_mse_rad2 <= 1.1 * best;
    }
}

GridTable grid_from_evaluation(const SweepResult &evaluation, const ExperimentConfig &cfg) {
    GridTable g;
    for (const auto &range : cfg.ranges) {
        const std::string label = range_label(range);
        const std::size_t first = g.cells.size();
        for (double test : cfg.snr_test_db) {
            for (double train : cfg.snr_train_db) {
                const std::string id = single_set_id(train);
                const auto it = std::find_if(evaluation.rows.begin(), evaluation.rows.end(), [&](const SweepRow &r) {
                    return r.angle_range == label && r.test_snr_db == test && r.train_set_id == id;
                });
                if (it == evaluation.rows.end()) {
                    throw DomainError("evaluation table lacks " + id + " at " + text::format_number(test) + " dB");
                }
                g.cells.push_back({label, test, train, it->doa_mse_rad2, false, false, false});
            }
        }
        const std::size_t n_train = cfg.snr_train_db.size();
        for (std::size_t col = first; col < g.cells.size(); col += n_train) {
            std::vector<GridCell *> column;
            for (std::size_t i = 0; i < n_train; ++i) {
                column.push_back(&g.cells[col + i]);
            }
            flag_grid_column(column);
        }
        for (const auto &set : training_sets(cfg)) {
            double sum = 0.0;
            for (const auto &r : evaluation.rows) {
                if (r.angle_range == label && r.train_set_id == set.id) {
                    sum += r.doa_mse_rad2;
                }
            }
            g.cumulative.push_back({label, set.id, sum});
        }
    }
    return g;
}

SweepResult Experiment::run_case_sweep(SweepCase which) {
    SweepResult res = select_case(evaluation(), which, cfg_);
    if (res.rows.empty() && !evaluation().rows.empty()) {
        throw DomainError(std::string("sweep case ") + to_string(which) + " selected no rows");
    }
    return res;
}

GridTable Experiment::best_train_snr_grid() { return grid_from_evaluation(evaluation(), cfg_); }

DenoiseTable Experiment::denoise_analysis(const std::vector<double> &offsets_db) {
    require(!offsets_db.empty(), "denoise analysis needs at least one SNR offset");
    train_models();
    const int ns = cfg_.snapshots;
    const int q_trials = cfg_.trials();
    const int n_snr = static_cast<int>(cfg_.snr_test_db.size());
    DenoiseTable table;
    table.offsets_db = offsets_db;
    std::vector<std::vector<DenoiseRow>> per_task(cfg_.ranges.size() * static_cast<std::size_t>(n_snr));

    for (int r = 0; r < static_cast<int>(cfg_.ranges.size()); ++r) {
        const std::string label = range_label(cfg_.ranges[static_cast<std::size_t>(r)]);
        const MlpModel m2 = require_model(r, kMixedSmallId);
        parallel_for(n_snr, cfg_.workers, [&](int si) {
            const double snr = cfg_.snr_test_db[static_cast<std::size_t>(si)];
            const TestSet t = ensure_test_set(r, snr);
            const auto high_cov = trial_covariances(t.high, q_trials, ns);
            std::vector<std::vector<CovarianceEstimate>> refs;
            for (double off : offsets_db) {
                refs.push_back(trial_covariances(high_reference(cfg_, r, t, snr + off), q_trials, ns));
            }
            const SnapshotBlock low_block{t.low, snr, cfg_.low};
            const MlpModel matched = require_model(r, single_set_id(matched_train_snr(cfg_, snr)));
            const std::pair<const char *, const MlpModel *> models[] = {{"M2", &m2}, {"matched", &matched}};
            for (const auto &[name, model] : models) {
                const auto pred_cov = trial_covariances(predict(*model, low_block, cfg_.high).data, q_trials, ns);
                DenoiseRow row;
                row.angle_range = label;
                row.model = name;
                row.test_snr_db = snr;
                row.r_e = mean_cov_error(high_cov, pred_cov);
                for (const auto &ref : refs) {
                    row.r_offset.push_back(mean_cov_error(ref, pred_cov));
                }
                per_task[static_cast<std::size_t>(r * n_snr + si)].push_back(std::move(row));
            }
        });
    }
    for (auto &rows : per_task) {
        for (auto &row : rows) {
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::vector<CrbRow> Experiment::crb_table() const {
    const int n_snr = static_cast<int>(cfg_.snr_test_db.size());
    std::vector<CrbRow> rows(cfg_.ranges.size() * static_cast<std::size_t>(n_snr));
    parallel_for(static_cast<int>(rows.size()), cfg_.workers, [&](int task) {
        const int r = task / n_snr;
        const double snr = cfg_.snr_test_db[static_cast<std::size_t>(task % n_snr)];
        const TestSet t = ensure_test_set(r, snr);
        const double sigma2 = snr_to_noise_var(snr);
        rows[static_cast<std::size_t>(task)] = {range_label(cfg_.ranges[static_cast<std::size_t>(r)]), snr,
                                                mean_crb(t, sigma2, cfg_.low), mean_crb(t, sigma2, cfg_.high)};
    });
    return rows;
}

} // namespace mimo_doa
