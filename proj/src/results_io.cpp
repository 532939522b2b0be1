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

#include "text_util.hpp"

#include <fstream>
#include <sstream>

namespace mimo_doa {

namespace {

constexpr const char *kSweepHeader =
    "angle_range,train_set_id,test_snr_db,doa_mse_rad2,crb_low,crb_high,mse_low_array,mse_high_array,r_e,r_offset";

class CsvFile {
  public:
    explicit CsvFile(const std::filesystem::path &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw IoError("cannot open " + path.string() + " for writing");
        }
    }

    template <typename... Fields>
    void row(const Fields &...fields) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
        out_ << '\n';
    }

    void close() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed for " + path_.string());
        }
    }

  private:
    static std::string cell(const std::string &s) { return s; }
    static std::string cell(const char *s) { return s; }
    static std::string cell(double v) { return text::format_number(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }

    std::filesystem::path path_;
    std::ofstream out_;
};

} // namespace

void write_results(const SweepResult &result, const std::filesystem::path &path) {
    CsvFile f(path);
    f.row(kSweepHeader);
    for (const auto &r : result.rows) {
        f.row(r.angle_range, r.train_set_id, r.test_snr_db, r.doa_mse_rad2, r.crb_low, r.crb_high, r.mse_low_array,
              r.mse_high_array, r.r_e, r.r_offset);
    }
    f.close();
}

SweepResult read_results(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) {
        throw IoError(path.string() + ": unexpected CSV header");
    }
    SweepResult out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto f = text::split(line, ',');
        if (f.size() != 10) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 10 fields");
        }
        SweepRow r;
        r.angle_range = std::string(f[0]);
        r.train_set_id = std::string(f[1]);
        r.test_snr_db = text::parse_double(f[2], "test_snr_db");
        r.doa_mse_rad2 = text::parse_double(f[3], "doa_mse_rad2");
        r.crb_low = text::parse_double(f[4], "crb_low");
        r.crb_high = text::parse_double(f[5], "crb_high");
        r.mse_low_array = text::parse_double(f[6], "mse_low_array");
        r.mse_high_array = text::parse_double(f[7], "mse_high_array");
        r.r_e = text::parse_double(f[8], "r_e");
        r.r_offset = text::parse_double(f[9], "r_offset");
        out.rows.push_back(std::move(r));
    }
    return out;
}

void write_grid(const GridTable &grid, const std::filesystem::path &cells_path,
                const std::filesystem::path &cumulative_path) {
    CsvFile cells(cells_path);
    cells.row("angle_range,test_snr_db,train_snr_db,doa_mse_rad2,best,second_best,within_10pct");
    for (const auto &c : grid.cells) {
        cells.row(c.angle_range, c.test_snr_db, c.train_snr_db, c.doa_mse_rad2, c.best, c.second_best, c.within_10pct);
    }
    cells.close();
    CsvFile cum(cumulative_path);
    cum.row("angle_range,train_set_id,cumulative_mse_rad2");
    for (const auto &c : grid.cumulative) {
        cum.row(c.angle_range, c.train_set_id, c.cumulative_mse);
    }
    cum.close();
}

void write_denoise(const DenoiseTable &table, const std::filesystem::path &path) {
    CsvFile f(path);
    std::string header = "angle_range,model,test_snr_db,r_e";
    for (double o : table.offsets_db) {
        header += ",r_offset_" + text::format_number(o) + "db";
    }
    f.row(header);
    for (const auto &r : table.rows) {
        std::string line = r.angle_range + "," + r.model + "," + text::format_number(r.test_snr_db) + "," +
                           text::format_number(r.r_e);
        for (double v : r.r_offset) {
            line += "," + text::format_number(v);
        }
        f.row(line);
    }
    f.close();
}

void write_crb(const std::vector<CrbRow> &rows, const std::filesystem::path &path) {
    CsvFile f(path);
    f.row("angle_range,test_snr_db,crb_low,crb_high");
    for (const auto &r : rows) {
        f.row(r.angle_range, r.test_snr_db, r.crb_low, r.crb_high);
    }
    f.close();
}

void write_history(const LossHistory &history, const std::filesystem::path &path) {
    CsvFile f(path);
    f.row("epoch,train_mse,val_mse,best");
    f.row(0.0, history.initial_train, history.initial_val, false);
    for (std::size_t e = 0; e < history.train.size(); ++e) {
        f.row(static_cast<double>(e + 1), history.train[e], history.val[e],
              static_cast<int>(e) == history.best_epoch);
    }
    f.close();
}

} // namespace mimo_doa
