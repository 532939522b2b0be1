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

std::vector<double> snr_grid(double lo, double hi, double step) {
    std::vector<double> v;
    for (int i = 0; lo + i * step <= hi + 1e-9; ++i) {
        v.push_back(lo + i * step);
    }
    return v;
}

// "a,b,c" or "lo:hi:step"
std::vector<double> parse_number_list(std::string_view value, std::string_view key) {
    value = text::trim(value);
    if (value.find(':') != std::string_view::npos && value.find(',') == std::string_view::npos) {
        const auto parts = text::split(value, ':');
        if (parts.size() != 3) {
            throw DomainError(std::string(key) + ": expected lo:hi:step");
        }
        const double step = text::parse_double(parts[2], key);
        if (!(step > 0.0)) {
            throw DomainError(std::string(key) + ": step must be positive");
        }
        return snr_grid(text::parse_double(parts[0], key), text::parse_double(parts[1], key), step);
    }
    std::vector<double> out;
    if (value.empty()) {
        return out;
    }
    for (auto p : text::split(value, ',')) {
        out.push_back(text::parse_double(p, key));
    }
    return out;
}

std::string join_numbers(const std::vector<double> &v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + text::format_number(v[i]);
    }
    return s;
}

int parse_count(std::string_view value, std::string_view key) {
    const long long v = text::parse_int(value, key);
    if (v < 0 || v > 1'000'000'000LL) {
        throw DomainError(std::string(key) + ": out of range");
    }
    return static_cast<int>(v);
}

} // namespace

ExperimentConfig::ExperimentConfig() : snr_train_db(snr_grid(-16, 10, 2)), snr_test_db(snr_grid(-16, 10, 2)) {}

ExperimentConfig ExperimentConfig::full_scale() {
    ExperimentConfig c;
    c.low = {10, 10, 0.5};
    c.high = {16, 16, 0.5};
    c.samples_per_set = 60000;
    c.mixed_large = 840000;
    c.mixed_small = 60000;
    c.test_samples = 15000;
    return c;
}

void ExperimentConfig::validate() const {
    low.validate();
    high.validate();
    require(low.virtual_size() < high.virtual_size(), "low array must have fewer virtual elements than high array");
    require(!ranges.empty(), "at least one angle range is required");
    require(targets >= 1, "targets must be >= 1");
    require(targets < low.virtual_size(), "targets must be below the low virtual array size for MUSIC");
    require(targets <= low.max_identifiable_targets(), "targets exceed the low array identifiability bound");
    for (const auto &r : ranges) {
        require(r.hi_deg > r.lo_deg && r.lo_deg > -90.0 && r.hi_deg < 90.0, "angle ranges must satisfy -90 < lo < hi < 90");
        require(r.span() >= (targets - 1) * min_sep_deg, "angle range " + range_label(r) + " cannot hold " +
                                                             std::to_string(targets) + " separated targets");
    }
    require(!snr_train_db.empty() && !snr_test_db.empty(), "SNR lists must be non-empty");
    require(snapshots >= 1, "snapshots must be >= 1");
    require(test_samples >= snapshots && test_samples % snapshots == 0,
            "test_samples must be a positive multiple of snapshots (Q = test_samples / snapshots)");
    require(pulses_per_scene >= 1, "pulses_per_scene must be >= 1");
    require(samples_per_set >= batch_size && mixed_small >= batch_size && mixed_large >= batch_size,
            "every training pool must hold at least one batch");
    require(epochs >= 1 && batch_size >= 1, "epochs and batch_size must be >= 1");
    require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must lie in [0, 1)");
    require(output_activation == "linear" || output_activation == "relu" || output_activation == "best",
            "output_activation must be linear, relu or best");
    require(grid_step_deg > 0.0 && grid_pad_deg >= 0.0, "grid step must be positive and padding non-negative");
    require(workers >= 1, "workers must be >= 1");
}

const std::vector<std::pair<std::string, std::string>> &ExperimentConfig::key_help() {
    static const std::vector<std::pair<std::string, std::string>> keys{
        {"low.tx", "TX antennas of the small array"},
        {"low.rx", "RX antennas of the small array"},
        {"low.spacing", "element spacing of the small array, wavelengths"},
        {"high.tx", "TX antennas of the emulated large array"},
        {"high.rx", "RX antennas of the emulated large array"},
        {"high.spacing", "element spacing of the large array, wavelengths"},
        {"ranges", "target angle ranges in degrees, e.g. 0:25,20:45,40:65"},
        {"targets", "targets per scene (K)"},
        {"min_sep_deg", "minimum pairwise target separation, degrees"},
        {"snr_train", "training SNRs in dB, list a,b,c or lo:hi:step"},
        {"snr_test", "test SNRs in dB, list a,b,c or lo:hi:step"},
        {"samples_per_set", "pulses in every single-SNR training pool (train + validation)"},
        {"mixed_large", "pulses in the large mixed-SNR pool M1"},
        {"mixed_small", "pulses in the small mixed-SNR pool M2"},
        {"test_samples", "test pulses per (range, SNR); must be a multiple of snapshots"},
        {"snapshots", "snapshots per covariance estimate (Ns)"},
        {"pulses_per_scene", "training pulses per drawn target scene"},
        {"train.epochs", "training epochs"},
        {"train.batch_size", "minibatch size"},
        {"train.lr", "Adam learning rate"},
        {"train.beta1", "Adam first-moment decay"},
        {"train.beta2", "Adam second-moment decay"},
        {"train.epsilon", "Adam epsilon"},
        {"train.val_fraction", "share of each pool held out for model selection"},
        {"train.output_activation", "linear, relu, or best (train both, keep lower validation loss)"},
        {"grid.step_deg", "MUSIC search grid step, degrees"},
        {"grid.pad_deg", "MUSIC search grid padding around each range, degrees"},
        {"offsets_db", "SNR offsets for the denoising reference, dB"},
        {"seed", "base random seed"},
        {"out_dir", "output directory"},
        {"workers", "worker threads"},
    };
    return keys;
}

void ExperimentConfig::set(const std::string &key, const std::string &raw) {
    const std::string_view value = text::trim(raw);
    if (key == "low.tx") {
        low.tx_count = parse_count(value, key);
    } else if (key == "low.rx") {
        low.rx_count = parse_count(value, key);
    } else if (key == "low.spacing") {
        low.spacing_wavelengths = text::parse_double(value, key);
    } else if (key == "high.tx") {
        high.tx_count = parse_count(value, key);
    } else if (key == "high.rx") {
        high.rx_count = parse_count(value, key);
    } else if (key == "high.spacing") {
        high.spacing_wavelengths = text::parse_double(value, key);
    } else if (key == "ranges") {
        ranges.clear();
        for (auto item : text::split(value, ',')) {
            const auto lohi = text::split(item, ':');
            if (lohi.size() != 2) {
                throw DomainError("ranges: expected lo:hi pairs separated by commas");
            }
            ranges.push_back({text::parse_double(lohi[0], key), text::parse_double(lohi[1], key)});
        }
    } else if (key == "targets") {
        targets = parse_count(value, key);
    } else if (key == "min_sep_deg") {
        min_sep_deg = text::parse_double(value, key);
    } else if (key == "snr_train") {
        snr_train_db = parse_number_list(value, key);
    } else if (key == "snr_test") {
        snr_test_db = parse_number_list(value, key);
    } else if (key == "samples_per_set") {
        samples_per_set = parse_count(value, key);
    } else if (key == "mixed_large") {
        mixed_large = parse_count(value, key);
    } else if (key == "mixed_small") {
        mixed_small = parse_count(value, key);
    } else if (key == "test_samples") {
        test_samples = parse_count(value, key);
    } else if (key == "snapshots") {
        snapshots = parse_count(value, key);
    } else if (key == "pulses_per_scene") {
        pulses_per_scene = parse_count(value, key);
    } else if (key == "train.epochs") {
        epochs = parse_count(value, key);
    } else if (key == "train.batch_size") {
        batch_size = parse_count(value, key);
    } else if (key == "train.lr") {
        adam.lr = text::parse_double(value, key);
    } else if (key == "train.beta1") {
        adam.beta1 = text::parse_double(value, key);
    } else if (key == "train.beta2") {
        adam.beta2 = text::parse_double(value, key);
    } else if (key == "train.epsilon") {
        adam.epsilon = text::parse_double(value, key);
    } else if (key == "train.val_fraction") {
        val_fraction = text::parse_double(value, key);
    } else if (key == "train.output_activation") {
        output_activation = std::string(value);
    } else if (key == "grid.step_deg") {
        grid_step_deg = text::parse_double(value, key);
    } else if (key == "grid.pad_deg") {
        grid_pad_deg = text::parse_double(value, key);
    } else if (key == "offsets_db") {
        offsets_db = parse_number_list(value, key);
    } else if (key == "seed") {
        seed = text::parse_u64(value, key);
    } else if (key == "out_dir") {
        out_dir = std::string(value);
    } else if (key == "workers") {
        workers = parse_count(value, key);
    } else {
        throw DomainError("unknown config key '" + key + "'");
    }
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    auto put = [&](const char *k, const std::string &v) { os << k << " = " << v << '\n'; };
    auto num = [](double v) { return text::format_number(v); };
    put("low.tx", std::to_string(low.tx_count));
    put("low.rx", std::to_string(low.rx_count));
    put("low.spacing", num(low.spacing_wavelengths));
    put("high.tx", std::to_string(high.tx_count));
    put("high.rx", std::to_string(high.rx_count));
    put("high.spacing", num(high.spacing_wavelengths));
    std::string r;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        r += (i ? "," : "") + range_label(ranges[i]);
    }
    put("ranges", r);
    put("targets", std::to_string(targets));
    put("min_sep_deg", num(min_sep_deg));
    put("snr_train", join_numbers(snr_train_db));
    put("snr_test", join_numbers(snr_test_db));
    put("samples_per_set", std::to_string(samples_per_set));
    put("mixed_large", std::to_string(mixed_large));
    put("mixed_small", std::to_string(mixed_small));
    put("test_samples", std::to_string(test_samples));
    put("snapshots", std::to_string(snapshots));
    put("pulses_per_scene", std::to_string(pulses_per_scene));
    put("train.epochs", std::to_string(epochs));
    put("train.batch_size", std::to_string(batch_size));
    put("train.lr", num(adam.lr));
    put("train.beta1", num(adam.beta1));
    put("train.beta2", num(adam.beta2));
    put("train.epsilon", num(adam.epsilon));
    put("train.val_fraction", num(val_fraction));
    put("train.output_activation", output_activation);
    put("grid.step_deg", num(grid_step_deg));
    put("grid.pad_deg", num(grid_pad_deg));
    put("offsets_db", join_numbers(offsets_db));
    put("seed", std::to_string(seed));
    put("out_dir", out_dir.string());
    put("workers", std::to_string(workers));
    return os.str();
}

ExperimentConfig ExperimentConfig::from_text(const std::string &content) {
    ExperimentConfig cfg;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view l = line;
        if (const auto hash = l.find('#'); hash != std::string_view::npos) {
            l = l.substr(0, hash);
        }
        l = text::trim(l);
        if (l.empty()) {
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw DomainError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        cfg.set(std::string(text::trim(l.substr(0, eq))), std::string(text::trim(l.substr(eq + 1))));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

std::string range_label(const AngleRange &r) {
    return text::format_number(r.lo_deg) + ":" + text::format_number(r.hi_deg);
}

std::string single_set_id(double snr_db) { return "snr" + text::format_number(snr_db); }

} // namespace mimo_doa
