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

#include <doctest.h>

#include "mimo_doa/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

using namespace mimo_doa;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mimo_doa");
    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    Run r;
    r.code = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("mimo_doa_cli_" + name);
    fs::remove_all(p);
    return p;
}

const std::vector<std::string> kTiny{"--set", "low.tx=2", "--set", "low.rx=2", "--set", "high.tx=3", "--set",
                                     "high.rx=3", "--set", "targets=2", "--set", "ranges=0:25", "--set",
                                     "snr_train=-4,4", "--set", "snr_test=-4,4", "--set", "samples_per_set=240",
                                     "--set", "mixed_large=480", "--set", "mixed_small=240", "--set",
                                     "test_samples=100", "--set", "snapshots=50", "--set", "pulses_per_scene=50",
                                     "--set", "train.epochs=2", "--set", "train.batch_size=40", "--set",
                                     "train.output_activation=linear", "--set", "grid.step_deg=0.5"};

std::vector<std::string> tiny_args(const std::string &verb, const fs::path &out) {
    std::vector<std::string> a{verb, "--out", out.string()};
    a.insert(a.end(), kTiny.begin(), kTiny.end());
    return a;
}

} // namespace

TEST_CASE("demo recovers the built-in angles") {
    const Run r = run({"demo"});
    REQUIRE(r.code == kExitOk);
    const std::regex line(R"(true (-?[0-9.]+) deg, estimated (-?[0-9.]+) deg)");
    int found = 0;
    for (std::sregex_iterator it(r.out.begin(), r.out.end(), line), end; it != end; ++it) {
        CHECK(std::abs(std::stod((*it)[1]) - std::stod((*it)[2])) <= 0.1);
        ++found;
    }
    CHECK(found == 2);
}

TEST_CASE("usage errors exit 2") {
    const Run unknown = run({"frobnicate"});
    CHECK(unknown.code == kExitUsage);
    CHECK(unknown.err.find("frobnicate") != std::string::npos);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"demo", "--no-such-flag"}).code == kExitUsage);
    CHECK(run({"crb", "--set", "no.such.key=1"}).code == kExitUsage);
    CHECK(run({"crb", "--set", "targets"}).code == kExitUsage);
    CHECK(run({"crb", "--config", "/nonexistent/dir/x.cfg"}).code == kExitUsage);
    CHECK(run({"crb", "--workers", "0"}).code == kExitUsage);

    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.cfg") << "targets = 3\nwhatever = 1\n";
    const Run bad = run({"crb", "--config", (dir / "bad.cfg").string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("whatever") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("help lists every config key") {
    const Run r = run({"--help"});
    CHECK(r.code == kExitOk);
    for (const char *key : {"low.tx", "snr_train", "train.lr", "offsets_db", "workers", "pulses_per_scene"}) {
        CHECK(r.out.find(key) != std::string::npos);
    }
}

TEST_CASE("eval without models exits 1 naming the file") {
    const fs::path dir = scratch("eval");
    const Run r = run(tiny_args("eval", dir));
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("range0_snr-4.mlp") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("pipeline verbs write their outputs inside --out, reproducibly") {
    const fs::path a = scratch("pipe_a");
    const fs::path b = scratch("pipe_b");
    for (const fs::path &dir : {a, b}) {
        REQUIRE(run(tiny_args("gen-data", dir)).code == kExitOk);
        REQUIRE(run(tiny_args("train", dir)).code == kExitOk);
        REQUIRE(run(tiny_args("eval", dir)).code == kExitOk);
        REQUIRE(run(tiny_args("sweep", dir)).code == kExitOk);
        REQUIRE(run(tiny_args("grid", dir)).code == kExitOk);
        REQUIRE(run(tiny_args("crb", dir)).code == kExitOk);
        auto den = tiny_args("denoise", dir);
        den.insert(den.end(), {"--set", "offsets_db=8"});
        // offsets are part of the fingerprint, so a changed value needs a fresh directory
        const Run clash = run(den);
        CHECK(clash.code == kExitRuntime);
        CHECK(clash.err.find("different configuration") != std::string::npos);
        REQUIRE(run(tiny_args("denoise", dir)).code == kExitOk);
    }
    for (const char *f : {"evaluation.csv", "sweep_mixed_M1.csv", "sweep_matched_snr.csv", "sweep_best_of_all.csv",
                          "sweep_raw_low.csv", "sweep_raw_high.csv", "grid.csv", "cumulative.csv", "crb.csv",
                          "denoise.csv", "models/range0_M2.mlp"}) {
        REQUIRE(fs::exists(a / f));
        std::ifstream fa(a / f, std::ios::binary), fb(b / f, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(fa)), {});
        const std::string sb((std::istreambuf_iterator<char>(fb)), {});
        CHECK_MESSAGE(sa == sb, f);
    }
    const Run other_seed = run([&] {
        auto v = tiny_args("crb", a);
        v.insert(v.end(), {"--seed", "7"});
        return v;
    }());
    CHECK(other_seed.code == kExitRuntime);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("installed binary exit codes") {
    const std::string exe = MIMO_DOA_CLI_PATH;
    CHECK(std::system((exe + " demo > /dev/null").c_str()) == 0);
    const int rc = std::system((exe + " nope > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(rc));
    CHECK(WEXITSTATUS(rc) == kExitUsage);
}
