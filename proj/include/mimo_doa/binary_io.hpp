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

#include "mimo_doa/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace mimo_doa::binary {

// Little-endian primitive writer/reader over std::fstream. Every multi-byte value is
// emitted byte by byte so files are identical regardless of host byte order.

class Writer {
  public:
    explicit Writer(const std::filesystem::path &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw IoError("cannot open " + path.string() + " for writing");
        }
    }

    void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.put(static_cast<char>((v >> (8 * i)) & 0xffU));
        }
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            out_.put(static_cast<char>((v >> (8 * i)) & 0xffU));
        }
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    /// Row-major dump of a real matrix.
    void matrix_row_major(const Eigen::MatrixXd &m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                f64(m(r, c));
            }
        }
    }

    void vector(const Eigen::VectorXd &v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            f64(v[i]);
        }
    }

    void close() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed for " + path_.string());
        }
        out_.close();
    }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

class Reader {
  public:
    explicit Reader(const std::filesystem::path &path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open " + path.string() + " for reading");
        }
    }

    void expect(std::string_view magic) {
        std::string buf(magic.size(), '\0');
        read_raw(buf.data(), buf.size());
        if (buf != magic) {
            throw IoError(path_.string() + ": bad magic, not a " + std::string(magic) + " file");
        }
    }

    std::uint8_t u8() {
        unsigned char c = 0;
        read_raw(reinterpret_cast<char *>(&c), 1);
        return c;
    }

    std::uint32_t u32() {
        std::array<unsigned char, 4> b{};
        read_raw(reinterpret_cast<char *>(b.data()), b.size());
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) {
            v = (v << 8) | b[static_cast<std::size_t>(i)];
        }
        return v;
    }

    std::uint64_t u64() {
        std::array<unsigned char, 8> b{};
        read_raw(reinterpret_cast<char *>(b.data()), b.size());
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = (v << 8) | b[static_cast<std::size_t>(i)];
        }
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    Eigen::MatrixXd matrix_row_major(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                m(r, c) = f64();
            }
        }
        return m;
    }

    Eigen::VectorXd vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v[i] = f64();
        }
        return v;
    }

    /// Throws unless the whole file has been consumed.
    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw IoError(path_.string() + ": trailing bytes after payload");
        }
    }

    const std::filesystem::path &path() const { return path_; }

  private:
    void read_raw(char *dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw IoError(path_.string() + ": unexpected end of file");
        }
    }

    std::filesystem::path path_;
    std::ifstream in_;
};

} // namespace mimo_doa::binary
