#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace zsmftg {

// Counter-based random streams (Philox 4x32-10). A Stream is an immutable
// 128-bit key; substreams are derived by hashing labels, so any (seed,
// purpose, index, ...) path names the same sequence no matter which thread
// draws it, in which order the tasks run, or how the work is partitioned.

namespace detail {
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);
std::uint64_t mix64(std::uint64_t x);
}  // namespace detail

class Sequence;

class Stream {
public:
    static Stream from_seed(std::uint64_t seed);

    // Derived stream for a labelled purpose/index pair.
    Stream sub(std::uint64_t a, std::uint64_t b = 0) const;

    Sequence seq() const;

    std::uint64_t k0() const { return k0_; }
    std::uint64_t k1() const { return k1_; }

private:
    Stream(std::uint64_t k0, std::uint64_t k1) : k0_(k0), k1_(k1) {}
    std::uint64_t k0_;
    std::uint64_t k1_;
};

// Sequential drawer over one stream. Cheap to construct; not thread-safe,
// each task owns its own.
class Sequence {
public:
    explicit Sequence(const Stream& s);

    std::uint64_t next_u64();

    // Uniform on (0,1] from 53 mantissa bits (never exactly 0).
    double u01();

    // Standard normal via Box-Muller; pairs are cached.
    double gauss();

    // iid standard normal vector.
    Eigen::VectorXd gauss_vec(int n);

    // iid uniform on [-h, h].
    Eigen::VectorXd uniform_sym_vec(int n, double half_width);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> stream_id_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int block_pos_ = 4;  // 32-bit words consumed from block_
    double cached_gauss_ = 0.0;
    bool has_cached_gauss_ = false;
};

}  // namespace zsmftg
