#include "zsmftg/rng.hpp"

#include <cmath>

namespace zsmftg {
namespace detail {

namespace {
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mul_hilo(kPhiloxM0, ctr[0], lo0, hi0);
        mul_hilo(kPhiloxM1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

// SplitMix64 finalizer; full-avalanche 64-bit mix.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

Stream Stream::from_seed(std::uint64_t seed) {
    return Stream(detail::mix64(seed ^ 0x5A17E4C7D2B96F31ull),
                  detail::mix64(seed + 0x8C6F3A19E5D40B7Dull));
}

Stream Stream::sub(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t ha = detail::mix64(a ^ 0xD6E8FEB86659FD93ull);
    const std::uint64_t hb = detail::mix64(b + 0xA5A3564E3F8CF62Full);
    return Stream(detail::mix64(k0_ ^ ha), detail::mix64(k1_ + hb + ha));
}

Sequence Stream::seq() const { return Sequence(*this); }

Sequence::Sequence(const Stream& s)
    : key_{static_cast<std::uint32_t>(s.k0()), static_cast<std::uint32_t>(s.k0() >> 32)},
      stream_id_{static_cast<std::uint32_t>(s.k1()), static_cast<std::uint32_t>(s.k1() >> 32)} {}

void Sequence::refill() {
    block_ = detail::philox4x32({static_cast<std::uint32_t>(counter_),
                                 static_cast<std::uint32_t>(counter_ >> 32), stream_id_[0],
                                 stream_id_[1]},
                                key_);
    ++counter_;
    block_pos_ = 0;
}

std::uint64_t Sequence::next_u64() {
    if (block_pos_ > 2) refill();
    const std::uint64_t lo = block_[block_pos_];
    const std::uint64_t hi = block_[block_pos_ + 1];
    block_pos_ += 2;
    return lo | (hi << 32);
}

double Sequence::u01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Sequence::gauss() {
    if (has_cached_gauss_) {
        has_cached_gauss_ = false;
        return cached_gauss_;
    }
    const double u1 = u01();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_gauss_ = true;
    return r * std::cos(a);
}

Eigen::VectorXd Sequence::gauss_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss();
    return v;
}

Eigen::VectorXd Sequence::uniform_sym_vec(int n, double half_width) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = half_width * (2.0 * u01() - 1.0);
    return v;
}

}  // namespace zsmftg
