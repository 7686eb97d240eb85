#pragma once

#include <cstdint>

namespace qrep {

// xoshiro256++ with splitmix64 seeding: seedable, portable across platforms
// (pure integer arithmetic), and equipped with a 2^128 jump so parallel
// workers can carve provably disjoint substreams out of one seed.
class Xoshiro256 {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) {
        // splitmix64 expansion keeps nearby seeds uncorrelated
        std::uint64_t x = seed;
        for (auto& word : state_) {
            std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // advances 2^128 steps; 2^64 jumps' worth of non-overlapping substreams
    void jump() {
        static constexpr std::uint64_t table[] = {
            0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL,
            0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
        std::uint64_t acc[4] = {0, 0, 0, 0};
        for (const std::uint64_t word : table)
            for (int bit = 0; bit < 64; ++bit) {
                if (word & (1ULL << bit))
                    for (int i = 0; i < 4; ++i) acc[i] ^= state_[i];
                (*this)();
            }
        for (int i = 0; i < 4; ++i) state_[i] = acc[i];
    }

    // uniform on [0, 1) with 53 random bits
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace qrep
