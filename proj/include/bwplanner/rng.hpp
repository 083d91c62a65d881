#pragma once

#include <cstdint>
#include <limits>

namespace bwplanner {

// SplitMix64 stream. Counter-based: the state advances by a fixed odd
// increment, so seeding is cheap and distinct (seed, stream, replication)
// triples give statistically independent streams.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on [0, 1); 53-bit resolution
    double uniform01() {
        return static_cast<double>(operator()() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Named stream ids used by the simulator; one stream per random source.
enum class StreamId : std::uint64_t {
    interarrival = 1,
    class_assignment = 2,
    unit_length = 3,
    service = 4,
};

inline RngStream derive_stream(std::uint64_t seed, StreamId id,
                               std::uint64_t replication = 0) {
    // one splitmix application per component decorrelates nearby seeds
    RngStream a(seed);
    std::uint64_t s = a();
    RngStream b(s ^ (static_cast<std::uint64_t>(id) * 0xd1342543de82ef95ULL));
    std::uint64_t t = b();
    RngStream c(t ^ (replication * 0x2545f4914f6cdd1dULL));
    return RngStream(c());
}

}  // namespace bwplanner
