#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "avatar_sync/rng.hpp"

namespace avatar_sync {

struct LatencyModel {
    std::int64_t base_ms = 0;
    std::int64_t jitter_ms = 0;  // delay = base + uniform{0..jitter}
    std::uint64_t seed = 0;
};

/// Seeded per-message delay with per-connection FIFO: a message never
/// overtakes an earlier one on the same connection, as with TCP. Messages on
/// different connections may be reordered.
class LatencyInjector {
public:
    explicit LatencyInjector(LatencyModel model) : model_(model), rng_(model.seed) {}

    std::int64_t next_delay();

    /// Delivery time of a message sent at `send_ms` on `connection`.
    std::int64_t schedule(std::size_t connection, std::int64_t send_ms);

private:
    LatencyModel model_;
    SeededRng rng_;
    std::map<std::size_t, std::int64_t> last_delivery_;
};

struct Transmission {
    std::size_t connection = 0;
    std::int64_t send_ms = 0;
};

struct Delivery {
    std::size_t index = 0;  // position in the input stream
    std::size_t connection = 0;
    std::int64_t send_ms = 0;
    std::int64_t deliver_ms = 0;
};

/// Delays every transmission (delays drawn in input order) and returns the
/// deliveries in arrival order; ties break by connection, then input order.
std::vector<Delivery> inject_latency(const LatencyModel& model, std::span<const Transmission> stream);

}  // namespace avatar_sync
