#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "mecl/failsafe.hpp"
#include "mecl/vehicle.hpp"

namespace mecl {

inline constexpr int kCentralNode = 0;
inline constexpr int kChargerNode = -1;

struct Message {
  CommEnvelope envelope;
  int sender = 0;
  int receiver = 0;
  std::uint64_t sequence = 0;
  int iteration = 0;
  bool commit = false;   // decision payload
  int return_index = 0;  // decision payload
};

/// Latency- and loss-injecting bus. Delivery order is (deliver_time, sender, sequence).
class MessageBus {
 public:
  MessageBus(std::uint64_t seed, double latency_min, double latency_max, double drop_probability);

  /// Queues a message unless it is dropped; the returned envelope records either outcome.
  CommEnvelope send(int sender, int receiver, PayloadKind kind, int iteration, double now, bool commit = false,
                    int return_index = 0);

  /// Pops every queued message with deliver_time <= t, in delivery order.
  std::vector<Message> deliver_until(double t);

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t sent() const { return sequence_; }

 private:
  struct Later {
    bool operator()(const Message& a, const Message& b) const;
  };

  Rng rng_;
  double latency_min_;
  double latency_max_;
  double drop_probability_;
  std::uint64_t sequence_ = 0;
  std::priority_queue<Message, std::vector<Message>, Later> queue_;
};

}  // namespace mecl
