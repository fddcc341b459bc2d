#include "mecl/message_bus.hpp"

#include <stdexcept>
#include <tuple>

namespace mecl {

MessageBus::MessageBus(std::uint64_t seed, double latency_min, double latency_max, double drop_probability)
    : rng_(seed), latency_min_(latency_min), latency_max_(latency_max), drop_probability_(drop_probability) {
  if (!(latency_min >= 0.0) || !(latency_max >= latency_min)) throw std::invalid_argument("bad latency range");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) throw std::invalid_argument("bad drop probability");
}

bool MessageBus::Later::operator()(const Message& a, const Message& b) const {
  return std::tie(a.envelope.deliver_time, a.sender, a.sequence) >
         std::tie(b.envelope.deliver_time, b.sender, b.sequence);
}

CommEnvelope MessageBus::send(int sender, int receiver, PayloadKind kind, int iteration, double now, bool commit,
                              int return_index) {
  std::uniform_real_distribution<double> latency(latency_min_, latency_max_);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Message m;
  m.sender = sender;
  m.receiver = receiver;
  m.iteration = iteration;
  m.commit = commit;
  m.return_index = return_index;
  m.sequence = sequence_++;
  m.envelope.kind = kind;
  m.envelope.send_time = now;
  m.envelope.deliver_time = now + (latency_max_ > latency_min_ ? latency(rng_) : latency_min_);
  m.envelope.dropped = drop_probability_ > 0.0 && unit(rng_) < drop_probability_;
  if (!m.envelope.dropped) queue_.push(m);
  return m.envelope;
}

std::vector<Message> MessageBus::deliver_until(double t) {
  std::vector<Message> out;
  while (!queue_.empty() && queue_.top().envelope.deliver_time <= t) {
    out.push_back(queue_.top());
    queue_.pop();
  }
  return out;
}

}  // namespace mecl
