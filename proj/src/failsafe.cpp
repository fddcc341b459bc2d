#include "mecl/failsafe.hpp"

namespace mecl {

RechargeableDecision onboard_rechargeable_decide(const FailsafeMemory& memory,
                                                 const std::optional<CommEnvelope>& received,
                                                 const SchedulerConfig& cfg) {
  if (received && received->received_by(memory.deadline)) return {RechargeableAction::ExecuteNew, 0.0, 0.0};
  if (memory.return_index <= 1) return {RechargeableAction::ExecutePrevious, 0.0, 0.0};
  const double delay = static_cast<double>(memory.return_index) * cfg.gap();
  return {RechargeableAction::HoverThenShifted, delay, delay};
}

ChargerDecision onboard_charger_decide(double now, double deadline, const std::optional<CommEnvelope>& mobcontinue,
                                       const SchedulerConfig& cfg) {
  if (mobcontinue && mobcontinue->received_by(deadline)) return {ChargerAction::ContinueNominal, 0.0};
  return {ChargerAction::HaltAt, now + cfg.rendezvous_horizon};
}

}  // namespace mecl
