#pragma once

#include <optional>

#include "mecl/scheduler.hpp"

namespace mecl {

enum class PayloadKind { CommitDecision, MobContinue, CandidateUpload };

/// A message in flight between a robot and the central node.
struct CommEnvelope {
  PayloadKind kind = PayloadKind::CommitDecision;
  double send_time = 0.0;
  double deliver_time = 0.0;
  bool dropped = false;

  bool received_by(double deadline) const { return !dropped && deliver_time <= deadline; }
};

/// What a rechargeable robot remembers from its last successful decision.
struct FailsafeMemory {
  int return_index = 1;     // ret_{j-1}
  double deadline = 0.0;    // t_{j-1,N}
  bool has_committed = false;
};

enum class RechargeableAction { ExecuteNew, ExecutePrevious, HoverThenShifted };

struct RechargeableDecision {
  RechargeableAction action = RechargeableAction::ExecuteNew;
  double hover_duration = 0.0;  // ret * T_delta for the shifted branch
  double shift = 0.0;           // time shift applied to the previous committed trajectory
};

/// Onboard fallback of a rechargeable robot. `received` is the decision
/// envelope if one was sent; it counts only if delivered by memory.deadline.
RechargeableDecision onboard_rechargeable_decide(const FailsafeMemory& memory,
                                                 const std::optional<CommEnvelope>& received,
                                                 const SchedulerConfig& cfg);

enum class ChargerAction { ContinueNominal, HaltAt };

struct ChargerDecision {
  ChargerAction action = ChargerAction::ContinueNominal;
  double halt_time = 0.0;
};

/// Onboard fallback of the mobile charger for the iteration starting at `now`.
ChargerDecision onboard_charger_decide(double now, double deadline, const std::optional<CommEnvelope>& mobcontinue,
                                       const SchedulerConfig& cfg);

}  // namespace mecl
