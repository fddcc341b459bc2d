#pragma once

#include <cstdint>
#include <string>

namespace mecl {

struct VerifyReport {
  std::string text;
  bool ok = true;
};

/// Seeded oracle checks: clarity closed form against RK4, its inverse, the
/// team-size bound against a sequential-return search, and the worst-case
/// charger point against a sampled ellipse boundary.
VerifyReport run_verification(std::uint64_t seed, int samples = 25);

}  // namespace mecl
