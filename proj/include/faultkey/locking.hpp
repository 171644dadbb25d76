#pragma once

#include "faultkey/logic.hpp"
#include "faultkey/netlist.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace faultkey {

enum class LockScheme : std::uint8_t { Rll, Sll, SfllLite, Combined };

std::string_view to_string( LockScheme scheme );
std::optional<LockScheme> lock_scheme_from_string( std::string_view text );

struct LockSpec
{
  LockScheme scheme = LockScheme::Rll;
  std::size_t key_size = 0;
  std::uint64_t seed = 0;
  /// SFLL-lite only: values over the data inputs; compared inputs must be 0/1.
  std::optional<Vector3> protected_cube;
  /// Combined only: leading key bits spent on SFLL-lite, the rest on RLL.
  std::size_t sfll_bits = 0;
};

/// Random logic locking: one XOR (key bit 0) or XNOR (key bit 1) key gate on
/// each of |key| distinct, randomly drawn gate outputs, or data inputs once
/// gate outputs run out. Key inputs are appended after any existing ones,
/// which are taken to be 0.
///
/// A net is skipped when inverting it, alone or together with key gates
/// already placed, leaves the outputs unchanged on 256 seeded random vectors
/// (every combination up to eight bits, every pair beyond), so no wrong key
/// acts as the right one. Throws LockError when too few nets pass.
Netlist lock_rll( const Netlist& netlist, const KeyVector& key, std::uint64_t seed );

/// Interference locking: each new key gate is placed in the fanout cone of the
/// previous one, or on a net whose fanout cone meets it, so consecutive key
/// gates interfere. Sites are filtered as in `lock_rll`.
Netlist lock_sll( const Netlist& netlist, const KeyVector& key, std::uint64_t seed );

/// Single-pattern stripped-functionality lock. A perturb unit flips one output
/// on the protected cube; a restore unit comparing |key| data inputs against
/// the key inputs flips it back. With no cube, the compared inputs are drawn
/// from `seed` and the cube is the key itself.
Netlist lock_sfll_lite( const Netlist& netlist, const KeyVector& key, const std::optional<Vector3>& protected_cube,
                        std::uint64_t seed );

/// The input cube `lock_sfll_lite` protects for these arguments: the compared
/// data inputs at their key values, X elsewhere.
Vector3 sfll_protected_cube( const Netlist& netlist, const KeyVector& key,
                             const std::optional<Vector3>& protected_cube, std::uint64_t seed );

/// SFLL-lite on the first `spec.sfll_bits` key bits, then RLL on the rest. RLL
/// sites must not cancel against wrong SFLL key bits either.
Netlist lock_combined( const Netlist& netlist, const LockSpec& spec, const KeyVector& key );

/// Dispatches on `spec.scheme`; `key.size()` must equal `spec.key_size`.
Netlist lock( const Netlist& netlist, const LockSpec& spec, const KeyVector& key );

KeyVector random_key( std::size_t size, std::uint64_t seed );

/// Fraction of consecutive key-bit pairs (i-1, i) in [first, first + count)
/// whose key-gate fanout cones intersect. 1.0 when there are fewer than two bits.
double interference_ratio( const Netlist& locked, std::size_t first, std::size_t count );

} // namespace faultkey
