#pragma once

#include "faultkey/atpg.hpp"
#include "faultkey/logic.hpp"
#include "faultkey/netlist.hpp"
#include "faultkey/oracle.hpp"
#include "faultkey/simulate.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faultkey {

/// Returns `injected` when the two responses are equal, its complement otherwise.
/// Throws DimensionError on a length mismatch.
std::uint8_t decide_bit( std::span<const std::uint8_t> resp_f, std::span<const std::uint8_t> resp_a,
                         std::uint8_t injected );

enum class BitStatus : std::uint8_t { Recovered, Unresolved };

/// Which step of the attack settled a bit.
enum class ResolutionMethod : std::uint8_t {
  Primary,    ///< first-polarity pattern, every other key line injected
  Fallback,   ///< opposite-polarity pattern, every other key line injected
  Refined,    ///< pattern generated with already recovered bits as constraints
  BruteForce, ///< exhaustive search over the residual bits (opt-in)
  None,       ///< unresolved
};

std::string_view to_string( BitStatus status );
std::string_view to_string( ResolutionMethod method );

struct BitResolution
{
  std::size_t key_index = 0;
  BitStatus status = BitStatus::Unresolved;
  std::optional<std::uint8_t> value;     ///< set iff Recovered
  std::optional<Polarity> polarity_used; ///< injected polarity of the deciding pattern
  std::optional<Pattern> pattern;        ///< deciding pattern
  ResolutionMethod method = ResolutionMethod::None;
  std::uint64_t queries_used = 0;
};

struct AttackReport
{
  std::string netlist_name;
  std::size_t key_count = 0;
  std::vector<BitResolution> resolutions; ///< one per key index, ascending
  std::uint64_t total_queries = 0;
  std::uint64_t total_patterns = 0;
  std::optional<double> wall_time; ///< seconds

  bool complete() const;
  /// The recovered key when every bit is Recovered.
  std::optional<KeyVector> recovered_key() const;
  /// Patterns applied with the given injected polarity, counting every attack step.
  std::size_t patterns_with_polarity( Polarity polarity ) const;
};

struct AttackOptions
{
  Polarity polarity = Polarity::Sa1;
  PatternSetOptions atpg;
  /// Patterns to use for the first step instead of generating them.
  std::optional<PatternSet> patterns;
  std::size_t max_refine_rounds = 8;
  bool brute_force_residual = false;
  std::size_t brute_force_limit = 20;
  EquivalenceOptions check;
};

/// Recovers the key of `locked` through `oracle` using only fault-injected
/// sessions. Bits with a pattern for the requested polarity are decided from a
/// shared all-injected session and a per-bit session exempting that bit; the
/// rest go through the opposite polarity and then rounds of ATPG constrained
/// by the bits recovered so far. Throws DimensionError when the oracle shape
/// does not match the netlist.
AttackReport run_attack( const Netlist& locked, Oracle& oracle, const AttackOptions& options = {} );

/// Compares `locked` under `recovered` with an uninjected session of
/// `reference`, exhaustively when the circuit has at most
/// `options.exhaustive_limit` data inputs, on `options.samples` random vectors otherwise.
bool verify_recovered_key( const Netlist& locked, const KeyVector& recovered, Oracle& reference,
                           const EquivalenceOptions& options = {} );

/// JSON text of the report with schema version 1; `wall_time` omitted when
/// `include_timing` is false so reports from identical runs are byte-identical.
std::string report_to_json( const AttackReport& report, bool include_timing = true );

} // namespace faultkey
