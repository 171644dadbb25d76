#pragma once

#include "faultkey/logic.hpp"
#include "faultkey/netlist.hpp"
#include "faultkey/simulate.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace faultkey {

/// Test for a stuck-at fault on one key line.
struct Pattern
{
  std::size_t key_index = 0;
  Polarity polarity = Polarity::Sa1;
  Vector3 pi;                             ///< data-input values; X where the test does not care
  std::vector<std::size_t> detecting_pos; ///< outputs carrying D or D' (never empty)
  InjectionMap constraints;               ///< constants on the other key lines during generation

  bool operator==( const Pattern& ) const = default;
};

/// Every other key line pinned to the stuck value of `fault`.
InjectionMap standard_constraints( std::size_t key_count, const FaultSpec& fault );

enum class AtpgStatus : std::uint8_t { Detected, Untestable, Aborted };

std::string_view to_string( AtpgStatus status );

struct AtpgOptions
{
  std::uint64_t backtrack_limit = 1'000'000;
};

struct AtpgResult
{
  AtpgStatus status = AtpgStatus::Untestable;
  std::optional<Pattern> pattern; ///< set iff status is Detected
  std::uint64_t backtracks = 0;
};

/// Constrained D-algorithm for a stuck-at fault on a key line.
///
/// Works on the composite good/faulty circuit. The first phase drives the
/// fault effect through the D-frontier gate nearest an output and then
/// justifies unjustified gates; it gets half the backtrack budget. The second
/// phase decides data inputs only, backtracing from a D-frontier side input.
/// Each phase enumerates every way the goal can hold, so exhausting either one
/// proves the fault untestable. Data inputs left unassigned stay X.
///
/// `constraints` must pin every key line other than the faulted one. Throws
/// Error when it does not, and ActivationConflict when it pins the faulted
/// line itself to its stuck value.
AtpgResult d_algorithm( const Netlist& netlist, const FaultSpec& fault, const InjectionMap& constraints,
                        const AtpgOptions& options = {} );

/// How a key bit fared in `generate_pattern_set`.
enum class KeyTestStatus : std::uint8_t {
  Primary,    ///< pattern with the requested polarity
  Fallback,   ///< requested polarity untestable, opposite polarity worked
  Unresolved, ///< neither polarity produced a pattern
};

struct PatternSet
{
  std::vector<Pattern> patterns;          ///< at most one per key index, ascending
  std::vector<std::size_t> unresolved;    ///< key indices without a pattern
  std::vector<KeyTestStatus> status;      ///< per key index
  std::vector<std::size_t> aborted;       ///< key indices where some search hit the backtrack limit

  const Pattern* find( std::size_t key_index ) const;
};

struct PatternSetOptions
{
  AtpgOptions atpg;
  bool fallback = true; ///< retry untestable bits with the opposite polarity
  unsigned threads = 1;
};

/// One constrained test per key line: the fault on k_i with every other key
/// line pinned to the stuck value; bits untestable that way are retried with
/// the opposite polarity before being reported unresolved.
PatternSet generate_pattern_set( const Netlist& locked, Polarity polarity, const PatternSetOptions& options = {} );

/// True iff for every completion of the X inputs, the circuit with the
/// pattern's key line at 0 and at 1 (other key lines per `p.constraints`)
/// gives complementary values at every output in `p.detecting_pos`.
/// Completions are enumerated exhaustively when ternary simulation cannot
/// decide and at most `exhaustive_limit` inputs are X; beyond that the answer
/// is false.
bool verify_pattern( const Netlist& locked, const Pattern& p, std::size_t exhaustive_limit = 24 );

/// Pattern file text: a header `|PI| |PO| |K| <name>` and one
/// `P <key> <sa1|sa0> <bits> <po,po,...>` line per pattern.
std::string write_pattern_file( const Netlist& locked, const PatternSet& set );

/// Parses pattern-file text written for `locked`. Patterns get standard
/// constraints. Throws ParseError on any schema violation.
PatternSet read_pattern_file( std::string_view text, const Netlist& locked );

} // namespace faultkey
