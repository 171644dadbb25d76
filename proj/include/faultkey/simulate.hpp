#pragma once

#include "faultkey/logic.hpp"
#include "faultkey/netlist.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faultkey {

enum class Polarity : std::uint8_t { Sa0, Sa1 };

constexpr std::uint8_t stuck_value( Polarity p ) { return p == Polarity::Sa1 ? 1 : 0; }
constexpr Polarity opposite( Polarity p ) { return p == Polarity::Sa1 ? Polarity::Sa0 : Polarity::Sa1; }
std::string_view to_string( Polarity p );
std::optional<Polarity> polarity_from_string( std::string_view text );

/// Forced values on key lines, keyed by key index. Models fault injection on
/// key registers in the oracle and key-line constraints in ATPG.
class InjectionMap
{
public:
  InjectionMap() = default;

  /// Every key line forced to `value`.
  static InjectionMap all( std::size_t key_count, std::uint8_t value );
  /// Every key line except `skip` forced to `value`.
  static InjectionMap all_except( std::size_t key_count, std::size_t skip, std::uint8_t value );

  /// "idx:val,idx:val" or "-" for the empty map.
  static InjectionMap parse( std::string_view text );
  std::string to_string() const;

  void force( std::size_t key_index, std::uint8_t value ) { forced_[key_index] = value ? 1 : 0; }
  void release( std::size_t key_index ) { forced_.erase( key_index ); }

  std::optional<std::uint8_t> at( std::size_t key_index ) const;
  bool contains( std::size_t key_index ) const { return forced_.contains( key_index ); }
  bool empty() const { return forced_.empty(); }
  std::size_t size() const { return forced_.size(); }
  const std::map<std::size_t, std::uint8_t>& entries() const { return forced_; }

  /// Throws DimensionError if an index is not below `key_count`.
  void check( std::size_t key_count ) const;

  bool operator==( const InjectionMap& ) const = default;

private:
  std::map<std::size_t, std::uint8_t> forced_;
};

/// Single stuck-at fault on a key line.
struct FaultSpec
{
  std::size_t key_index;
  Polarity polarity;

  bool operator==( const FaultSpec& ) const = default;
};

/// Ternary simulation; returns the primary output values.
Vector3 simulate3( const Netlist& netlist, std::span<const Logic3> pi, std::span<const Logic3> key );

/// Ternary simulation returning the value of every net.
Vector3 simulate3_nets( const Netlist& netlist, std::span<const Logic3> pi, std::span<const Logic3> key );

/// Key line i carries `injection.at(i)` when present, `hidden_key[i]` otherwise.
Vector3 simulate_injected( const Netlist& netlist, std::span<const Logic3> pi, const KeyVector& hidden_key,
                           const InjectionMap& injection );

/// Composite good/faulty simulation with a stuck-at fault on a key line.
///
/// The faulted line carries its activating good value (the complement of the
/// stuck value); constrained key lines carry their constants; other key lines
/// are X. Throws ActivationConflict if the constraints pin the faulted line to
/// its stuck value.
Vector5 simulate5( const Netlist& netlist, std::span<const Logic3> pi, const FaultSpec& fault,
                   const InjectionMap& constraints );

/// Bitwise gate evaluation over 64 lanes; `values` is indexed by net.
std::uint64_t eval_gate_word( GateKind kind, std::span<const NetId> inputs, std::span<const std::uint64_t> values );

/// 64 two-valued simulations at once, one bit lane per vector.
class WordSimulator
{
public:
  explicit WordSimulator( const Netlist& netlist );

  /// `pi` has one word per data input, `key` one word per key input.
  void run( std::span<const std::uint64_t> pi, std::span<const std::uint64_t> key );

  std::uint64_t value( NetId net ) const { return values_[net]; }
  std::uint64_t output( std::size_t po ) const { return values_[netlist_->outputs()[po]]; }

private:
  const Netlist* netlist_;
  std::vector<std::uint64_t> values_;
};

/// Broadcasts each key bit over all 64 lanes.
std::vector<std::uint64_t> splat_bits( std::span<const std::uint8_t> bits );

struct EquivalenceOptions
{
  std::size_t samples = 10000;       ///< random vectors when not exhaustive
  std::size_t exhaustive_limit = 16; ///< exhaustive when |PI| is at most this
  std::uint64_t seed = 1;
};

/// Searches for a data-input vector on which `a` under `key_a` and `b` under
/// `key_b` produce different outputs. Both circuits must have the same data
/// input and output counts, matched by position.
std::optional<BitVector> find_distinguishing_input( const Netlist& a, std::span<const std::uint8_t> key_a,
                                                    const Netlist& b, std::span<const std::uint8_t> key_b,
                                                    const EquivalenceOptions& options = {} );

} // namespace faultkey
