#pragma once

#include "faultkey/netlist.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faultkey {

/// Ternary value: 0, 1 or unknown.
enum class Logic3 : std::uint8_t { Zero = 0, One = 1, X = 2 };

/// D-calculus value. D is good 1 / faulty 0, Dbar is good 0 / faulty 1.
enum class Logic5 : std::uint8_t { Zero, One, D, Dbar, X };

using Vector3 = std::vector<Logic3>;
using Vector5 = std::vector<Logic5>;
/// Fully specified binary vector, one byte (0 or 1) per position.
using BitVector = std::vector<std::uint8_t>;

constexpr Logic3 to_logic3( bool b ) { return b ? Logic3::One : Logic3::Zero; }
constexpr bool is_known( Logic3 v ) { return v != Logic3::X; }

constexpr Logic3 operator!( Logic3 v )
{
  return v == Logic3::X ? Logic3::X : ( v == Logic3::One ? Logic3::Zero : Logic3::One );
}

/// X-pessimistic evaluation; `inputs` must match the gate's arity.
Logic3 eval_gate3( GateKind kind, std::span<const Logic3> inputs );

constexpr Logic3 good_part( Logic5 v )
{
  switch ( v )
  {
  case Logic5::Zero: case Logic5::Dbar: return Logic3::Zero;
  case Logic5::One: case Logic5::D: return Logic3::One;
  default: return Logic3::X;
  }
}

constexpr Logic3 faulty_part( Logic5 v )
{
  switch ( v )
  {
  case Logic5::Zero: case Logic5::D: return Logic3::Zero;
  case Logic5::One: case Logic5::Dbar: return Logic3::One;
  default: return Logic3::X;
  }
}

/// Combines good/faulty components; any unknown component gives X.
constexpr Logic5 compose( Logic3 good, Logic3 faulty )
{
  if ( good == Logic3::X || faulty == Logic3::X )
  {
    return Logic5::X;
  }
  if ( good == faulty )
  {
    return good == Logic3::One ? Logic5::One : Logic5::Zero;
  }
  return good == Logic3::One ? Logic5::D : Logic5::Dbar;
}

constexpr bool is_fault_effect( Logic5 v ) { return v == Logic5::D || v == Logic5::Dbar; }

/// Gate table over D-calculus values, defined by evaluating both components.
Logic5 eval_gate5( GateKind kind, std::span<const Logic5> inputs );

char to_char( Logic3 v );
std::string_view to_string( Logic5 v );

/// "01X" text, X case-insensitive. Throws ParseError on other characters.
Vector3 parse_vector3( std::string_view text );
std::string to_string( std::span<const Logic3> values );

/// "01" text. Throws ParseError on other characters.
BitVector parse_bits( std::string_view text );
std::string to_string( std::span<const std::uint8_t> bits );

Vector3 to_vector3( std::span<const std::uint8_t> bits );

/// Secret key, index 0 first.
class KeyVector
{
public:
  KeyVector() = default;
  explicit KeyVector( BitVector bits );

  /// "0110..." with index 0 leftmost.
  static KeyVector parse( std::string_view text );

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[]( std::size_t i ) const { return bits_[i]; }
  const BitVector& bits() const { return bits_; }
  std::string to_string() const;

  bool operator==( const KeyVector& ) const = default;

private:
  BitVector bits_;
};

KeyVector read_key_file( const std::string& path );
void write_key_file( const std::string& path, const KeyVector& key );

} // namespace faultkey
