#pragma once

#include "faultkey/error.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace faultkey {

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

std::string_view to_string( GateKind kind );

/// Case-insensitive lookup of a `.bench` gate keyword.
std::optional<GateKind> gate_kind_from_string( std::string_view text );

using NetId = std::uint32_t;

struct Gate
{
  GateKind kind;
  std::vector<NetId> inputs;
  NetId output;

  bool operator==( const Gate& ) const = default;
};

/// Identifies key inputs by name: `<prefix><decimal index>`.
struct KeyNaming
{
  std::string prefix = "keyinput";

  std::optional<std::size_t> index_of( std::string_view net_name ) const;
  std::string name_for( std::size_t index ) const { return prefix + std::to_string( index ); }
};

/// Unchecked, name-based circuit description. The parser produces one and the
/// locking transforms edit one; `Netlist::build` turns it into the checked IR.
struct NetlistDraft
{
  struct GateLine
  {
    std::string output;
    GateKind kind;
    std::vector<std::string> inputs;
    std::size_t line = 0; ///< source line, 0 when synthesized
  };

  std::string name;
  std::vector<std::string> inputs; ///< every INPUT, data and key, in declaration order
  std::vector<std::string> outputs;
  std::vector<GateLine> gates;
};

enum class DiagnosticKind {
  Syntax,
  UnknownGateKind,
  SequentialElement,
  DuplicateDriver,
  UndeclaredNet,
  Cycle,
  BadArity,
  DuplicateKeyIndex,
};

std::string_view to_string( DiagnosticKind kind );

struct Diagnostic
{
  DiagnosticKind kind;
  std::string net;
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
};

/// Parse or build failure carrying every diagnostic found.
class NetlistError : public ParseError
{
public:
  explicit NetlistError( std::vector<Diagnostic> diagnostics );

  DiagnosticKind kind() const { return diagnostics_.front().kind; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
  std::vector<Diagnostic> diagnostics_;
};

/// One diagnostic per violated invariant; empty iff `Netlist::build` accepts the draft.
std::vector<Diagnostic> validate( const NetlistDraft& draft, const KeyNaming& naming = {} );

/// Immutable combinational gate-level circuit.
///
/// Net ids are canonical: data inputs first (declaration order), then key
/// inputs (by key index), then gate outputs in topological gate order. Gates
/// are stored topologically, so evaluating `gates()` front to back is a valid
/// simulation order.
class Netlist
{
public:
  static constexpr std::uint32_t no_gate = UINT32_MAX;

  /// Throws NetlistError if `validate` reports anything.
  static Netlist build( const NetlistDraft& draft, const KeyNaming& naming = {} );

  NetlistDraft to_draft() const;

  const std::string& name() const { return name_; }
  const KeyNaming& key_naming() const { return naming_; }

  std::size_t net_count() const { return net_names_.size(); }
  const std::string& net_name( NetId net ) const { return net_names_[net]; }
  std::optional<NetId> find_net( std::string_view name ) const;

  std::span<const NetId> inputs() const { return inputs_; }
  std::span<const NetId> key_inputs() const { return keys_; }
  std::span<const NetId> outputs() const { return outputs_; }
  std::span<const Gate> gates() const { return gates_; }

  /// Index into `gates()` of the gate driving `net`, or `no_gate` for inputs.
  std::uint32_t driver( NetId net ) const { return driver_[net]; }
  /// Indices of the gates reading `net`.
  std::span<const std::uint32_t> fanout( NetId net ) const;

  bool is_data_input( NetId net ) const { return net < inputs_.size(); }
  bool is_key_input( NetId net ) const { return net >= inputs_.size() && net < inputs_.size() + keys_.size(); }
  /// Position of `net` in `key_inputs()`.
  std::optional<std::size_t> key_index( NetId net ) const;

  /// Structural equality: names, orders and connectivity; the netlist name is ignored.
  bool operator==( const Netlist& other ) const;

private:
  std::string name_;
  KeyNaming naming_;
  std::vector<std::string> net_names_;
  std::unordered_map<std::string, NetId> by_name_;
  std::vector<NetId> inputs_;
  std::vector<NetId> keys_;
  std::vector<NetId> outputs_;
  std::vector<Gate> gates_;
  std::vector<std::uint32_t> driver_;
  std::vector<std::uint32_t> fanout_offsets_;
  std::vector<std::uint32_t> fanout_gates_;
};

/// Parses `.bench` text. Throws NetlistError with line/column diagnostics.
Netlist parse_bench( std::string_view text, std::string name = "top", const KeyNaming& naming = {} );

/// Syntax-only parse; the draft is not validated.
NetlistDraft parse_bench_draft( std::string_view text, std::string name = "top" );

/// Canonical `.bench` text: data inputs, key inputs, outputs, gates in topological order.
std::string emit_bench( const Netlist& netlist );

Netlist read_bench_file( const std::string& path, const KeyNaming& naming = {} );

} // namespace faultkey
