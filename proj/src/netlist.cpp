#include "faultkey/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>
#include <queue>
#include <sstream>

namespace faultkey {

namespace {

constexpr std::array<std::string_view, 8> kGateNames = { "AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF" };

std::string join_message( const std::vector<Diagnostic>& diagnostics )
{
  std::ostringstream out;
  for ( std::size_t i = 0; i < diagnostics.size(); ++i )
  {
    const auto& d = diagnostics[i];
    if ( i > 0 )
    {
      out << "; ";
    }
    if ( d.line > 0 )
    {
      out << "line " << d.line;
      if ( d.column > 0 )
      {
        out << ":" << d.column;
      }
      out << ": ";
    }
    out << to_string( d.kind ) << ": " << d.message;
  }
  return out.str();
}

bool arity_ok( GateKind kind, std::size_t arity )
{
  switch ( kind )
  {
  case GateKind::Not:
  case GateKind::Buf:
    return arity == 1;
  case GateKind::Xor:
  case GateKind::Xnor:
    return arity == 2;
  default:
    return arity >= 2;
  }
}

/// Kahn's algorithm over draft gates, always releasing the lowest draft index
/// first so that an already sorted draft keeps its order. Gates with
/// undeclared inputs are treated as ready once their declared inputs are.
/// Returns the order; gates on or behind a cycle are missing from it.
std::vector<std::size_t> topological_order( const NetlistDraft& draft )
{
  std::unordered_map<std::string_view, std::size_t> driver_gate;
  for ( std::size_t g = 0; g < draft.gates.size(); ++g )
  {
    driver_gate.emplace( draft.gates[g].output, g );
  }
  std::vector<std::size_t> pending( draft.gates.size(), 0 );
  std::vector<std::vector<std::size_t>> readers( draft.gates.size() );
  for ( std::size_t g = 0; g < draft.gates.size(); ++g )
  {
    for ( const auto& in : draft.gates[g].inputs )
    {
      auto it = driver_gate.find( in );
      if ( it != driver_gate.end() )
      {
        ++pending[g];
        readers[it->second].push_back( g );
      }
    }
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for ( std::size_t g = 0; g < draft.gates.size(); ++g )
  {
    if ( pending[g] == 0 )
    {
      ready.push( g );
    }
  }
  std::vector<std::size_t> order;
  order.reserve( draft.gates.size() );
  while ( !ready.empty() )
  {
    auto g = ready.top();
    ready.pop();
    order.push_back( g );
    for ( auto r : readers[g] )
    {
      if ( --pending[r] == 0 )
      {
        ready.push( r );
      }
    }
  }
  return order;
}

} // namespace

std::string_view to_string( GateKind kind )
{
  return kGateNames[static_cast<std::size_t>( kind )];
}

std::optional<GateKind> gate_kind_from_string( std::string_view text )
{
  std::string upper( text );
  std::transform( upper.begin(), upper.end(), upper.begin(), []( unsigned char c ) { return std::toupper( c ); } );
  for ( std::size_t i = 0; i < kGateNames.size(); ++i )
  {
    if ( upper == kGateNames[i] )
    {
      return static_cast<GateKind>( i );
    }
  }
  return std::nullopt;
}

std::string_view to_string( DiagnosticKind kind )
{
  switch ( kind )
  {
  case DiagnosticKind::Syntax: return "syntax error";
  case DiagnosticKind::UnknownGateKind: return "unknown gate kind";
  case DiagnosticKind::SequentialElement: return "sequential element";
  case DiagnosticKind::DuplicateDriver: return "duplicate driver";
  case DiagnosticKind::UndeclaredNet: return "undeclared net";
  case DiagnosticKind::Cycle: return "combinational cycle";
  case DiagnosticKind::BadArity: return "bad arity";
  case DiagnosticKind::DuplicateKeyIndex: return "duplicate key index";
  }
  return "unknown";
}

std::optional<std::size_t> KeyNaming::index_of( std::string_view net_name ) const
{
  if ( net_name.size() <= prefix.size() || net_name.substr( 0, prefix.size() ) != prefix )
  {
    return std::nullopt;
  }
  auto digits = net_name.substr( prefix.size() );
  if ( digits.size() > 9 || !std::all_of( digits.begin(), digits.end(), []( unsigned char c ) { return std::isdigit( c ); } ) )
  {
    return std::nullopt;
  }
  return static_cast<std::size_t>( std::stoul( std::string( digits ) ) );
}

NetlistError::NetlistError( std::vector<Diagnostic> diagnostics )
    : ParseError( join_message( diagnostics ), diagnostics.front().line, diagnostics.front().column ),
      diagnostics_( std::move( diagnostics ) )
{
}

std::vector<Diagnostic> validate( const NetlistDraft& draft, const KeyNaming& naming )
{
  std::vector<Diagnostic> out;
  std::unordered_map<std::string_view, std::size_t> driver_line;

  auto declare = [&]( const std::string& net, std::size_t line ) {
    auto [it, fresh] = driver_line.emplace( net, line );
    if ( !fresh )
    {
      out.push_back( { DiagnosticKind::DuplicateDriver, net, line, 0, "net '" + net + "' has more than one driver" } );
    }
  };
  for ( const auto& in : draft.inputs )
  {
    declare( in, 0 );
  }
  for ( const auto& gate : draft.gates )
  {
    declare( gate.output, gate.line );
  }

  std::map<std::size_t, std::string> key_slots;
  for ( const auto& in : draft.inputs )
  {
    if ( auto idx = naming.index_of( in ) )
    {
      auto [it, fresh] = key_slots.emplace( *idx, in );
      if ( !fresh && it->second != in )
      {
        out.push_back( { DiagnosticKind::DuplicateKeyIndex, in, 0, 0,
                         "key inputs '" + it->second + "' and '" + in + "' share index " + std::to_string( *idx ) } );
      }
    }
  }

  for ( const auto& gate : draft.gates )
  {
    if ( !arity_ok( gate.kind, gate.inputs.size() ) )
    {
      out.push_back( { DiagnosticKind::BadArity, gate.output, gate.line, 0,
                       std::string( to_string( gate.kind ) ) + " gate driving '" + gate.output + "' has " +
                           std::to_string( gate.inputs.size() ) + " inputs" } );
    }
    for ( const auto& in : gate.inputs )
    {
      if ( !driver_line.contains( in ) )
      {
        out.push_back( { DiagnosticKind::UndeclaredNet, in, gate.line, 0,
                         "net '" + in + "' read by '" + gate.output + "' is never driven" } );
      }
    }
  }
  for ( const auto& po : draft.outputs )
  {
    if ( !driver_line.contains( po ) )
    {
      out.push_back( { DiagnosticKind::UndeclaredNet, po, 0, 0, "output '" + po + "' is never driven" } );
    }
  }

  auto order = topological_order( draft );
  if ( order.size() != draft.gates.size() )
  {
    std::vector<bool> placed( draft.gates.size(), false );
    for ( auto g : order )
    {
      placed[g] = true;
    }
    auto first = std::find( placed.begin(), placed.end(), false ) - placed.begin();
    const auto& gate = draft.gates[first];
    out.push_back( { DiagnosticKind::Cycle, gate.output, gate.line, 0,
                     "net '" + gate.output + "' lies on or behind a combinational cycle" } );
  }
  return out;
}

Netlist Netlist::build( const NetlistDraft& draft, const KeyNaming& naming )
{
  if ( auto diagnostics = validate( draft, naming ); !diagnostics.empty() )
  {
    throw NetlistError( std::move( diagnostics ) );
  }

  Netlist n;
  n.name_ = draft.name;
  n.naming_ = naming;

  auto add_net = [&]( const std::string& name ) {
    auto id = static_cast<NetId>( n.net_names_.size() );
    n.net_names_.push_back( name );
    n.by_name_.emplace( name, id );
    return id;
  };

  std::vector<std::pair<std::size_t, const std::string*>> keys;
  for ( const auto& in : draft.inputs )
  {
    if ( auto idx = naming.index_of( in ) )
    {
      keys.emplace_back( *idx, &in );
    }
    else
    {
      n.inputs_.push_back( add_net( in ) );
    }
  }
  std::sort( keys.begin(), keys.end() );
  for ( const auto& [idx, name] : keys )
  {
    n.keys_.push_back( add_net( *name ) );
  }

  auto order = topological_order( draft );
  for ( auto g : order )
  {
    add_net( draft.gates[g].output );
  }
  n.driver_.assign( n.net_names_.size(), no_gate );
  n.gates_.reserve( order.size() );
  for ( auto g : order )
  {
    const auto& line = draft.gates[g];
    Gate gate{ line.kind, {}, n.by_name_.at( line.output ) };
    gate.inputs.reserve( line.inputs.size() );
    for ( const auto& in : line.inputs )
    {
      gate.inputs.push_back( n.by_name_.at( in ) );
    }
    n.driver_[gate.output] = static_cast<std::uint32_t>( n.gates_.size() );
    n.gates_.push_back( std::move( gate ) );
  }
  for ( const auto& po : draft.outputs )
  {
    n.outputs_.push_back( n.by_name_.at( po ) );
  }

  std::vector<std::uint32_t> counts( n.net_count() + 1, 0 );
  for ( const auto& gate : n.gates_ )
  {
    for ( auto in : gate.inputs )
    {
      ++counts[in + 1];
    }
  }
  for ( std::size_t i = 1; i < counts.size(); ++i )
  {
    counts[i] += counts[i - 1];
  }
  n.fanout_offsets_ = counts;
  n.fanout_gates_.resize( counts.back() );
  for ( std::uint32_t g = 0; g < n.gates_.size(); ++g )
  {
    for ( auto in : n.gates_[g].inputs )
    {
      n.fanout_gates_[counts[in]++] = g;
    }
  }
  return n;
}

NetlistDraft Netlist::to_draft() const
{
  NetlistDraft d;
  d.name = name_;
  for ( auto in : inputs_ )
  {
    d.inputs.push_back( net_names_[in] );
  }
  for ( auto k : keys_ )
  {
    d.inputs.push_back( net_names_[k] );
  }
  for ( auto po : outputs_ )
  {
    d.outputs.push_back( net_names_[po] );
  }
  for ( const auto& gate : gates_ )
  {
    NetlistDraft::GateLine line{ net_names_[gate.output], gate.kind, {}, 0 };
    for ( auto in : gate.inputs )
    {
      line.inputs.push_back( net_names_[in] );
    }
    d.gates.push_back( std::move( line ) );
  }
  return d;
}

std::optional<NetId> Netlist::find_net( std::string_view name ) const
{
  auto it = by_name_.find( std::string( name ) );
  if ( it == by_name_.end() )
  {
    return std::nullopt;
  }
  return it->second;
}

std::span<const std::uint32_t> Netlist::fanout( NetId net ) const
{
  return std::span<const std::uint32_t>( fanout_gates_ ).subspan( fanout_offsets_[net],
                                                                   fanout_offsets_[net + 1] - fanout_offsets_[net] );
}

std::optional<std::size_t> Netlist::key_index( NetId net ) const
{
  if ( !is_key_input( net ) )
  {
    return std::nullopt;
  }
  return net - inputs_.size();
}

bool Netlist::operator==( const Netlist& other ) const
{
  return net_names_ == other.net_names_ && inputs_ == other.inputs_ && keys_ == other.keys_ &&
         outputs_ == other.outputs_ && gates_ == other.gates_;
}

} // namespace faultkey
