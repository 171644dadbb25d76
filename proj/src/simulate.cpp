#include "faultkey/simulate.hpp"

#include "faultkey/random.hpp"

#include <algorithm>
#include <bit>
#include <charconv>

namespace faultkey {

namespace {

void check_dimension( std::size_t got, std::size_t want, const char* what )
{
  if ( got != want )
  {
    throw DimensionError( std::string( what ) + " has " + std::to_string( got ) + " values, circuit expects " +
                          std::to_string( want ) );
  }
}

Vector3 outputs_of( const Netlist& netlist, const Vector3& nets )
{
  Vector3 out;
  out.reserve( netlist.outputs().size() );
  for ( auto po : netlist.outputs() )
  {
    out.push_back( nets[po] );
  }
  return out;
}

} // namespace

std::uint64_t eval_gate_word( GateKind kind, std::span<const NetId> inputs, std::span<const std::uint64_t> values )
{
  std::uint64_t acc = values[inputs[0]];
  switch ( kind )
  {
  case GateKind::Buf: return acc;
  case GateKind::Not: return ~acc;
  case GateKind::And:
  case GateKind::Nand:
    for ( std::size_t i = 1; i < inputs.size(); ++i )
    {
      acc &= values[inputs[i]];
    }
    return kind == GateKind::Nand ? ~acc : acc;
  case GateKind::Or:
  case GateKind::Nor:
    for ( std::size_t i = 1; i < inputs.size(); ++i )
    {
      acc |= values[inputs[i]];
    }
    return kind == GateKind::Nor ? ~acc : acc;
  case GateKind::Xor:
  case GateKind::Xnor:
    for ( std::size_t i = 1; i < inputs.size(); ++i )
    {
      acc ^= values[inputs[i]];
    }
    return kind == GateKind::Xnor ? ~acc : acc;
  }
  return acc;
}

std::string_view to_string( Polarity p )
{
  return p == Polarity::Sa1 ? "sa1" : "sa0";
}

std::optional<Polarity> polarity_from_string( std::string_view text )
{
  if ( text == "sa1" )
  {
    return Polarity::Sa1;
  }
  if ( text == "sa0" )
  {
    return Polarity::Sa0;
  }
  return std::nullopt;
}

InjectionMap InjectionMap::all( std::size_t key_count, std::uint8_t value )
{
  InjectionMap m;
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    m.force( i, value );
  }
  return m;
}

InjectionMap InjectionMap::all_except( std::size_t key_count, std::size_t skip, std::uint8_t value )
{
  auto m = all( key_count, value );
  m.release( skip );
  return m;
}

InjectionMap InjectionMap::parse( std::string_view text )
{
  InjectionMap m;
  if ( text == "-" )
  {
    return m;
  }
  std::size_t pos = 0;
  while ( pos <= text.size() )
  {
    auto comma = text.find( ',', pos );
    auto item = text.substr( pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos );
    auto colon = item.find( ':' );
    std::size_t index = 0;
    if ( colon == std::string_view::npos || colon + 2 != item.size() ||
         ( item[colon + 1] != '0' && item[colon + 1] != '1' ) )
    {
      throw ParseError( "malformed injection entry '" + std::string( item ) + "'", 0, pos + 1 );
    }
    auto [ptr, ec] = std::from_chars( item.data(), item.data() + colon, index );
    if ( ec != std::errc() || ptr != item.data() + colon )
    {
      throw ParseError( "malformed injection index '" + std::string( item ) + "'", 0, pos + 1 );
    }
    if ( m.contains( index ) )
    {
      throw ParseError( "key index " + std::to_string( index ) + " injected twice", 0, pos + 1 );
    }
    m.force( index, item[colon + 1] == '1' );
    if ( comma == std::string_view::npos )
    {
      break;
    }
    pos = comma + 1;
  }
  return m;
}

std::string InjectionMap::to_string() const
{
  if ( forced_.empty() )
  {
    return "-";
  }
  std::string out;
  for ( const auto& [index, value] : forced_ )
  {
    if ( !out.empty() )
    {
      out.push_back( ',' );
    }
    out += std::to_string( index ) + ":" + static_cast<char>( '0' + value );
  }
  return out;
}

std::optional<std::uint8_t> InjectionMap::at( std::size_t key_index ) const
{
  auto it = forced_.find( key_index );
  if ( it == forced_.end() )
  {
    return std::nullopt;
  }
  return it->second;
}

void InjectionMap::check( std::size_t key_count ) const
{
  if ( !forced_.empty() && forced_.rbegin()->first >= key_count )
  {
    throw DimensionError( "injection on key index " + std::to_string( forced_.rbegin()->first ) + " but circuit has " +
                          std::to_string( key_count ) + " key inputs" );
  }
}

Vector3 simulate3_nets( const Netlist& netlist, std::span<const Logic3> pi, std::span<const Logic3> key )
{
  check_dimension( pi.size(), netlist.inputs().size(), "input vector" );
  check_dimension( key.size(), netlist.key_inputs().size(), "key vector" );
  Vector3 values( netlist.net_count(), Logic3::X );
  for ( std::size_t i = 0; i < pi.size(); ++i )
  {
    values[netlist.inputs()[i]] = pi[i];
  }
  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    values[netlist.key_inputs()[i]] = key[i];
  }
  std::vector<Logic3> scratch;
  for ( const auto& gate : netlist.gates() )
  {
    scratch.clear();
    for ( auto in : gate.inputs )
    {
      scratch.push_back( values[in] );
    }
    values[gate.output] = eval_gate3( gate.kind, scratch );
  }
  return values;
}

Vector3 simulate3( const Netlist& netlist, std::span<const Logic3> pi, std::span<const Logic3> key )
{
  return outputs_of( netlist, simulate3_nets( netlist, pi, key ) );
}

Vector3 simulate_injected( const Netlist& netlist, std::span<const Logic3> pi, const KeyVector& hidden_key,
                           const InjectionMap& injection )
{
  check_dimension( hidden_key.size(), netlist.key_inputs().size(), "hidden key" );
  injection.check( hidden_key.size() );
  Vector3 key( hidden_key.size() );
  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    key[i] = to_logic3( injection.at( i ).value_or( hidden_key[i] ) );
  }
  return simulate3( netlist, pi, key );
}

Vector5 simulate5( const Netlist& netlist, std::span<const Logic3> pi, const FaultSpec& fault,
                   const InjectionMap& constraints )
{
  const auto key_count = netlist.key_inputs().size();
  if ( fault.key_index >= key_count )
  {
    throw DimensionError( "fault on key index " + std::to_string( fault.key_index ) + " but circuit has " +
                          std::to_string( key_count ) + " key inputs" );
  }
  constraints.check( key_count );
  const auto stuck = stuck_value( fault.polarity );
  if ( auto pinned = constraints.at( fault.key_index ); pinned && *pinned == stuck )
  {
    throw ActivationConflict( "key line " + std::to_string( fault.key_index ) + " is constrained to its stuck value" );
  }
  Vector3 good_key( key_count, Logic3::X );
  for ( const auto& [index, value] : constraints.entries() )
  {
    good_key[index] = to_logic3( value );
  }
  good_key[fault.key_index] = to_logic3( !stuck );
  auto faulty_key = good_key;
  faulty_key[fault.key_index] = to_logic3( stuck );

  auto good = simulate3( netlist, pi, good_key );
  auto faulty = simulate3( netlist, pi, faulty_key );
  Vector5 out( good.size() );
  for ( std::size_t i = 0; i < out.size(); ++i )
  {
    out[i] = compose( good[i], faulty[i] );
  }
  return out;
}

WordSimulator::WordSimulator( const Netlist& netlist ) : netlist_( &netlist ), values_( netlist.net_count(), 0 ) {}

void WordSimulator::run( std::span<const std::uint64_t> pi, std::span<const std::uint64_t> key )
{
  check_dimension( pi.size(), netlist_->inputs().size(), "input words" );
  check_dimension( key.size(), netlist_->key_inputs().size(), "key words" );
  for ( std::size_t i = 0; i < pi.size(); ++i )
  {
    values_[netlist_->inputs()[i]] = pi[i];
  }
  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    values_[netlist_->key_inputs()[i]] = key[i];
  }
  for ( const auto& gate : netlist_->gates() )
  {
    values_[gate.output] = eval_gate_word( gate.kind, gate.inputs, values_ );
  }
}

std::vector<std::uint64_t> splat_bits( std::span<const std::uint8_t> bits )
{
  std::vector<std::uint64_t> out;
  out.reserve( bits.size() );
  for ( auto b : bits )
  {
    out.push_back( b ? ~std::uint64_t{ 0 } : 0 );
  }
  return out;
}

std::optional<BitVector> find_distinguishing_input( const Netlist& a, std::span<const std::uint8_t> key_a,
                                                    const Netlist& b, std::span<const std::uint8_t> key_b,
                                                    const EquivalenceOptions& options )
{
  const auto n_pi = a.inputs().size();
  check_dimension( b.inputs().size(), n_pi, "second circuit inputs" );
  check_dimension( b.outputs().size(), a.outputs().size(), "second circuit outputs" );
  WordSimulator sim_a( a ), sim_b( b );
  const auto words_a = splat_bits( key_a );
  const auto words_b = splat_bits( key_b );
  std::vector<std::uint64_t> pi( n_pi );

  const bool exhaustive = n_pi <= options.exhaustive_limit;
  const std::uint64_t total = exhaustive ? ( std::uint64_t{ 1 } << n_pi ) : options.samples;
  const std::uint64_t batches = ( total + 63 ) / 64;
  Rng rng( options.seed );

  for ( std::uint64_t batch = 0; batch < batches; ++batch )
  {
    const std::uint64_t base = batch * 64;
    const std::uint64_t lanes = std::min<std::uint64_t>( 64, total - base );
    const std::uint64_t mask = lanes == 64 ? ~std::uint64_t{ 0 } : ( std::uint64_t{ 1 } << lanes ) - 1;
    for ( std::size_t j = 0; j < n_pi; ++j )
    {
      if ( exhaustive )
      {
        std::uint64_t w = 0;
        for ( std::uint64_t l = 0; l < lanes; ++l )
        {
          w |= ( ( ( base + l ) >> j ) & 1 ) << l;
        }
        pi[j] = w;
      }
      else
      {
        pi[j] = rng.next();
      }
    }
    sim_a.run( pi, words_a );
    sim_b.run( pi, words_b );
    std::uint64_t diff = 0;
    for ( std::size_t o = 0; o < a.outputs().size(); ++o )
    {
      diff |= sim_a.output( o ) ^ sim_b.output( o );
    }
    diff &= mask;
    if ( diff != 0 )
    {
      const int lane = std::countr_zero( diff );
      BitVector witness( n_pi );
      for ( std::size_t j = 0; j < n_pi; ++j )
      {
        witness[j] = ( pi[j] >> lane ) & 1;
      }
      return witness;
    }
  }
  return std::nullopt;
}

} // namespace faultkey
