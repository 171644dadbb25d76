#include "faultkey/logic.hpp"

#include <fstream>
#include <sstream>

namespace faultkey {

Logic3 eval_gate3( GateKind kind, std::span<const Logic3> inputs )
{
  switch ( kind )
  {
  case GateKind::Buf:
    return inputs[0];
  case GateKind::Not:
    return !inputs[0];
  case GateKind::And:
  case GateKind::Nand:
  case GateKind::Or:
  case GateKind::Nor: {
    const bool and_like = kind == GateKind::And || kind == GateKind::Nand;
    const bool inverted = kind == GateKind::Nand || kind == GateKind::Nor;
    const Logic3 controlling = and_like ? Logic3::Zero : Logic3::One;
    bool unknown = false;
    for ( auto v : inputs )
    {
      if ( v == controlling )
      {
        return inverted ? !controlling : controlling;
      }
      unknown |= v == Logic3::X;
    }
    if ( unknown )
    {
      return Logic3::X;
    }
    return inverted ? controlling : !controlling;
  }
  case GateKind::Xor:
  case GateKind::Xnor: {
    bool parity = kind == GateKind::Xnor;
    for ( auto v : inputs )
    {
      if ( v == Logic3::X )
      {
        return Logic3::X;
      }
      parity ^= v == Logic3::One;
    }
    return to_logic3( parity );
  }
  }
  return Logic3::X;
}

Logic5 eval_gate5( GateKind kind, std::span<const Logic5> inputs )
{
  std::vector<Logic3> good( inputs.size() ), faulty( inputs.size() );
  for ( std::size_t i = 0; i < inputs.size(); ++i )
  {
    good[i] = good_part( inputs[i] );
    faulty[i] = faulty_part( inputs[i] );
  }
  return compose( eval_gate3( kind, good ), eval_gate3( kind, faulty ) );
}

char to_char( Logic3 v )
{
  return v == Logic3::Zero ? '0' : ( v == Logic3::One ? '1' : 'X' );
}

std::string_view to_string( Logic5 v )
{
  switch ( v )
  {
  case Logic5::Zero: return "0";
  case Logic5::One: return "1";
  case Logic5::D: return "D";
  case Logic5::Dbar: return "D'";
  default: return "X";
  }
}

Vector3 parse_vector3( std::string_view text )
{
  Vector3 out;
  out.reserve( text.size() );
  for ( std::size_t i = 0; i < text.size(); ++i )
  {
    switch ( text[i] )
    {
    case '0': out.push_back( Logic3::Zero ); break;
    case '1': out.push_back( Logic3::One ); break;
    case 'x':
    case 'X': out.push_back( Logic3::X ); break;
    default:
      throw ParseError( "invalid logic value '" + std::string( 1, text[i] ) + "'", 0, i + 1 );
    }
  }
  return out;
}

std::string to_string( std::span<const Logic3> values )
{
  std::string out;
  out.reserve( values.size() );
  for ( auto v : values )
  {
    out.push_back( to_char( v ) );
  }
  return out;
}

BitVector parse_bits( std::string_view text )
{
  BitVector out;
  out.reserve( text.size() );
  for ( std::size_t i = 0; i < text.size(); ++i )
  {
    if ( text[i] != '0' && text[i] != '1' )
    {
      throw ParseError( "invalid bit '" + std::string( 1, text[i] ) + "'", 0, i + 1 );
    }
    out.push_back( text[i] == '1' );
  }
  return out;
}

std::string to_string( std::span<const std::uint8_t> bits )
{
  std::string out;
  out.reserve( bits.size() );
  for ( auto b : bits )
  {
    out.push_back( b ? '1' : '0' );
  }
  return out;
}

Vector3 to_vector3( std::span<const std::uint8_t> bits )
{
  Vector3 out;
  out.reserve( bits.size() );
  for ( auto b : bits )
  {
    out.push_back( to_logic3( b ) );
  }
  return out;
}

KeyVector::KeyVector( BitVector bits ) : bits_( std::move( bits ) )
{
  for ( auto& b : bits_ )
  {
    b = b ? 1 : 0;
  }
}

KeyVector KeyVector::parse( std::string_view text )
{
  return KeyVector( parse_bits( text ) );
}

std::string KeyVector::to_string() const
{
  return faultkey::to_string( std::span<const std::uint8_t>( bits_ ) );
}

KeyVector read_key_file( const std::string& path )
{
  std::ifstream in( path );
  if ( !in )
  {
    throw ParseError( "cannot open key file '" + path + "'" );
  }
  std::string line;
  std::getline( in, line );
  while ( !line.empty() && ( line.back() == '\r' || line.back() == ' ' ) )
  {
    line.pop_back();
  }
  try
  {
    return KeyVector::parse( line );
  }
  catch ( const ParseError& e )
  {
    throw ParseError( path + ": " + e.what(), 1, e.column() );
  }
}

void write_key_file( const std::string& path, const KeyVector& key )
{
  std::ofstream out( path );
  if ( !out )
  {
    throw Error( "cannot write key file '" + path + "'" );
  }
  out << key.to_string() << "\n";
}

} // namespace faultkey
