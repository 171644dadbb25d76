#include "faultkey/oracle.hpp"

#include <charconv>
#include <sstream>

namespace faultkey {

namespace {

std::size_t parse_count( std::string_view text, std::size_t line )
{
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars( text.data(), text.data() + text.size(), value );
  if ( ec != std::errc() || ptr != text.data() + text.size() )
  {
    throw ParseError( "transcript: bad number '" + std::string( text ) + "'", line );
  }
  return value;
}

void check_bits( std::span<const std::uint8_t> bits, std::size_t want, const char* what )
{
  if ( bits.size() != want )
  {
    throw DimensionError( std::string( what ) + " has " + std::to_string( bits.size() ) + " bits, oracle expects " +
                          std::to_string( want ) );
  }
  for ( auto b : bits )
  {
    if ( b > 1 )
    {
      throw Error( std::string( what ) + " must be fully assigned with 0/1 values" );
    }
  }
}

} // namespace

OracleShape shape_of( const Netlist& netlist )
{
  return { netlist.name(), netlist.inputs().size(), netlist.outputs().size(), netlist.key_inputs().size() };
}

std::string Transcript::to_text() const
{
  std::string out = std::to_string( shape.inputs ) + " " + std::to_string( shape.outputs ) + " " +
                    std::to_string( shape.keys ) + " " + shape.name + "\n";
  for ( const auto& r : records )
  {
    out += std::to_string( r.session_id ) + " " + r.injection.to_string() + " " + to_string( r.pi ) + " " +
           to_string( r.po ) + "\n";
  }
  return out;
}

Transcript Transcript::parse( std::string_view text )
{
  Transcript t;
  bool header = false;
  std::size_t line_no = 0;
  std::istringstream in{ std::string( text ) };
  std::string line;
  while ( std::getline( in, line ) )
  {
    ++line_no;
    std::istringstream fields( line );
    std::vector<std::string> f;
    for ( std::string tok; fields >> tok; )
    {
      f.push_back( tok );
    }
    if ( f.empty() || f.front().starts_with( "#" ) )
    {
      continue;
    }
    if ( f.size() != 4 )
    {
      throw ParseError( header ? "transcript: expected '<session> <injection> <pi> <po>'"
                               : "transcript: header must be '|PI| |PO| |K| <name>'",
                        line_no );
    }
    if ( !header )
    {
      t.shape = { f[3], parse_count( f[0], line_no ), parse_count( f[1], line_no ), parse_count( f[2], line_no ) };
      header = true;
      continue;
    }
    TranscriptRecord r;
    r.session_id = parse_count( f[0], line_no );
    try
    {
      r.injection = InjectionMap::parse( f[1] );
      r.pi = parse_bits( f[2] );
      r.po = parse_bits( f[3] );
    }
    catch ( const ParseError& e )
    {
      throw ParseError( std::string( "transcript: " ) + e.what(), line_no );
    }
    if ( r.pi.size() != t.shape.inputs || r.po.size() != t.shape.outputs ||
         ( !r.injection.empty() && r.injection.entries().rbegin()->first >= t.shape.keys ) )
    {
      throw ParseError( "transcript: record does not match header dimensions", line_no );
    }
    t.records.push_back( std::move( r ) );
  }
  if ( !header )
  {
    throw ParseError( "transcript: missing header" );
  }
  return t;
}

BitVector fill_x( std::span<const Logic3> values, std::uint8_t fill )
{
  BitVector out;
  out.reserve( values.size() );
  for ( auto v : values )
  {
    out.push_back( v == Logic3::X ? fill : static_cast<std::uint8_t>( v == Logic3::One ) );
  }
  return out;
}

BitVector OracleSession::query( std::span<const std::uint8_t> pi )
{
  auto po = oracle_->answer( *this, pi );
  ++queries_;
  return po;
}

OracleSession Oracle::open_session( const InjectionMap& injection )
{
  injection.check( shape_.keys );
  std::lock_guard lock( mutex_ );
  return OracleSession( *this, next_session_++, injection );
}

std::uint64_t Oracle::total_queries() const
{
  std::lock_guard lock( mutex_ );
  return queries_;
}

std::uint64_t Oracle::session_count() const
{
  std::lock_guard lock( mutex_ );
  return next_session_;
}

Transcript Oracle::transcript() const
{
  std::lock_guard lock( mutex_ );
  return transcript_;
}

BitVector Oracle::answer( OracleSession& session, std::span<const std::uint8_t> pi )
{
  check_bits( pi, shape_.inputs, "input vector" );
  auto po = respond( session.injection(), pi );
  std::lock_guard lock( mutex_ );
  ++queries_;
  transcript_.records.push_back( { session.id(), session.injection(), BitVector( pi.begin(), pi.end() ), po } );
  return po;
}

SimulatedOracle::SimulatedOracle( Netlist locked, KeyVector hidden_key )
    : Oracle( shape_of( locked ) ), netlist_( std::move( locked ) ), hidden_key_( std::move( hidden_key ) )
{
  if ( hidden_key_.size() != netlist_.key_inputs().size() )
  {
    throw DimensionError( "hidden key has " + std::to_string( hidden_key_.size() ) + " bits, circuit has " +
                          std::to_string( netlist_.key_inputs().size() ) + " key inputs" );
  }
}

std::unique_ptr<SimulatedOracle> SimulatedOracle::from_files( const std::string& bench_path,
                                                              const std::string& key_path, const KeyNaming& naming )
{
  return std::make_unique<SimulatedOracle>( read_bench_file( bench_path, naming ), read_key_file( key_path ) );
}

BitVector SimulatedOracle::respond( const InjectionMap& injection, std::span<const std::uint8_t> pi )
{
  auto out = simulate_injected( netlist_, to_vector3( pi ), hidden_key_, injection );
  return fill_x( out );
}

ReplayOracle::ReplayOracle( const Transcript& recorded ) : Oracle( recorded.shape )
{
  for ( const auto& r : recorded.records )
  {
    answers_.emplace( std::pair{ r.injection.to_string(), to_string( r.pi ) }, r.po );
  }
}

BitVector ReplayOracle::respond( const InjectionMap& injection, std::span<const std::uint8_t> pi )
{
  auto it = answers_.find( { injection.to_string(), to_string( pi ) } );
  if ( it == answers_.end() )
  {
    throw ReplayMiss( "no recorded answer for injection " + injection.to_string() + " and input " + to_string( pi ) );
  }
  return it->second;
}

} // namespace faultkey
