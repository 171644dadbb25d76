#include "faultkey/locking.hpp"
#include "faultkey/oracle.hpp"

#include "../support/reference.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace faultkey;
using reference::bench;

namespace {

const std::string kBench = FAULTKEY_BENCH_DIR;

const char* kXorLock = "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)";

} // namespace

TEST_CASE( "sessions on a single xor key gate" )
{
  SimulatedOracle oracle( bench( kXorLock, "xor" ), KeyVector::parse( "1" ) );
  CHECK( oracle.shape() == OracleShape{ "xor", 1, 1, 1 } );
  const std::uint8_t a0[] = { 0 }, a1[] = { 1 };

  auto plain = oracle.open_session( {} );
  CHECK( plain.query( a0 ) == BitVector{ 1 } );
  CHECK( plain.query( a1 ) == BitVector{ 0 } );

  auto cf = oracle.open_session( InjectionMap::parse( "0:1" ) );
  CHECK( cf.query( a0 ) == BitVector{ 1 } );
  auto ca = oracle.open_session( InjectionMap::all_except( 1, 0, 1 ) );
  CHECK( ca.injection().empty() );
  CHECK( ca.query( a0 ) == BitVector{ 1 } );

  CHECK( plain.query_count() == 2 );
  CHECK( cf.query_count() == 1 );
  CHECK( oracle.total_queries() == 4 );
  CHECK( oracle.session_count() == 3 );
  CHECK( plain.id() != cf.id() );
}

TEST_CASE( "oracle dimension checks" )
{
  CHECK_THROWS_AS( SimulatedOracle( bench( kXorLock ), KeyVector::parse( "10" ) ), DimensionError );
  SimulatedOracle oracle( bench( kXorLock ), KeyVector::parse( "0" ) );
  CHECK_THROWS_AS( oracle.open_session( InjectionMap::parse( "1:0" ) ), DimensionError );
  auto s = oracle.open_session( {} );
  const std::uint8_t two[] = { 0, 1 }, bad[] = { 2 };
  CHECK_THROWS_AS( s.query( two ), DimensionError );
  CHECK_THROWS_AS( s.query( bad ), Error );
  CHECK( oracle.total_queries() == 0 );
}

TEST_CASE( "all-injected session on c432 ignores the hidden key" )
{
  auto c432 = read_bench_file( kBench + "/c432.bench" );
  auto locked = lock_rll( c432, random_key( 32, 2 ), 11 );
  SimulatedOracle oracle( locked, random_key( 32, 2 ) );
  SimulatedOracle other( locked, random_key( 32, 3 ) );
  InjectionMap all_one;
  for ( std::size_t k = 0; k < 32; ++k )
  {
    all_one.force( k, 1 );
  }
  auto s = oracle.open_session( all_one );
  auto t = other.open_session( all_one );
  const Vector3 ones( 32, Logic3::One );
  Rng rng( 6 );
  for ( int q = 0; q < 100; ++q )
  {
    BitVector pi( locked.inputs().size() );
    for ( auto& b : pi )
    {
      b = rng.bit();
    }
    auto r = s.query( pi );
    CHECK( to_vector3( r ) == simulate3( locked, to_vector3( pi ), ones ) );
    CHECK( t.query( pi ) == r );
  }
}

TEST_CASE( "transcript text round trip and replay" )
{
  SimulatedOracle oracle( reference::interdependent_three_key_circuit(), KeyVector::parse( "011" ) );
  Rng rng( 1 );
  for ( auto inj : { "-", "0:1,1:1,2:1", "1:1,2:1", "0:0" } )
  {
    auto s = oracle.open_session( InjectionMap::parse( inj ) );
    for ( int q = 0; q < 5; ++q )
    {
      BitVector pi( 6 );
      for ( auto& b : pi )
      {
        b = rng.bit();
      }
      s.query( pi );
    }
  }
  auto recorded = oracle.transcript();
  CHECK( recorded.records.size() == 20 );
  CHECK( recorded.shape == OracleShape{ "three_key", 6, 2, 3 } );
  auto text = recorded.to_text();
  CHECK( text.rfind( "6 2 3 three_key\n", 0 ) == 0 );
  CHECK( Transcript::parse( text ) == recorded );

  ReplayOracle replay( recorded );
  CHECK( replay.shape() == recorded.shape );
  for ( const auto& rec : recorded.records )
  {
    auto s = replay.open_session( rec.injection );
    CHECK( s.query( rec.pi ) == rec.po );
  }
  CHECK( replay.total_queries() == 20 );

  auto s = replay.open_session( InjectionMap::parse( "2:0" ) );
  const std::uint8_t zeros[] = { 0, 0, 0, 0, 0, 0 };
  CHECK_THROWS_AS( s.query( zeros ), ReplayMiss );
}

TEST_CASE( "malformed transcripts" )
{
  const char* bad[] = {
    "",
    "1 1 1\n",
    "1 1 1 t\n0 - 0\n",
    "1 1 1 t\n0 - 00 1\n",
    "1 1 1 t\n0 3:1 0 1\n",
    "1 1 1 t\nx - 0 1\n",
    "1 1 1 t\n0 - 0 X\n",
  };
  for ( auto text : bad )
  {
    CAPTURE( text );
    CHECK_THROWS_AS( Transcript::parse( text ), ParseError );
  }
}

TEST_CASE( "oracle from files" )
{
  auto dir = std::filesystem::temp_directory_path() / "faultkey_oracle_test";
  std::filesystem::create_directories( dir );
  std::ofstream( dir / "x.bench" ) << kXorLock << "\n";
  std::ofstream( dir / "x.key" ) << "1\n";
  auto oracle = SimulatedOracle::from_files( ( dir / "x.bench" ).string(), ( dir / "x.key" ).string() );
  auto s = oracle->open_session( {} );
  const std::uint8_t a0[] = { 0 };
  CHECK( s.query( a0 ) == BitVector{ 1 } );
  std::ofstream( dir / "bad.key" ) << "12\n";
  CHECK_THROWS_AS( SimulatedOracle::from_files( ( dir / "x.bench" ).string(), ( dir / "bad.key" ).string() ),
                   ParseError );
  std::filesystem::remove_all( dir );
}

TEST_CASE( "fill_x" )
{
  CHECK( fill_x( parse_vector3( "1X0X" ) ) == BitVector{ 1, 0, 0, 0 } );
  CHECK( fill_x( parse_vector3( "1X0X" ), 1 ) == BitVector{ 1, 1, 0, 1 } );
}
