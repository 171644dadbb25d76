#include "faultkey/atpg.hpp"
#include "faultkey/locking.hpp"

#include "../support/reference.hpp"

#include <doctest.h>

using namespace faultkey;
using reference::bench;

namespace {

const std::string kBench = FAULTKEY_BENCH_DIR;

const char* kXorLock = "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)";
const char* kAndLock = "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = AND(a, keyinput0)";
const char* kTwoKey = "INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\n"
                      "t = XOR(a, keyinput0)\ny = XOR(t, keyinput1)";

const FaultSpec kSa1K0{ 0, Polarity::Sa1 };

} // namespace

TEST_CASE( "single key gate examples" )
{
  SUBCASE( "xor" )
  {
    auto r = d_algorithm( bench( kXorLock ), kSa1K0, {} );
    REQUIRE( r.status == AtpgStatus::Detected );
    CHECK( r.pattern->pi == parse_vector3( "0" ) );
    CHECK( r.pattern->detecting_pos == std::vector<std::size_t>{ 0 } );
  }
  SUBCASE( "and needs the side input at 1" )
  {
    auto r = d_algorithm( bench( kAndLock ), kSa1K0, {} );
    REQUIRE( r.status == AtpgStatus::Detected );
    CHECK( r.pattern->pi == parse_vector3( "1" ) );
  }
  SUBCASE( "second key pinned to 1" )
  {
    auto n = bench( kTwoKey );
    auto r = d_algorithm( n, kSa1K0, standard_constraints( 2, kSa1K0 ) );
    REQUIRE( r.status == AtpgStatus::Detected );
    CHECK( r.pattern->pi == parse_vector3( "0" ) );
    CHECK( r.pattern->constraints.to_string() == "1:1" );
    CHECK( simulate5( n, r.pattern->pi, kSa1K0, r.pattern->constraints ) == Vector5{ Logic5::D } );
  }
  SUBCASE( "constant output is untestable" )
  {
    auto n = bench( "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\nna = NOT(a)\nt = AND(a, na)\ny = AND(t, keyinput0)" );
    CHECK( d_algorithm( n, kSa1K0, {} ).status == AtpgStatus::Untestable );
  }
}

TEST_CASE( "constraint errors" )
{
  auto n = bench( kTwoKey );
  CHECK_THROWS_AS( d_algorithm( n, kSa1K0, {} ), Error );
  CHECK_THROWS_AS( d_algorithm( n, kSa1K0, InjectionMap::parse( "0:1,1:1" ) ), ActivationConflict );
  CHECK_NOTHROW( d_algorithm( n, kSa1K0, InjectionMap::parse( "0:0,1:1" ) ) );
  CHECK_THROWS_AS( d_algorithm( n, FaultSpec{ 2, Polarity::Sa1 }, {} ), DimensionError );
  CHECK( standard_constraints( 3, FaultSpec{ 1, Polarity::Sa0 } ).to_string() == "0:0,2:0" );
}

TEST_CASE( "interdependent key lines need the fallback polarity" )
{
  auto n = reference::interdependent_three_key_circuit();
  auto set = generate_pattern_set( n, Polarity::Sa1 );
  CHECK( set.unresolved.empty() );
  REQUIRE( set.patterns.size() == 3 );

  const auto* k0 = set.find( 0 );
  REQUIRE( k0 );
  CHECK( k0->polarity == Polarity::Sa1 );
  CHECK( to_string( std::span<const Logic3>( k0->pi ) ) == "11010X" );
  CHECK( k0->detecting_pos == std::vector<std::size_t>{ 0 } );

  // With k0 forced to 1, n2 = 0 blocks k1; forcing k0 to 0 opens the path.
  CHECK( d_algorithm( n, FaultSpec{ 1, Polarity::Sa1 }, standard_constraints( 3, { 1, Polarity::Sa1 } ) ).status ==
         AtpgStatus::Untestable );
  CHECK( set.status[1] == KeyTestStatus::Fallback );
  CHECK( set.find( 1 )->polarity == Polarity::Sa0 );
  CHECK( set.status[2] == KeyTestStatus::Primary );

  for ( const auto& p : set.patterns )
  {
    CHECK( verify_pattern( n, p ) );
    CHECK( reference::pattern_holds( n, p ) );
  }

  auto no_fallback = generate_pattern_set( n, Polarity::Sa1, { .fallback = false } );
  CHECK( no_fallback.unresolved == std::vector<std::size_t>{ 1 } );
  CHECK( no_fallback.status[1] == KeyTestStatus::Unresolved );
}

TEST_CASE( "c432 rll patterns all verify" )
{
  auto c432 = read_bench_file( kBench + "/c432.bench" );
  auto locked = lock_rll( c432, random_key( 32, 1 ), 7 );
  auto set = generate_pattern_set( locked, Polarity::Sa1 );
  CHECK( set.aborted.empty() );
  CHECK( set.patterns.size() + set.unresolved.size() == 32 );
  CHECK( set.patterns.size() <= 32 );
  for ( const auto& p : set.patterns )
  {
    CHECK( verify_pattern( locked, p ) );
    CHECK_FALSE( p.detecting_pos.empty() );
    CHECK( p.constraints == standard_constraints( 32, { p.key_index, p.polarity } ) );
  }
  SUBCASE( "threads do not change the result" )
  {
    auto threaded = generate_pattern_set( locked, Polarity::Sa1, { .threads = 4 } );
    CHECK( write_pattern_file( locked, threaded ) == write_pattern_file( locked, set ) );
  }
}

TEST_CASE( "verify_pattern rejects an all-X pattern" )
{
  auto n = bench( kAndLock );
  Pattern p{ 0, Polarity::Sa1, parse_vector3( "X" ), { 0 }, {} };
  CHECK_FALSE( verify_pattern( n, p ) );
  p.pi = parse_vector3( "1" );
  CHECK( verify_pattern( n, p ) );
  p.detecting_pos.clear();
  CHECK_FALSE( verify_pattern( n, p ) );
}

TEST_CASE( "generated patterns agree with brute force on random circuits" )
{
  Rng rng( 1234 );
  for ( int c = 0; c < 200; ++c )
  {
    auto n = reference::random_keyed_circuit( rng, 3, { .max_inputs = 10 } );
    const auto keys = n.key_inputs().size();
    for ( std::size_t k = 0; k < keys; ++k )
    {
      for ( auto pol : { Polarity::Sa1, Polarity::Sa0 } )
      {
        FaultSpec fault{ k, pol };
        auto constraints = standard_constraints( keys, fault );
        auto r = d_algorithm( n, fault, constraints );
        REQUIRE( r.status != AtpgStatus::Aborted );
        CHECK( ( r.status == AtpgStatus::Detected ) == reference::distinguishable( n, k, constraints ) );
        if ( r.pattern )
        {
          CHECK( verify_pattern( n, *r.pattern ) );
          CHECK( reference::pattern_holds( n, *r.pattern ) );
        }
      }
    }
  }
}

TEST_CASE( "verify_pattern agrees with brute force on mutated patterns" )
{
  Rng rng( 99 );
  int checked = 0;
  while ( checked < 1000 )
  {
    auto n = reference::random_keyed_circuit( rng, 3, { .max_inputs = 10 } );
    auto set = generate_pattern_set( n, rng.bit() ? Polarity::Sa1 : Polarity::Sa0 );
    for ( auto p : set.patterns )
    {
      // Flip, fix or free a few inputs, and sometimes claim an extra output.
      for ( int m = 0, edits = int( rng.below( 3 ) ); m < edits; ++m )
      {
        auto& v = p.pi[rng.below( p.pi.size() )];
        auto r = rng.below( 3 );
        v = r == 2 ? Logic3::X : to_logic3( r == 1 );
      }
      if ( rng.below( 4 ) == 0 )
      {
        auto o = rng.below( n.outputs().size() );
        if ( std::find( p.detecting_pos.begin(), p.detecting_pos.end(), o ) == p.detecting_pos.end() )
        {
          p.detecting_pos.push_back( o );
          std::sort( p.detecting_pos.begin(), p.detecting_pos.end() );
        }
      }
      CHECK( verify_pattern( n, p ) == reference::pattern_holds( n, p ) );
      ++checked;
    }
  }
}

TEST_CASE( "pattern file round trip" )
{
  auto n = reference::interdependent_three_key_circuit();
  auto set = generate_pattern_set( n, Polarity::Sa1 );
  auto text = write_pattern_file( n, set );
  CHECK( text.rfind( "6 2 3 three_key\n", 0 ) == 0 );
  CHECK( text.find( "P 0 sa1 11010X 0\n" ) != std::string::npos );
  auto back = read_pattern_file( text, n );
  CHECK( back.patterns == set.patterns );
  CHECK( write_pattern_file( n, back ) == text );
}

TEST_CASE( "pattern file schema errors" )
{
  auto n = reference::interdependent_three_key_circuit();
  const char* bad[] = {
    "",
    "6 2 4 three_key\n",
    "6 2 3 three_key\nP 0 sa1 11010 0\n",
    "6 2 3 three_key\nP 0 sa2 11010X 0\n",
    "6 2 3 three_key\nP 3 sa1 11010X 0\n",
    "6 2 3 three_key\nP 0 sa1 11010X 2\n",
    "6 2 3 three_key\nP 0 sa1 11010X\n",
    "6 2 3 three_key\nP 0 sa1 11010Z 0\n",
    "6 2 3 three_key\nP 0 sa1 11010X 0\nP 0 sa1 11010X 0\n",
    "6 2 3 three_key\nQ 0 sa1 11010X 0\n",
  };
  for ( auto text : bad )
  {
    CAPTURE( text );
    CHECK_THROWS_AS( read_pattern_file( text, n ), ParseError );
  }
}
