#include "faultkey/simulate.hpp"

#include "../support/reference.hpp"

#include <doctest.h>

using namespace faultkey;
using reference::bench;

namespace {

const std::string kBench = FAULTKEY_BENCH_DIR;

constexpr Logic3 O = Logic3::Zero;
constexpr Logic3 I = Logic3::One;
constexpr Logic3 X = Logic3::X;

const char* kXorLock = "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)";
const char* kAndLock = "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = AND(a, keyinput0)";
const char* kTwoKey = "INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(y)\n"
                      "t = XOR(a, keyinput0)\ny = XOR(t, keyinput1)";

Vector3 random_vector3( Rng& rng, std::size_t n, bool allow_x = true )
{
  Vector3 v( n );
  for ( auto& x : v )
  {
    auto r = rng.below( allow_x ? 3 : 2 );
    x = r == 2 ? X : to_logic3( r == 1 );
  }
  return v;
}

} // namespace

TEST_CASE( "ternary gate tables" )
{
  const Logic3 all[] = { O, I, X };
  for ( auto a : all )
  {
    for ( auto b : all )
    {
      const Logic3 in[] = { a, b };
      auto and_v = eval_gate3( GateKind::And, in );
      auto or_v = eval_gate3( GateKind::Or, in );
      auto xor_v = eval_gate3( GateKind::Xor, in );
      CHECK( and_v == ( a == O || b == O ? O : ( a == I && b == I ? I : X ) ) );
      CHECK( or_v == ( a == I || b == I ? I : ( a == O && b == O ? O : X ) ) );
      CHECK( xor_v == ( a == X || b == X ? X : to_logic3( a != b ) ) );
      CHECK( eval_gate3( GateKind::Nand, in ) == !and_v );
      CHECK( eval_gate3( GateKind::Nor, in ) == !or_v );
      CHECK( eval_gate3( GateKind::Xnor, in ) == !xor_v );
    }
    const Logic3 one[] = { a };
    CHECK( eval_gate3( GateKind::Not, one ) == !a );
    CHECK( eval_gate3( GateKind::Buf, one ) == a );
  }
}

TEST_CASE( "D-calculus tables match component-wise evaluation" )
{
  const Logic5 all[] = { Logic5::Zero, Logic5::One, Logic5::D, Logic5::Dbar, Logic5::X };
  const GateKind kinds[] = { GateKind::And, GateKind::Nand, GateKind::Or, GateKind::Nor, GateKind::Xor, GateKind::Xnor };
  for ( auto kind : kinds )
  {
    for ( auto a : all )
    {
      for ( auto b : all )
      {
        const Logic5 in[] = { a, b };
        const Logic3 g[] = { good_part( a ), good_part( b ) };
        const Logic3 f[] = { faulty_part( a ), faulty_part( b ) };
        CHECK( eval_gate5( kind, in ) == compose( eval_gate3( kind, g ), eval_gate3( kind, f ) ) );
      }
    }
  }
  const Logic5 d_and_one[] = { Logic5::D, Logic5::One };
  CHECK( eval_gate5( GateKind::And, d_and_one ) == Logic5::D );
  const Logic5 d_nand_one[] = { Logic5::D, Logic5::One };
  CHECK( eval_gate5( GateKind::Nand, d_nand_one ) == Logic5::Dbar );
  const Logic5 d_and_dbar[] = { Logic5::D, Logic5::Dbar };
  CHECK( eval_gate5( GateKind::And, d_and_dbar ) == Logic5::Zero );
  const Logic5 d_xor_d[] = { Logic5::D, Logic5::D };
  CHECK( eval_gate5( GateKind::Xor, d_xor_d ) == Logic5::Zero );
}

TEST_CASE( "vector text helpers" )
{
  CHECK( to_string( std::span<const Logic3>( parse_vector3( "01xX" ) ) ) == "01XX" );
  CHECK_THROWS_AS( parse_vector3( "012" ), ParseError );
  CHECK( parse_bits( "0110" ) == BitVector{ 0, 1, 1, 0 } );
  CHECK_THROWS_AS( parse_bits( "01X" ), ParseError );
  CHECK( KeyVector::parse( "101" ).to_string() == "101" );
  CHECK( to_string( Logic5::Dbar ) == "D'" );
}

TEST_CASE( "simulate3 examples" )
{
  auto n = bench( kXorLock );
  const Logic3 pi_a1[] = { I }, pi_ax[] = { X }, key1[] = { I };
  CHECK( simulate3( n, pi_a1, key1 ) == Vector3{ O } );
  CHECK( simulate3( n, pi_ax, key1 ) == Vector3{ X } );
  const Logic3 wrong_width[] = { I, I };
  CHECK_THROWS_AS( simulate3( n, wrong_width, key1 ), DimensionError );
  CHECK_THROWS_AS( simulate3( n, pi_a1, wrong_width ), DimensionError );
}

TEST_CASE( "c17 matches the reference evaluator on every input" )
{
  auto n = read_bench_file( kBench + "/c17.bench" );
  for ( std::uint32_t v = 0; v < 32; ++v )
  {
    BitVector pi( 5 );
    for ( int j = 0; j < 5; ++j )
    {
      pi[j] = ( v >> j ) & 1;
    }
    auto expect = reference::evaluate( n, pi, {} );
    CHECK( simulate3( n, to_vector3( pi ), {} ) == to_vector3( expect ) );
  }
  // Row 0 by hand: every NAND of zeros is 1, N22 = NAND(1,1) = 0, N23 = NAND(1,1) = 0.
  const Logic3 zeros[] = { O, O, O, O, O };
  CHECK( simulate3( n, zeros, {} ) == Vector3{ O, O } );
}

TEST_CASE( "injection examples" )
{
  auto n = bench( kXorLock );
  const Logic3 a0[] = { O };
  CHECK( simulate_injected( n, a0, KeyVector::parse( "0" ), InjectionMap::parse( "0:1" ) ) == Vector3{ I } );
  CHECK( simulate_injected( n, a0, KeyVector::parse( "1" ), InjectionMap::parse( "0:1" ) ) == Vector3{ I } );
  CHECK( simulate_injected( n, a0, KeyVector::parse( "0" ), InjectionMap{} ) == Vector3{ O } );
  CHECK_THROWS_AS( simulate_injected( n, a0, KeyVector::parse( "0" ), InjectionMap::parse( "1:1" ) ), DimensionError );
  CHECK_THROWS_AS( simulate_injected( n, a0, KeyVector::parse( "01" ), InjectionMap{} ), DimensionError );
}

TEST_CASE( "injection on all but one key exposes that key" )
{
  auto n = reference::interdependent_three_key_circuit();
  // Pattern 11010X detects k0 with k1, k2 forced to 1.
  auto pi = parse_vector3( "110100" );
  auto inj = InjectionMap::parse( "1:1,2:1" );
  auto with_k0_0 = simulate_injected( n, pi, KeyVector::parse( "000" ), inj );
  auto with_k0_1 = simulate_injected( n, pi, KeyVector::parse( "100" ), inj );
  CHECK( with_k0_0[0] == !with_k0_1[0] );
  CHECK( with_k0_0[1] == with_k0_1[1] );
}

TEST_CASE( "injection map text" )
{
  auto m = InjectionMap::parse( "3:1,0:0" );
  CHECK( m.to_string() == "0:0,3:1" );
  CHECK( InjectionMap::parse( "-" ).empty() );
  CHECK( InjectionMap{}.to_string() == "-" );
  CHECK( InjectionMap::all_except( 3, 1, 1 ).to_string() == "0:1,2:1" );
  CHECK_THROWS_AS( InjectionMap::parse( "0:2" ), ParseError );
  CHECK_THROWS_AS( InjectionMap::parse( "0:1,0:0" ), ParseError );
  CHECK_THROWS_AS( InjectionMap::parse( "a:1" ), ParseError );
}

TEST_CASE( "simulate5 examples" )
{
  const FaultSpec sa1_k0{ 0, Polarity::Sa1 };
  SUBCASE( "xor passes the fault effect" )
  {
    auto n = bench( kXorLock );
    const Logic3 a0[] = { O };
    CHECK( simulate5( n, a0, sa1_k0, {} ) == Vector5{ Logic5::Dbar } );
  }
  SUBCASE( "and masks it when the side input is 0" )
  {
    auto n = bench( kAndLock );
    const Logic3 a1[] = { I }, a0[] = { O };
    CHECK( simulate5( n, a1, sa1_k0, {} ) == Vector5{ Logic5::Dbar } );
    CHECK( simulate5( n, a0, sa1_k0, {} ) == Vector5{ Logic5::Zero } );
  }
  SUBCASE( "constrained second key" )
  {
    auto n = bench( kTwoKey );
    const Logic3 a0[] = { O };
    CHECK( simulate5( n, a0, sa1_k0, InjectionMap::parse( "1:1" ) ) == Vector5{ Logic5::D } );
  }
  SUBCASE( "activation conflict" )
  {
    auto n = bench( kTwoKey );
    const Logic3 a0[] = { O };
    CHECK_THROWS_AS( simulate5( n, a0, sa1_k0, InjectionMap::parse( "0:1,1:1" ) ), ActivationConflict );
    CHECK_NOTHROW( simulate5( n, a0, sa1_k0, InjectionMap::parse( "0:0,1:1" ) ) );
    CHECK_THROWS_AS( simulate5( n, a0, FaultSpec{ 2, Polarity::Sa1 }, {} ), DimensionError );
  }
}

TEST_CASE( "simulate5 projections equal simulate3 on random circuits" )
{
  Rng rng( 77 );
  for ( int c = 0; c < 100; ++c )
  {
    auto n = reference::random_keyed_circuit( rng, 3, { .max_inputs = 8 } );
    const auto keys = n.key_inputs().size();
    for ( int t = 0; t < 20; ++t )
    {
      auto pi = random_vector3( rng, n.inputs().size() );
      FaultSpec fault{ rng.below( keys ), rng.bit() ? Polarity::Sa1 : Polarity::Sa0 };
      InjectionMap constraints;
      Vector3 good_key( keys, X );
      for ( std::size_t k = 0; k < keys; ++k )
      {
        if ( k != fault.key_index && rng.bit() )
        {
          constraints.force( k, rng.bit() );
          good_key[k] = to_logic3( *constraints.at( k ) );
        }
      }
      auto faulty_key = good_key;
      good_key[fault.key_index] = to_logic3( !stuck_value( fault.polarity ) );
      faulty_key[fault.key_index] = to_logic3( stuck_value( fault.polarity ) );
      auto r5 = simulate5( n, pi, fault, constraints );
      auto g3 = simulate3( n, pi, good_key );
      auto f3 = simulate3( n, pi, faulty_key );
      for ( std::size_t o = 0; o < r5.size(); ++o )
      {
        if ( r5[o] == Logic5::X )
        {
          CHECK( ( g3[o] == X || f3[o] == X ) );
        }
        else
        {
          CHECK( good_part( r5[o] ) == g3[o] );
          CHECK( faulty_part( r5[o] ) == f3[o] );
        }
      }
    }
  }
}

TEST_CASE( "ternary simulation is sound and monotone" )
{
  Rng rng( 3 );
  for ( int c = 0; c < 100; ++c )
  {
    auto n = reference::random_circuit( rng, { .max_inputs = 7 } );
    for ( int t = 0; t < 10; ++t )
    {
      auto pi = random_vector3( rng, n.inputs().size() );
      auto coarse = simulate3( n, pi, {} );
      auto exact = reference::evaluate_exact( n, pi, {} );
      for ( std::size_t o = 0; o < coarse.size(); ++o )
      {
        if ( coarse[o] != X )
        {
          CHECK( coarse[o] == exact[o] );
        }
      }
      for ( std::size_t j = 0; j < pi.size(); ++j )
      {
        if ( pi[j] == X )
        {
          auto refined = pi;
          refined[j] = to_logic3( rng.bit() );
          auto finer = simulate3( n, refined, {} );
          for ( std::size_t o = 0; o < coarse.size(); ++o )
          {
            if ( coarse[o] != X )
            {
              CHECK( finer[o] == coarse[o] );
            }
          }
        }
      }
    }
  }
}

TEST_CASE( "total injection ignores the hidden key" )
{
  auto n = reference::interdependent_three_key_circuit();
  for ( std::uint32_t inj = 0; inj < 8; ++inj )
  {
    InjectionMap m;
    for ( std::size_t k = 0; k < 3; ++k )
    {
      m.force( k, ( inj >> k ) & 1 );
    }
    for ( std::uint32_t v = 0; v < 64; ++v )
    {
      BitVector pi( 6 );
      for ( int j = 0; j < 6; ++j )
      {
        pi[j] = ( v >> j ) & 1;
      }
      auto first = simulate_injected( n, to_vector3( pi ), KeyVector::parse( "000" ), m );
      for ( std::uint32_t key = 1; key < 8; ++key )
      {
        KeyVector hidden( BitVector{ std::uint8_t( key & 1 ), std::uint8_t( ( key >> 1 ) & 1 ),
                                     std::uint8_t( ( key >> 2 ) & 1 ) } );
        CHECK( simulate_injected( n, to_vector3( pi ), hidden, m ) == first );
      }
    }
  }
}

TEST_CASE( "word simulator agrees with the reference evaluator" )
{
  Rng rng( 21 );
  for ( int c = 0; c < 50; ++c )
  {
    auto n = reference::random_circuit( rng );
    WordSimulator sim( n );
    std::vector<std::uint64_t> words( n.inputs().size() );
    for ( auto& w : words )
    {
      w = rng.next();
    }
    sim.run( words, {} );
    for ( int lane = 0; lane < 64; lane += 7 )
    {
      BitVector pi( words.size() );
      for ( std::size_t j = 0; j < pi.size(); ++j )
      {
        pi[j] = ( words[j] >> lane ) & 1;
      }
      auto expect = reference::evaluate( n, pi, {} );
      for ( std::size_t o = 0; o < expect.size(); ++o )
      {
        CHECK( ( ( sim.output( o ) >> lane ) & 1 ) == expect[o] );
      }
    }
  }
}

TEST_CASE( "distinguishing input search" )
{
  auto n = bench( kXorLock );
  const std::uint8_t k0[] = { 0 }, k1[] = { 1 };
  CHECK_FALSE( find_distinguishing_input( n, k0, n, k0 ).has_value() );
  auto w = find_distinguishing_input( n, k0, n, k1 );
  REQUIRE( w.has_value() );
  CHECK( w->size() == 1 );
}
