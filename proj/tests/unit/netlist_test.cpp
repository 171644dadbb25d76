#include "faultkey/locking.hpp"
#include "faultkey/netlist.hpp"

#include "../support/reference.hpp"

#include <doctest.h>

#include <algorithm>

using namespace faultkey;

namespace {

const std::string kBench = FAULTKEY_BENCH_DIR;

DiagnosticKind failure_kind( const std::string& text )
{
  try
  {
    parse_bench( text );
  }
  catch ( const NetlistError& e )
  {
    return e.kind();
  }
  FAIL( "text was accepted" );
  return DiagnosticKind::Syntax;
}

} // namespace

TEST_CASE( "minimal buffer circuit" )
{
  auto n = parse_bench( "INPUT(a)\nOUTPUT(y)\ny = BUF(a)" );
  CHECK( n.inputs().size() == 1 );
  CHECK( n.outputs().size() == 1 );
  CHECK( n.key_inputs().empty() );
  REQUIRE( n.gates().size() == 1 );
  CHECK( n.gates()[0].kind == GateKind::Buf );
  CHECK( n.net_name( n.gates()[0].output ) == "y" );
}

TEST_CASE( "c17 counts" )
{
  auto n = read_bench_file( kBench + "/c17.bench" );
  CHECK( n.name() == "c17" );
  CHECK( n.inputs().size() == 5 );
  CHECK( n.outputs().size() == 2 );
  CHECK( n.gates().size() == 6 );
  CHECK( std::all_of( n.gates().begin(), n.gates().end(), []( const Gate& g ) { return g.kind == GateKind::Nand; } ) );
  CHECK( validate( n.to_draft() ).empty() );
}

TEST_CASE( "key inputs are split from data inputs" )
{
  auto n = parse_bench( "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)" );
  CHECK( n.inputs().size() == 1 );
  REQUIRE( n.key_inputs().size() == 1 );
  CHECK( n.net_name( n.key_inputs()[0] ) == "keyinput0" );
  CHECK( n.is_key_input( n.key_inputs()[0] ) );
  CHECK( n.key_index( n.key_inputs()[0] ) == 0u );
  CHECK_FALSE( n.is_key_input( n.inputs()[0] ) );
}

TEST_CASE( "key order follows the numeric suffix, not declaration order" )
{
  auto n = parse_bench( "INPUT(keyinput10)\nINPUT(a)\nINPUT(keyinput2)\nINPUT(keyinput0)\nOUTPUT(y)\n"
                        "t = XOR(a, keyinput10)\nu = XOR(t, keyinput2)\ny = XNOR(u, keyinput0)" );
  REQUIRE( n.key_inputs().size() == 3 );
  CHECK( n.net_name( n.key_inputs()[0] ) == "keyinput0" );
  CHECK( n.net_name( n.key_inputs()[1] ) == "keyinput2" );
  CHECK( n.net_name( n.key_inputs()[2] ) == "keyinput10" );
}

TEST_CASE( "custom key prefix" )
{
  KeyNaming naming{ "K" };
  auto n = parse_bench( "INPUT(a)\nINPUT(K1)\nINPUT(K0)\nINPUT(keyinput0)\nOUTPUT(y)\n"
                        "t = AND(a, K1, K0)\ny = OR(t, keyinput0)",
                        "p", naming );
  CHECK( n.key_inputs().size() == 2 );
  CHECK( n.inputs().size() == 2 );
  CHECK( n.net_name( n.key_inputs()[0] ) == "K0" );
}

TEST_CASE( "gate keywords are case-insensitive and emitted uppercase" )
{
  auto n = parse_bench( "input(a)\ninput(b)\noutput(y)\n# comment\n\ny = nAnD(a, b)  # trailing\n" );
  CHECK( n.gates()[0].kind == GateKind::Nand );
  CHECK( emit_bench( n ).find( "y = NAND(a, b)" ) != std::string::npos );
}

TEST_CASE( "net names are case-sensitive" )
{
  auto n = parse_bench( "INPUT(a)\nINPUT(A)\nOUTPUT(y)\ny = AND(a, A)" );
  CHECK( n.inputs().size() == 2 );
}

TEST_CASE( "multi-input gates accepted, arity rules enforced" )
{
  CHECK_NOTHROW( parse_bench( "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = NOR(a, b, c, d)" ) );
  CHECK( failure_kind( "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = XOR(a, b, c)" ) == DiagnosticKind::BadArity );
  CHECK( failure_kind( "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NOT(a, b)" ) == DiagnosticKind::BadArity );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = AND(a)" ) == DiagnosticKind::BadArity );
}

TEST_CASE( "distinct diagnostics" )
{
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = BUF(a)\ny = NOT(a)" ) == DiagnosticKind::DuplicateDriver );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = AND(a, b)" ) == DiagnosticKind::UndeclaredNet );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\nt = AND(a, y)\ny = BUF(t)" ) == DiagnosticKind::Cycle );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = MUX(a, a)" ) == DiagnosticKind::UnknownGateKind );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = DFF(a)" ) == DiagnosticKind::SequentialElement );
  CHECK( failure_kind( "INPUT(a)\nOUTPUT(y)\ny = AND(a" ) == DiagnosticKind::Syntax );
  CHECK( failure_kind( "INPUT(a)\nINPUT(keyinput1)\nINPUT(keyinput01)\nOUTPUT(y)\ny = AND(a, keyinput1, keyinput01)" ) ==
         DiagnosticKind::DuplicateKeyIndex );
}

TEST_CASE( "syntax errors carry line and column" )
{
  try
  {
    parse_bench( "INPUT(a)\nOUTPUT(y)\ny = AND(a, a\n" );
    FAIL( "accepted" );
  }
  catch ( const NetlistError& e )
  {
    CHECK( e.line() == 3 );
    CHECK( e.column() > 0 );
  }
}

TEST_CASE( "validate reports duplicate drivers and cycles on drafts" )
{
  NetlistDraft d;
  d.inputs = { "a" };
  d.outputs = { "y" };
  d.gates.push_back( { "y", GateKind::Buf, { "a" }, 1 } );
  CHECK( validate( d ).empty() );
  d.gates.push_back( { "y", GateKind::Not, { "a" }, 2 } );
  auto diags = validate( d );
  REQUIRE( diags.size() == 1 );
  CHECK( diags[0].kind == DiagnosticKind::DuplicateDriver );

  NetlistDraft c;
  c.inputs = { "a" };
  c.outputs = { "y" };
  c.gates.push_back( { "t", GateKind::And, { "a", "u" }, 1 } );
  c.gates.push_back( { "u", GateKind::Buf, { "t" }, 2 } );
  c.gates.push_back( { "y", GateKind::Buf, { "u" }, 3 } );
  diags = validate( c );
  REQUIRE( !diags.empty() );
  CHECK( std::any_of( diags.begin(), diags.end(), []( const Diagnostic& x ) { return x.kind == DiagnosticKind::Cycle; } ) );
}

TEST_CASE( "gates are stored in topological order with canonical ids" )
{
  auto n = parse_bench( "INPUT(a)\nINPUT(keyinput0)\nINPUT(b)\nOUTPUT(y)\ny = AND(t, b)\nt = XOR(a, keyinput0)" );
  CHECK( n.net_name( 0 ) == "a" );
  CHECK( n.net_name( 1 ) == "b" );
  CHECK( n.net_name( 2 ) == "keyinput0" );
  CHECK( n.net_name( n.gates()[0].output ) == "t" );
  CHECK( n.net_name( n.gates()[1].output ) == "y" );
  for ( std::size_t g = 0; g < n.gates().size(); ++g )
  {
    for ( auto in : n.gates()[g].inputs )
    {
      CHECK( ( n.driver( in ) == Netlist::no_gate || n.driver( in ) < g ) );
    }
  }
  auto t = *n.find_net( "t" );
  REQUIRE( n.fanout( t ).size() == 1 );
  CHECK( n.fanout( t )[0] == 1u );
}

TEST_CASE( "emit/parse round trip" )
{
  SUBCASE( "buffer circuit text is a fixed point" )
  {
    auto text = emit_bench( parse_bench( "INPUT(a)\nOUTPUT(y)\ny = BUF(a)", "m" ) );
    CHECK( emit_bench( parse_bench( text, "m" ) ) == text );
  }
  SUBCASE( "benchmarks" )
  {
    for ( auto name : { "c17", "c432", "c1355", "c1908", "c2670" } )
    {
      auto n = read_bench_file( kBench + "/" + name + ".bench" );
      auto again = parse_bench( emit_bench( n ), name );
      CHECK( again == n );
      CHECK( emit_bench( again ) == emit_bench( n ) );
    }
  }
  SUBCASE( "locked c432 keeps key order" )
  {
    auto c432 = read_bench_file( kBench + "/c432.bench" );
    auto locked = lock_rll( c432, random_key( 32, 3 ), 7 );
    auto again = parse_bench( emit_bench( locked ), "c432" );
    CHECK( again == locked );
    REQUIRE( again.key_inputs().size() == 32 );
    for ( std::size_t i = 0; i < 32; ++i )
    {
      CHECK( again.net_name( again.key_inputs()[i] ) == "keyinput" + std::to_string( i ) );
    }
  }
  SUBCASE( "random circuits" )
  {
    Rng rng( 11 );
    for ( int i = 0; i < 200; ++i )
    {
      auto n = reference::random_circuit( rng );
      CHECK( parse_bench( emit_bench( n ), "rnd" ) == n );
    }
  }
}

TEST_CASE( "validate agrees with the parser on random drafts" )
{
  Rng rng( 5 );
  for ( int i = 0; i < 200; ++i )
  {
    auto draft = reference::random_circuit( rng ).to_draft();
    // Corrupt some drafts: rewire one gate input to a later or unknown net.
    if ( rng.bit() && draft.gates.size() > 2 )
    {
      auto& g = draft.gates[rng.below( draft.gates.size() - 1 )];
      g.inputs[0] = rng.bit() ? draft.gates.back().output : "nowhere";
    }
    const bool valid = validate( draft ).empty();
    bool built = true;
    try
    {
      Netlist::build( draft );
    }
    catch ( const NetlistError& )
    {
      built = false;
    }
    CHECK( valid == built );
  }
}
