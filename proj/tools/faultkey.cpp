#include "faultkey/attack.hpp"
#include "faultkey/atpg.hpp"
#include "faultkey/error.hpp"
#include "faultkey/locking.hpp"
#include "faultkey/netlist.hpp"
#include "faultkey/oracle.hpp"
#include "faultkey/simulate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace faultkey;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

/// Distinguishes the hidden key stream from the site-selection stream.
constexpr std::uint64_t kKeySeedSalt = 0x6b65795f73656564ULL;

struct UsageError : Error
{
  using Error::Error;
};

std::string read_text( const std::string& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
  {
    throw UsageError( "cannot open '" + path + "'" );
  }
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text( const std::string& path, const std::string& text )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
  {
    throw UsageError( "cannot write '" + path + "'" );
  }
  out << text;
}

Netlist load( const std::string& path, const std::string& prefix )
{
  if ( !std::filesystem::exists( path ) )
  {
    throw UsageError( "no such file '" + path + "'" );
  }
  return read_bench_file( path, KeyNaming{ prefix } );
}

Polarity parse_polarity( const std::string& text )
{
  auto p = polarity_from_string( text );
  if ( !p )
  {
    throw UsageError( "polarity must be sa1 or sa0" );
  }
  return *p;
}

struct LockArgs
{
  std::string input;
  std::string scheme = "rll";
  std::size_t key_size = 0;
  std::vector<std::size_t> split;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> key_seed;
  std::string key_bits;
  std::string cube;
  std::string output;
  std::string key_out;
  std::string prefix = "keyinput";
};

int cmd_lock( const LockArgs& a )
{
  auto scheme = lock_scheme_from_string( a.scheme );
  if ( !scheme )
  {
    throw UsageError( "scheme must be rll, sll, sfll or combined" );
  }
  LockSpec spec;
  spec.scheme = *scheme;
  spec.seed = a.seed;
  spec.key_size = a.key_size;
  if ( spec.scheme == LockScheme::Combined )
  {
    if ( a.split.size() != 2 )
    {
      throw UsageError( "combined locking needs --split <sfll bits>,<rll bits>" );
    }
    spec.sfll_bits = a.split[0];
    if ( spec.key_size != 0 && spec.key_size != a.split[0] + a.split[1] )
    {
      throw UsageError( "--key-size disagrees with --split" );
    }
    spec.key_size = a.split[0] + a.split[1];
  }
  else if ( !a.split.empty() )
  {
    throw UsageError( "--split only applies to the combined scheme" );
  }
  if ( spec.key_size == 0 )
  {
    throw UsageError( "key size must be at least 1" );
  }
  if ( !a.cube.empty() )
  {
    spec.protected_cube = parse_vector3( a.cube );
  }

  auto original = load( a.input, a.prefix );
  KeyVector key = a.key_bits.empty() ? random_key( spec.key_size, a.key_seed.value_or( a.seed ^ kKeySeedSalt ) )
                                     : KeyVector::parse( a.key_bits );
  if ( key.size() != spec.key_size )
  {
    throw UsageError( "--key has " + std::to_string( key.size() ) + " bits, expected " +
                      std::to_string( spec.key_size ) );
  }
  auto locked = lock( original, spec, key );

  const auto stem = std::filesystem::path( a.input ).stem().string() + "_" + std::string( to_string( spec.scheme ) ) +
                    std::to_string( spec.key_size );
  const auto bench_path = a.output.empty() ? stem + ".bench" : a.output;
  const auto key_path =
      a.key_out.empty() ? std::filesystem::path( bench_path ).replace_extension( ".key" ).string() : a.key_out;
  write_text( bench_path, emit_bench( locked ) );
  write_key_file( key_path, key );

  std::cout << "locked " << original.name() << " with " << to_string( spec.scheme ) << ": |K| = "
            << locked.key_inputs().size() << ", " << original.gates().size() << " -> " << locked.gates().size()
            << " gates\n";
  if ( spec.scheme == LockScheme::Sll )
  {
    std::cout << "interference ratio " << interference_ratio( locked, 0, spec.key_size ) << "\n";
  }
  std::cout << "wrote " << bench_path << " and " << key_path << "\n";
  return kOk;
}

struct AtpgArgs
{
  std::string input;
  std::string polarity = "sa1";
  std::string prefix = "keyinput";
  unsigned threads = 1;
  bool no_fallback = false;
  std::uint64_t backtrack_limit = 1'000'000;
  std::string output;
};

int cmd_atpg( const AtpgArgs& a )
{
  auto locked = load( a.input, a.prefix );
  if ( locked.key_inputs().empty() )
  {
    std::cerr << "error: no key inputs (prefix '" << a.prefix << "')\n";
    return kDomainFailure;
  }
  PatternSetOptions options;
  options.threads = a.threads;
  options.fallback = !a.no_fallback;
  options.atpg.backtrack_limit = a.backtrack_limit;
  auto set = generate_pattern_set( locked, parse_polarity( a.polarity ), options );

  for ( std::size_t i = 0; i < set.status.size(); ++i )
  {
    std::cout << "k" << i << " ";
    switch ( set.status[i] )
    {
    case KeyTestStatus::Primary: std::cout << "pattern " << to_string( set.find( i )->polarity ); break;
    case KeyTestStatus::Fallback: std::cout << "fallback " << to_string( set.find( i )->polarity ); break;
    case KeyTestStatus::Unresolved: std::cout << "unresolved"; break;
    }
    if ( std::find( set.aborted.begin(), set.aborted.end(), i ) != set.aborted.end() )
    {
      std::cout << " (backtrack limit hit)";
    }
    std::cout << "\n";
  }
  const auto path = a.output.empty() ? std::filesystem::path( a.input ).stem().string() + ".pat" : a.output;
  write_text( path, write_pattern_file( locked, set ) );
  std::cout << set.patterns.size() << " patterns, " << set.unresolved.size() << " unresolved; wrote " << path << "\n";
  return set.unresolved.empty() ? kOk : kDomainFailure;
}

struct AttackArgs
{
  std::string input;
  std::string key_file;
  std::string replay;
  std::string patterns;
  std::string transcript_out;
  std::string report;
  std::string polarity = "sa1";
  std::string prefix = "keyinput";
  unsigned threads = 1;
  bool brute_force = false;
  bool omit_timing = false;
  std::size_t samples = 10000;
};

int cmd_attack( const AttackArgs& a )
{
  auto locked = load( a.input, a.prefix );
  std::unique_ptr<Oracle> oracle;
  if ( !a.replay.empty() )
  {
    oracle = std::make_unique<ReplayOracle>( Transcript::parse( read_text( a.replay ) ) );
  }
  else
  {
    oracle = std::make_unique<SimulatedOracle>( load( a.input, a.prefix ), read_key_file( a.key_file ) );
  }

  AttackOptions options;
  options.polarity = parse_polarity( a.polarity );
  options.atpg.threads = a.threads;
  options.brute_force_residual = a.brute_force;
  options.check.samples = a.samples;
  if ( !a.patterns.empty() )
  {
    options.patterns = read_pattern_file( read_text( a.patterns ), locked );
  }

  auto report = run_attack( locked, *oracle, options );
  bool verified = false;
  if ( auto key = report.recovered_key() )
  {
    verified = verify_recovered_key( locked, *key, *oracle, options.check );
  }

  const auto json = report_to_json( report, !a.omit_timing );
  if ( a.report.empty() )
  {
    std::cout << json;
  }
  else
  {
    write_text( a.report, json );
  }
  if ( !a.transcript_out.empty() )
  {
    write_text( a.transcript_out, oracle->transcript().to_text() );
  }

  std::size_t recovered = 0;
  for ( const auto& r : report.resolutions )
  {
    recovered += r.status == BitStatus::Recovered;
  }
  std::cerr << recovered << "/" << report.key_count << " key bits recovered with " << report.total_queries
            << " queries; ";
  if ( auto key = report.recovered_key() )
  {
    std::cerr << "key " << key->to_string() << ( verified ? " verified" : " FAILED verification" ) << "\n";
  }
  else
  {
    std::cerr << "key incomplete\n";
  }
  return report.complete() && verified ? kOk : kDomainFailure;
}

struct SimArgs
{
  std::string input;
  std::string pi;
  std::string key;
  std::string inject = "-";
  std::string prefix = "keyinput";
};

int cmd_sim( const SimArgs& a )
{
  auto netlist = load( a.input, a.prefix );
  auto pi = parse_vector3( a.pi );
  auto injection = InjectionMap::parse( a.inject );
  Vector3 out;
  if ( a.key.empty() && netlist.key_inputs().empty() )
  {
    out = simulate3( netlist, pi, {} );
  }
  else
  {
    auto key = KeyVector::parse( a.key );
    out = simulate_injected( netlist, pi, key, injection );
  }
  std::cout << to_string( std::span<const Logic3>( out ) ) << "\n";
  return kOk;
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "Key recovery from locked netlists by fault injection on key lines" };
  app.require_subcommand( 1 );

  LockArgs lock_args;
  auto* lock_cmd = app.add_subcommand( "lock", "Lock a .bench netlist and write a key sidecar" );
  lock_cmd->add_option( "input", lock_args.input, "Original .bench netlist" )->required();
  lock_cmd->add_option( "--scheme", lock_args.scheme, "rll, sll, sfll or combined" )->capture_default_str();
  lock_cmd->add_option( "--key-size", lock_args.key_size, "Key bits" );
  lock_cmd->add_option( "--split", lock_args.split, "Combined: sfll bits,rll bits" )->delimiter( ',' )->expected( 2 );
  lock_cmd->add_option( "--seed", lock_args.seed, "Seed for site selection" )->required();
  lock_cmd->add_option( "--key-seed", lock_args.key_seed, "Seed for the random key (derived from --seed by default)" );
  lock_cmd->add_option( "--key", lock_args.key_bits, "Explicit key bits instead of a random key" );
  lock_cmd->add_option( "--cube", lock_args.cube, "SFLL protected cube over the data inputs (0/1/X)" );
  lock_cmd->add_option( "-o,--output", lock_args.output, "Locked netlist path" );
  lock_cmd->add_option( "--key-out", lock_args.key_out, "Key sidecar path" );
  lock_cmd->add_option( "--key-prefix", lock_args.prefix, "Key input name prefix" )->capture_default_str();

  AtpgArgs atpg_args;
  auto* atpg_cmd = app.add_subcommand( "atpg", "Generate one constrained test per key line" );
  atpg_cmd->add_option( "input", atpg_args.input, "Locked .bench netlist" )->required();
  atpg_cmd->add_option( "--polarity", atpg_args.polarity, "sa1 or sa0" )->capture_default_str();
  atpg_cmd->add_option( "--key-prefix", atpg_args.prefix, "Key input name prefix" )->capture_default_str();
  atpg_cmd->add_option( "--threads", atpg_args.threads, "Worker threads" )->capture_default_str();
  atpg_cmd->add_flag( "--no-fallback", atpg_args.no_fallback, "Do not retry with the opposite polarity" );
  atpg_cmd->add_option( "--backtrack-limit", atpg_args.backtrack_limit, "Backtracks per fault" )
      ->capture_default_str();
  atpg_cmd->add_option( "-o,--output", atpg_args.output, "Pattern file path" );

  AttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand( "attack", "Recover the key through a fault-injectable oracle" );
  attack_cmd->add_option( "input", attack_args.input, "Locked .bench netlist" )->required();
  auto* key_opt = attack_cmd->add_option( "--key", attack_args.key_file, "Hidden key sidecar for the simulated chip" );
  auto* replay_opt = attack_cmd->add_option( "--replay", attack_args.replay, "Answer queries from a transcript" );
  key_opt->excludes( replay_opt );
  attack_cmd->add_option( "--patterns", attack_args.patterns, "Pattern file to use instead of running ATPG" );
  attack_cmd->add_option( "--transcript-out", attack_args.transcript_out, "Write the oracle transcript" );
  attack_cmd->add_option( "--report", attack_args.report, "Write the JSON report here instead of stdout" );
  attack_cmd->add_option( "--polarity", attack_args.polarity, "Injected polarity tried first" )->capture_default_str();
  attack_cmd->add_option( "--key-prefix", attack_args.prefix, "Key input name prefix" )->capture_default_str();
  attack_cmd->add_option( "--threads", attack_args.threads, "ATPG worker threads" )->capture_default_str();
  attack_cmd->add_option( "--check-samples", attack_args.samples, "Random vectors for key verification" )
      ->capture_default_str();
  attack_cmd->add_flag( "--brute-force-residual", attack_args.brute_force,
                        "Search exhaustively over at most 20 unresolved bits" );
  attack_cmd->add_flag( "--omit-timing", attack_args.omit_timing, "Leave wall_time out of the report" );

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand( "sim", "Simulate one input vector" );
  sim_cmd->add_option( "input", sim_args.input, ".bench netlist" )->required();
  sim_cmd->add_option( "--pi", sim_args.pi, "Data input values over 0/1/X" )->required();
  sim_cmd->add_option( "--key", sim_args.key, "Key bits" );
  sim_cmd->add_option( "--inject", sim_args.inject, "Injected key values, idx:val,... or -" )->capture_default_str();
  sim_cmd->add_option( "--key-prefix", sim_args.prefix, "Key input name prefix" )->capture_default_str();

  try
  {
    app.parse( argc, argv );
  }
  catch ( const CLI::ParseError& e )
  {
    const int code = app.exit( e );
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if ( *lock_cmd )
    {
      return cmd_lock( lock_args );
    }
    if ( *atpg_cmd )
    {
      return cmd_atpg( atpg_args );
    }
    if ( *attack_cmd )
    {
      if ( attack_args.key_file.empty() && attack_args.replay.empty() )
      {
        throw UsageError( "attack needs --key or --replay" );
      }
      return cmd_attack( attack_args );
    }
    return cmd_sim( sim_args );
  }
  catch ( const UsageError& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  catch ( const ParseError& e )
  {
    std::cerr << "error: " << e.what();
    if ( e.line() )
    {
      std::cerr << " (line " << e.line() << ")";
    }
    std::cerr << "\n";
    return kUsage;
  }
  catch ( const DimensionError& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  catch ( const Error& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainFailure;
  }
}
