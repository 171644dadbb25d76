#include "faultkey/attack.hpp"

#include "faultkey/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <map>

namespace faultkey {

namespace {

/// Decides bits from patterns, sharing one all-injected session per distinct injection.
class Decider
{
public:
  Decider( Oracle& oracle, AttackReport& report ) : oracle_( oracle ), report_( report ) {}

  void apply( Pattern p, ResolutionMethod method )
  {
    const auto injected = stuck_value( p.polarity );
    auto full = p.constraints;
    full.force( p.key_index, injected );
    auto key = full.to_string();
    auto it = sessions_.find( key );
    if ( it == sessions_.end() )
    {
      it = sessions_.emplace( key, oracle_.open_session( full ) ).first;
    }
    const auto pi = fill_x( p.pi );
    const auto resp_f = it->second.query( pi );
    auto exempt = oracle_.open_session( p.constraints );
    const auto resp_a = exempt.query( pi );

    auto& r = report_.resolutions[p.key_index];
    r.status = BitStatus::Recovered;
    r.value = decide_bit( resp_f, resp_a, injected );
    r.polarity_used = p.polarity;
    r.method = method;
    r.queries_used = 2;
    r.pattern = std::move( p );
  }

  void next_step() { sessions_.clear(); }

private:
  Oracle& oracle_;
  AttackReport& report_;
  std::map<std::string, OracleSession> sessions_;
};

std::vector<std::size_t> unresolved_bits( const AttackReport& report )
{
  std::vector<std::size_t> out;
  for ( const auto& r : report.resolutions )
  {
    if ( r.status == BitStatus::Unresolved )
    {
      out.push_back( r.key_index );
    }
  }
  return out;
}

void check_supplied_patterns( const Netlist& locked, const PatternSet& set )
{
  for ( const auto& p : set.patterns )
  {
    if ( p.key_index >= locked.key_inputs().size() || p.pi.size() != locked.inputs().size() )
    {
      throw DimensionError( "supplied pattern for key " + std::to_string( p.key_index ) + " does not fit the netlist" );
    }
  }
}

/// Input vectors used to compare a candidate key against the chip.
std::vector<BitVector> comparison_vectors( std::size_t n_pi, const EquivalenceOptions& options )
{
  std::vector<BitVector> out;
  if ( n_pi <= options.exhaustive_limit )
  {
    const std::uint64_t total = std::uint64_t{ 1 } << n_pi;
    out.reserve( total );
    for ( std::uint64_t v = 0; v < total; ++v )
    {
      BitVector bits( n_pi );
      for ( std::size_t j = 0; j < n_pi; ++j )
      {
        bits[j] = ( v >> j ) & 1;
      }
      out.push_back( std::move( bits ) );
    }
    return out;
  }
  Rng rng( options.seed );
  out.reserve( options.samples );
  for ( std::size_t s = 0; s < options.samples; ++s )
  {
    BitVector bits( n_pi );
    for ( auto& b : bits )
    {
      b = rng.bit();
    }
    out.push_back( std::move( bits ) );
  }
  return out;
}

/// Checks 64 vectors at a time against recorded responses; stops at the first mismatch.
bool matches_responses( WordSimulator& sim, std::span<const std::uint64_t> key_words,
                        const std::vector<BitVector>& vectors, const std::vector<BitVector>& responses,
                        std::size_t n_pi, std::size_t n_po )
{
  std::vector<std::uint64_t> pi( n_pi );
  for ( std::size_t base = 0; base < vectors.size(); base += 64 )
  {
    const std::size_t lanes = std::min<std::size_t>( 64, vectors.size() - base );
    std::fill( pi.begin(), pi.end(), 0 );
    for ( std::size_t l = 0; l < lanes; ++l )
    {
      for ( std::size_t j = 0; j < n_pi; ++j )
      {
        pi[j] |= std::uint64_t{ vectors[base + l][j] } << l;
      }
    }
    sim.run( pi, key_words );
    for ( std::size_t o = 0; o < n_po; ++o )
    {
      std::uint64_t expect = 0;
      for ( std::size_t l = 0; l < lanes; ++l )
      {
        expect |= std::uint64_t{ responses[base + l][o] } << l;
      }
      const std::uint64_t mask = lanes == 64 ? ~std::uint64_t{ 0 } : ( std::uint64_t{ 1 } << lanes ) - 1;
      if ( ( sim.output( o ) ^ expect ) & mask )
      {
        return false;
      }
    }
  }
  return true;
}

void brute_force_residual( const Netlist& locked, Oracle& oracle, AttackReport& report,
                           const EquivalenceOptions& options )
{
  const auto residual = unresolved_bits( report );
  const auto vectors = comparison_vectors( locked.inputs().size(), options );
  auto session = oracle.open_session( {} );
  std::vector<BitVector> responses;
  responses.reserve( vectors.size() );
  for ( const auto& v : vectors )
  {
    responses.push_back( session.query( v ) );
  }
  report.total_queries += session.query_count();

  BitVector key( report.key_count, 0 );
  for ( const auto& r : report.resolutions )
  {
    if ( r.value )
    {
      key[r.key_index] = *r.value;
    }
  }
  WordSimulator sim( locked );
  const std::uint64_t total = std::uint64_t{ 1 } << residual.size();
  for ( std::uint64_t a = 0; a < total; ++a )
  {
    for ( std::size_t b = 0; b < residual.size(); ++b )
    {
      key[residual[b]] = ( a >> b ) & 1;
    }
    if ( matches_responses( sim, splat_bits( key ), vectors, responses, locked.inputs().size(),
                            locked.outputs().size() ) )
    {
      for ( auto i : residual )
      {
        auto& r = report.resolutions[i];
        r.status = BitStatus::Recovered;
        r.value = key[i];
        r.method = ResolutionMethod::BruteForce;
      }
      return;
    }
  }
}

} // namespace

std::uint8_t decide_bit( std::span<const std::uint8_t> resp_f, std::span<const std::uint8_t> resp_a,
                         std::uint8_t injected )
{
  if ( resp_f.size() != resp_a.size() )
  {
    throw DimensionError( "responses have different lengths: " + std::to_string( resp_f.size() ) + " and " +
                          std::to_string( resp_a.size() ) );
  }
  const bool same = std::equal( resp_f.begin(), resp_f.end(), resp_a.begin() );
  return same ? injected : static_cast<std::uint8_t>( 1 - injected );
}

std::string_view to_string( BitStatus status )
{
  return status == BitStatus::Recovered ? "recovered" : "unresolved";
}

std::string_view to_string( ResolutionMethod method )
{
  switch ( method )
  {
  case ResolutionMethod::Primary: return "primary";
  case ResolutionMethod::Fallback: return "fallback";
  case ResolutionMethod::Refined: return "refined";
  case ResolutionMethod::BruteForce: return "brute-force";
  case ResolutionMethod::None: return "none";
  }
  return "?";
}

bool AttackReport::complete() const
{
  return std::all_of( resolutions.begin(), resolutions.end(),
                      []( const auto& r ) { return r.status == BitStatus::Recovered; } );
}

std::optional<KeyVector> AttackReport::recovered_key() const
{
  if ( !complete() )
  {
    return std::nullopt;
  }
  BitVector bits;
  for ( const auto& r : resolutions )
  {
    bits.push_back( *r.value );
  }
  return KeyVector( std::move( bits ) );
}

std::size_t AttackReport::patterns_with_polarity( Polarity polarity ) const
{
  return std::count_if( resolutions.begin(), resolutions.end(),
                        [&]( const auto& r ) { return r.pattern && r.pattern->polarity == polarity; } );
}

AttackReport run_attack( const Netlist& locked, Oracle& oracle, const AttackOptions& options )
{
  const auto start = std::chrono::steady_clock::now();
  const auto& shape = oracle.shape();
  if ( shape.inputs != locked.inputs().size() || shape.outputs != locked.outputs().size() ||
       shape.keys != locked.key_inputs().size() )
  {
    throw DimensionError( "oracle interface does not match the netlist" );
  }
  const auto key_count = locked.key_inputs().size();

  AttackReport report;
  report.netlist_name = locked.name();
  report.key_count = key_count;
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    report.resolutions.push_back( { .key_index = i } );
  }

  if ( key_count > 0 )
  {
    PatternSet set;
    if ( options.patterns )
    {
      check_supplied_patterns( locked, *options.patterns );
      set = *options.patterns;
    }
    else
    {
      set = generate_pattern_set( locked, options.polarity, options.atpg );
    }

    Decider decider( oracle, report );
    for ( const bool first : { true, false } )
    {
      for ( const auto& p : set.patterns )
      {
        if ( ( p.polarity == options.polarity ) == first )
        {
          decider.apply( p, first ? ResolutionMethod::Primary : ResolutionMethod::Fallback );
        }
      }
      decider.next_step();
    }

    for ( std::size_t round = 0; round < options.max_refine_rounds; ++round )
    {
      bool progress = false;
      for ( const auto polarity : { options.polarity, opposite( options.polarity ) } )
      {
        const auto open = unresolved_bits( report );
        if ( open.empty() )
        {
          break;
        }
        const auto v = stuck_value( polarity );
        InjectionMap base;
        for ( const auto& r : report.resolutions )
        {
          base.force( r.key_index, r.value.value_or( v ) );
        }
        for ( auto i : open )
        {
          auto constraints = base;
          constraints.release( i );
          auto result = d_algorithm( locked, { i, polarity }, constraints, options.atpg.atpg );
          if ( result.pattern )
          {
            decider.apply( std::move( *result.pattern ), ResolutionMethod::Refined );
            progress = true;
          }
        }
        decider.next_step();
      }
      if ( !progress )
      {
        break;
      }
    }

    for ( const auto& r : report.resolutions )
    {
      report.total_queries += r.queries_used;
      report.total_patterns += r.pattern ? 1 : 0;
    }

    const auto residual = unresolved_bits( report ).size();
    if ( options.brute_force_residual && residual > 0 && residual <= options.brute_force_limit )
    {
      brute_force_residual( locked, oracle, report, options.check );
    }
  }

  report.wall_time = std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count();
  return report;
}

bool verify_recovered_key( const Netlist& locked, const KeyVector& recovered, Oracle& reference,
                           const EquivalenceOptions& options )
{
  if ( recovered.size() != locked.key_inputs().size() )
  {
    throw DimensionError( "recovered key has " + std::to_string( recovered.size() ) + " bits, circuit has " +
                          std::to_string( locked.key_inputs().size() ) + " key inputs" );
  }
  const auto& shape = reference.shape();
  if ( shape.inputs != locked.inputs().size() || shape.outputs != locked.outputs().size() )
  {
    throw DimensionError( "reference oracle interface does not match the netlist" );
  }
  const auto vectors = comparison_vectors( locked.inputs().size(), options );
  auto session = reference.open_session( {} );
  WordSimulator sim( locked );
  const auto key_words = splat_bits( recovered.bits() );
  for ( std::size_t base = 0; base < vectors.size(); base += 64 )
  {
    const auto end = std::min<std::size_t>( vectors.size(), base + 64 );
    std::vector<BitVector> batch( vectors.begin() + base, vectors.begin() + end );
    std::vector<BitVector> responses;
    for ( const auto& v : batch )
    {
      responses.push_back( session.query( v ) );
    }
    if ( !matches_responses( sim, key_words, batch, responses, locked.inputs().size(), locked.outputs().size() ) )
    {
      return false;
    }
  }
  return true;
}

std::string report_to_json( const AttackReport& report, bool include_timing )
{
  using nlohmann::ordered_json;
  ordered_json j;
  j["v"] = 1;
  j["netlist"] = report.netlist_name;
  j["key_count"] = report.key_count;
  auto& list = j["resolutions"] = ordered_json::array();
  for ( const auto& r : report.resolutions )
  {
    ordered_json e;
    e["key_index"] = r.key_index;
    e["status"] = to_string( r.status );
    e["value"] = r.value ? ordered_json( *r.value ) : ordered_json( nullptr );
    e["polarity_used"] = r.polarity_used ? ordered_json( to_string( *r.polarity_used ) ) : ordered_json( nullptr );
    e["method"] = to_string( r.method );
    if ( r.pattern )
    {
      e["pattern"] = to_string( std::span<const Logic3>( r.pattern->pi ) );
      e["detecting_pos"] = r.pattern->detecting_pos;
      e["constraints"] = r.pattern->constraints.to_string();
    }
    else
    {
      e["pattern"] = nullptr;
    }
    e["queries_used"] = r.queries_used;
    list.push_back( std::move( e ) );
  }
  j["total_queries"] = report.total_queries;
  j["total_patterns"] = report.total_patterns;
  if ( include_timing && report.wall_time )
  {
    j["wall_time"] = *report.wall_time;
  }
  return j.dump( 2 ) + "\n";
}

} // namespace faultkey
