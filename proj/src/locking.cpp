#include "faultkey/locking.hpp"

#include "faultkey/random.hpp"
#include "faultkey/simulate.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <unordered_set>

namespace faultkey {

namespace {

constexpr std::string_view kSfllPrefix = "ll_sfll_";

/// Name-level edits on a draft with fresh-name bookkeeping.
class DraftEditor
{
public:
  explicit DraftEditor( const Netlist& netlist ) : draft_( netlist.to_draft() ), naming_( netlist.key_naming() )
  {
    for ( const auto& in : draft_.inputs )
    {
      names_.insert( in );
      if ( naming_.index_of( in ) )
      {
        ++key_count_;
      }
    }
    for ( const auto& gate : draft_.gates )
    {
      names_.insert( gate.output );
    }
  }

  std::string fresh( std::string_view prefix )
  {
    while ( true )
    {
      auto name = std::string( prefix ) + std::to_string( counter_++ );
      if ( names_.insert( name ).second )
      {
        return name;
      }
    }
  }

  /// Next unused key input; its index is the current key count.
  std::string add_key_input()
  {
    auto name = naming_.name_for( key_count_++ );
    if ( !names_.insert( name ).second )
    {
      throw LockError( "net '" + name + "' already exists and cannot become a key input" );
    }
    draft_.inputs.push_back( name );
    return name;
  }

  /// Moves the driver of `site` onto a fresh `ll_` net and returns that net.
  /// `site` is left undriven for the caller to redrive.
  std::string detach_driver( const std::string& site, std::size_t& position )
  {
    auto it = std::find_if( draft_.gates.begin(), draft_.gates.end(),
                            [&]( const auto& g ) { return g.output == site; } );
    if ( it == draft_.gates.end() )
    {
      throw LockError( "net '" + site + "' is not driven by a gate" );
    }
    auto moved = fresh( "ll_" );
    it->output = moved;
    position = static_cast<std::size_t>( it - draft_.gates.begin() ) + 1;
    return moved;
  }

  void add_gate( std::size_t position, std::string output, GateKind kind, std::vector<std::string> inputs )
  {
    draft_.gates.insert( draft_.gates.begin() + static_cast<std::ptrdiff_t>( position ),
                         { std::move( output ), kind, std::move( inputs ), 0 } );
  }

  void add_gate( std::string output, GateKind kind, std::vector<std::string> inputs )
  {
    add_gate( draft_.gates.size(), std::move( output ), kind, std::move( inputs ) );
  }

  /// `site = XOR(driver, key)` for bit 0, XNOR for bit 1. Returns the moved net.
  /// On a data input the key gate drives a fresh net that replaces the input
  /// at every reader, and that net is returned.
  std::string insert_key_gate( const std::string& site, std::uint8_t bit )
  {
    if ( std::find( draft_.inputs.begin(), draft_.inputs.end(), site ) != draft_.inputs.end() )
    {
      auto branch = fresh( "ll_" );
      for ( auto& gate : draft_.gates )
      {
        std::replace( gate.inputs.begin(), gate.inputs.end(), site, branch );
      }
      auto key = add_key_input();
      add_gate( 0, branch, bit ? GateKind::Xnor : GateKind::Xor, { site, key } );
      return branch;
    }
    std::size_t position = 0;
    auto moved = detach_driver( site, position );
    auto key = add_key_input();
    add_gate( position, site, bit ? GateKind::Xnor : GateKind::Xor, { moved, key } );
    return moved;
  }

  Netlist build() const { return Netlist::build( draft_, naming_ ); }

private:
  NetlistDraft draft_;
  KeyNaming naming_;
  std::unordered_set<std::string> names_;
  std::size_t key_count_ = 0;
  std::size_t counter_ = 0;
};

/// Nets that may receive a key gate: gate outputs outside any SFLL unit whose
/// gate reads no key input, and data inputs that are not outputs and feed
/// only gates free of key inputs.
bool eligible_site( const Netlist& n, NetId net )
{
  const auto reads_key = [&]( std::uint32_t g ) {
    const auto& inputs = n.gates()[g].inputs;
    return std::any_of( inputs.begin(), inputs.end(), [&]( NetId in ) { return n.is_key_input( in ); } );
  };
  auto g = n.driver( net );
  if ( g == Netlist::no_gate )
  {
    const auto fo = n.fanout( net );
    return !n.is_key_input( net ) && !fo.empty() && std::none_of( fo.begin(), fo.end(), reads_key ) &&
           std::find( n.outputs().begin(), n.outputs().end(), net ) == n.outputs().end();
  }
  return !n.net_name( net ).starts_with( kSfllPrefix ) && !reads_key( g );
}

/// Good-circuit values on 256 seeded random vectors under `key`, for asking
/// whether inverting a set of nets shows at an output.
class FlipProbe
{
public:
  FlipProbe( const Netlist& n, std::span<const std::uint8_t> key, std::uint64_t seed ) : n_( n ), good_( kWords )
  {
    Rng rng( seed ^ 0x9e3779b97f4a7c15ULL );
    WordSimulator sim( n );
    const auto key_words = splat_bits( key );
    for ( auto& values : good_ )
    {
      std::vector<std::uint64_t> pi( n.inputs().size() );
      for ( auto& v : pi )
      {
        v = rng.next();
      }
      sim.run( pi, key_words );
      values.resize( n.net_count() );
      for ( NetId net = 0; net < n.net_count(); ++net )
      {
        values[net] = sim.value( net );
      }
    }
  }

  /// Whether inverting every net in `flips` changes some output. Inverting a
  /// key input stands for a wrong value of that key bit.
  bool observable( std::span<const NetId> flips ) const
  {
    auto flipped = [&]( NetId net ) { return std::find( flips.begin(), flips.end(), net ) != flips.end(); };
    std::size_t first = n_.gates().size();
    for ( auto net : flips )
    {
      const auto g = n_.driver( net );
      first = std::min<std::size_t>( first, g == Netlist::no_gate ? 0 : g );
    }
    for ( const auto& good : good_ )
    {
      values_ = good;
      for ( auto net : flips )
      {
        if ( n_.driver( net ) == Netlist::no_gate )
        {
          values_[net] = ~values_[net];
        }
      }
      for ( auto g = first; g < n_.gates().size(); ++g )
      {
        const auto& gate = n_.gates()[g];
        auto v = eval_gate_word( gate.kind, gate.inputs, values_ );
        values_[gate.output] = flipped( gate.output ) ? ~v : v;
      }
      for ( auto po : n_.outputs() )
      {
        if ( values_[po] != good[po] )
        {
          return true;
        }
      }
    }
    return false;
  }

  /// A key gate on `site` would be observable together with every subset of
  /// the key gates driving `placed` (every pair once there are more than
  /// kSubsetLimit of them), so no wrong key differing there is equivalent.
  bool independent( NetId site, std::span<const NetId> placed ) const
  {
    if ( std::find( placed.begin(), placed.end(), site ) != placed.end() )
    {
      return false;
    }
    std::vector<NetId> flips{ site };
    if ( placed.size() <= kSubsetLimit )
    {
      for ( std::uint32_t mask = 0; mask < ( 1u << placed.size() ); ++mask )
      {
        flips.resize( 1 );
        for ( std::size_t j = 0; j < placed.size(); ++j )
        {
          if ( ( mask >> j ) & 1 )
          {
            flips.push_back( placed[j] );
          }
        }
        if ( !observable( flips ) )
        {
          return false;
        }
      }
      return true;
    }
    if ( !observable( flips ) )
    {
      return false;
    }
    return std::all_of( placed.begin(), placed.end(), [&]( NetId other ) {
      const NetId pair[] = { site, other };
      return observable( pair );
    } );
  }

private:
  static constexpr std::size_t kWords = 4;
  static constexpr std::size_t kSubsetLimit = 7;
  const Netlist& n_;
  std::vector<std::vector<std::uint64_t>> good_;
  mutable std::vector<std::uint64_t> values_;
};

std::vector<bool> fanout_cone( const Netlist& n, NetId root )
{
  std::vector<bool> in_cone( n.net_count(), false );
  std::vector<NetId> stack{ root };
  in_cone[root] = true;
  while ( !stack.empty() )
  {
    auto net = stack.back();
    stack.pop_back();
    for ( auto g : n.fanout( net ) )
    {
      auto out = n.gates()[g].output;
      if ( !in_cone[out] )
      {
        in_cone[out] = true;
        stack.push_back( out );
      }
    }
  }
  return in_cone;
}

/// Every net with a path into `cone` (the cone itself included).
std::vector<bool> fanin_of( const Netlist& n, const std::vector<bool>& cone )
{
  std::vector<bool> reach = cone;
  for ( auto g = n.gates().size(); g-- > 0; )
  {
    const auto& gate = n.gates()[g];
    if ( reach[gate.output] )
    {
      for ( auto in : gate.inputs )
      {
        reach[in] = true;
      }
    }
  }
  return reach;
}

void check_key( const KeyVector& key )
{
  if ( key.size() == 0 )
  {
    throw LockError( "key must have at least one bit" );
  }
}

/// Gate that consumes key input `index`; locks built here have exactly one.
NetId key_gate_output( const Netlist& n, std::size_t index )
{
  auto fo = n.fanout( n.key_inputs()[index] );
  if ( fo.empty() )
  {
    return n.key_inputs()[index];
  }
  return n.gates()[fo.front()].output;
}

} // namespace

std::string_view to_string( LockScheme scheme )
{
  switch ( scheme )
  {
  case LockScheme::Rll: return "rll";
  case LockScheme::Sll: return "sll";
  case LockScheme::SfllLite: return "sfll";
  case LockScheme::Combined: return "combined";
  }
  return "?";
}

std::optional<LockScheme> lock_scheme_from_string( std::string_view text )
{
  for ( auto s : { LockScheme::Rll, LockScheme::Sll, LockScheme::SfllLite, LockScheme::Combined } )
  {
    if ( text == to_string( s ) )
    {
      return s;
    }
  }
  return std::nullopt;
}

namespace {

/// RLL on a netlist whose existing key inputs hold `existing`. Sites whose key
/// gate would cancel against a net in `placed` are skipped as well.
Netlist rll_impl( const Netlist& netlist, const KeyVector& key, std::uint64_t seed, std::span<const std::uint8_t> existing,
                  std::vector<NetId> placed )
{
  check_key( key );
  const FlipProbe probe( netlist, existing, seed );
  std::vector<NetId> sites;
  for ( NetId net = 0; net < netlist.net_count(); ++net )
  {
    if ( eligible_site( netlist, net ) && !netlist.net_name( net ).starts_with( "ll_" ) )
    {
      sites.push_back( net );
    }
  }
  Rng rng( seed );
  rng.shuffle( sites );
  std::stable_partition( sites.begin(), sites.end(),
                         [&]( NetId net ) { return netlist.driver( net ) != Netlist::no_gate; } );
  const auto before = placed.size();
  for ( auto net : sites )
  {
    if ( placed.size() - before < key.size() && probe.independent( net, placed ) )
    {
      placed.push_back( net );
    }
  }
  if ( placed.size() - before < key.size() )
  {
    throw LockError( "key of " + std::to_string( key.size() ) + " bits exceeds the " +
                     std::to_string( placed.size() - before ) + " available insertion sites" );
  }
  DraftEditor editor( netlist );
  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    editor.insert_key_gate( netlist.net_name( placed[before + i] ), key[i] );
  }
  return editor.build();
}

} // namespace

Netlist lock_rll( const Netlist& netlist, const KeyVector& key, std::uint64_t seed )
{
  return rll_impl( netlist, key, seed, BitVector( netlist.key_inputs().size(), 0 ), {} );
}

Netlist lock_sll( const Netlist& netlist, const KeyVector& key, std::uint64_t seed )
{
  check_key( key );
  Rng rng( seed );
  DraftEditor editor( netlist );
  Netlist current = netlist;
  std::vector<std::string> placed;

  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    BitVector known( netlist.key_inputs().size(), 0 );
    known.insert( known.end(), key.bits().begin(), key.bits().begin() + static_cast<std::ptrdiff_t>( i ) );
    const FlipProbe probe( current, known, seed + i );
    std::vector<NetId> placed_ids;
    for ( const auto& name : placed )
    {
      placed_ids.push_back( *current.find_net( name ) );
    }
    std::vector<NetId> candidates;
    for ( NetId net = 0; net < current.net_count(); ++net )
    {
      if ( eligible_site( current, net ) )
      {
        candidates.push_back( net );
      }
    }
    // Preference order: the previous key gate's fanout cone, gates feeding
    // that cone, inputs feeding it, then other gates and other inputs.
    std::vector<std::vector<NetId>> tiers( 5 );
    const auto cone = placed.empty() ? std::vector<bool>( current.net_count(), false )
                                     : fanout_cone( current, placed_ids.back() );
    const auto shared = placed.empty() ? cone : fanin_of( current, cone );
    for ( auto net : candidates )
    {
      const bool gate = current.driver( net ) != Netlist::no_gate;
      tiers[cone[net] ? 0 : shared[net] ? ( gate ? 1 : 2 ) : ( gate ? 3 : 4 )].push_back( net );
    }
    std::optional<NetId> site;
    for ( auto& pool : tiers )
    {
      while ( !site && !pool.empty() )
      {
        const auto pick = rng.below( pool.size() );
        if ( probe.independent( pool[pick], placed_ids ) )
        {
          site = pool[pick];
        }
        else
        {
          pool.erase( pool.begin() + static_cast<std::ptrdiff_t>( pick ) );
        }
      }
    }
    if ( !site )
    {
      throw LockError( "no insertion site left for key bit " + std::to_string( i ) );
    }
    const auto name = current.net_name( *site );
    editor.insert_key_gate( name, key[i] );
    current = editor.build();
    placed.push_back( name );
  }
  return current;
}

namespace {

/// Data-input positions compared against the key, in ascending order.
std::vector<std::size_t> sfll_positions( std::size_t n_pi, const KeyVector& key,
                                         const std::optional<Vector3>& protected_cube, Rng& rng )
{
  std::vector<std::size_t> positions;
  if ( protected_cube )
  {
    if ( protected_cube->size() != n_pi )
    {
      throw DimensionError( "protected cube has " + std::to_string( protected_cube->size() ) + " values, circuit has " +
                            std::to_string( n_pi ) + " data inputs" );
    }
    for ( std::size_t j = 0; j < n_pi; ++j )
    {
      if ( is_known( ( *protected_cube )[j] ) )
      {
        positions.push_back( j );
      }
    }
    if ( positions.size() < key.size() )
    {
      throw LockError( "protected cube assigns fewer inputs than the key has bits" );
    }
  }
  else
  {
    positions.resize( n_pi );
    for ( std::size_t j = 0; j < n_pi; ++j )
    {
      positions[j] = j;
    }
  }
  rng.shuffle( positions );
  positions.resize( key.size() );
  std::sort( positions.begin(), positions.end() );
  if ( protected_cube )
  {
    for ( std::size_t i = 0; i < key.size(); ++i )
    {
      if ( ( *protected_cube )[positions[i]] != to_logic3( key[i] ) )
      {
        throw LockError( "key bit " + std::to_string( i ) + " disagrees with the protected cube" );
      }
    }
  }
  return positions;
}

} // namespace

Netlist lock_sfll_lite( const Netlist& netlist, const KeyVector& key, const std::optional<Vector3>& protected_cube,
                        std::uint64_t seed )
{
  check_key( key );
  const auto n_pi = netlist.inputs().size();
  if ( key.size() > n_pi )
  {
    throw LockError( "SFLL key of " + std::to_string( key.size() ) + " bits is wider than the " +
                     std::to_string( n_pi ) + " data inputs" );
  }
  Rng rng( seed );
  const auto positions = sfll_positions( n_pi, key, protected_cube, rng );

  std::vector<NetId> flippable;
  for ( auto po : netlist.outputs() )
  {
    if ( netlist.driver( po ) != Netlist::no_gate )
    {
      flippable.push_back( po );
    }
  }
  if ( flippable.empty() )
  {
    throw LockError( "no gate-driven primary output to protect" );
  }
  const auto target = netlist.net_name( flippable[rng.below( flippable.size() )] );

  DraftEditor editor( netlist );
  std::vector<std::string> literals, matches;
  for ( std::size_t i = 0; i < key.size(); ++i )
  {
    const auto& pi = netlist.net_name( netlist.inputs()[positions[i]] );
    auto literal = editor.fresh( std::string( kSfllPrefix ) + "lit" );
    editor.add_gate( literal, key[i] ? GateKind::Buf : GateKind::Not, { pi } );
    literals.push_back( literal );
    auto key_name = editor.add_key_input();
    auto match = editor.fresh( std::string( kSfllPrefix ) + "eq" );
    editor.add_gate( match, GateKind::Xnor, { pi, key_name } );
    matches.push_back( match );
  }
  auto reduce = [&]( std::vector<std::string> terms, std::string_view stem ) {
    auto out = editor.fresh( std::string( kSfllPrefix ) + std::string( stem ) );
    if ( terms.size() == 1 )
    {
      editor.add_gate( out, GateKind::Buf, std::move( terms ) );
    }
    else
    {
      editor.add_gate( out, GateKind::And, std::move( terms ) );
    }
    return out;
  };
  auto perturb = reduce( literals, "perturb" );
  auto restore = reduce( matches, "restore" );
  auto flip = editor.fresh( std::string( kSfllPrefix ) + "flip" );
  editor.add_gate( flip, GateKind::Xor, { perturb, restore } );
  std::size_t position = 0;
  auto moved = editor.detach_driver( target, position );
  editor.add_gate( target, GateKind::Xor, { moved, flip } );
  return editor.build();
}

Vector3 sfll_protected_cube( const Netlist& netlist, const KeyVector& key,
                             const std::optional<Vector3>& protected_cube, std::uint64_t seed )
{
  Rng rng( seed );
  Vector3 cube( netlist.inputs().size(), Logic3::X );
  const auto positions = sfll_positions( cube.size(), key, protected_cube, rng );
  for ( std::size_t i = 0; i < positions.size(); ++i )
  {
    cube[positions[i]] = to_logic3( key[i] );
  }
  return cube;
}

Netlist lock_combined( const Netlist& netlist, const LockSpec& spec, const KeyVector& key )
{
  if ( spec.sfll_bits > key.size() )
  {
    throw LockError( "SFLL share of " + std::to_string( spec.sfll_bits ) + " bits exceeds the key size" );
  }
  const auto& bits = key.bits();
  KeyVector sfll_key( BitVector( bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>( spec.sfll_bits ) ) );
  KeyVector rll_key( BitVector( bits.begin() + static_cast<std::ptrdiff_t>( spec.sfll_bits ), bits.end() ) );
  if ( sfll_key.size() == 0 )
  {
    return lock_rll( netlist, rll_key, spec.seed );
  }
  auto locked = lock_sfll_lite( netlist, sfll_key, spec.protected_cube, spec.seed );
  if ( rll_key.size() == 0 )
  {
    return locked;
  }
  // SFLL key bits take part in the cancellation checks as flipped key inputs.
  std::vector<NetId> placed( locked.key_inputs().end() - static_cast<std::ptrdiff_t>( sfll_key.size() ),
                             locked.key_inputs().end() );
  BitVector existing( netlist.key_inputs().size(), 0 );
  existing.insert( existing.end(), sfll_key.bits().begin(), sfll_key.bits().end() );
  return rll_impl( locked, rll_key, spec.seed, existing, placed );
}

Netlist lock( const Netlist& netlist, const LockSpec& spec, const KeyVector& key )
{
  if ( key.size() != spec.key_size )
  {
    throw LockError( "key has " + std::to_string( key.size() ) + " bits, lock spec asks for " +
                     std::to_string( spec.key_size ) );
  }
  switch ( spec.scheme )
  {
  case LockScheme::Rll: return lock_rll( netlist, key, spec.seed );
  case LockScheme::Sll: return lock_sll( netlist, key, spec.seed );
  case LockScheme::SfllLite: return lock_sfll_lite( netlist, key, spec.protected_cube, spec.seed );
  case LockScheme::Combined: return lock_combined( netlist, spec, key );
  }
  throw LockError( "unknown lock scheme" );
}

KeyVector random_key( std::size_t size, std::uint64_t seed )
{
  Rng rng( seed );
  BitVector bits( size );
  for ( auto& b : bits )
  {
    b = rng.bit();
  }
  return KeyVector( std::move( bits ) );
}

double interference_ratio( const Netlist& locked, std::size_t first, std::size_t count )
{
  if ( count < 2 )
  {
    return 1.0;
  }
  std::size_t hits = 0;
  auto previous = fanout_cone( locked, key_gate_output( locked, first ) );
  for ( std::size_t i = first + 1; i < first + count; ++i )
  {
    auto cone = fanout_cone( locked, key_gate_output( locked, i ) );
    for ( NetId net = 0; net < locked.net_count(); ++net )
    {
      if ( cone[net] && previous[net] )
      {
        ++hits;
        break;
      }
    }
    previous = std::move( cone );
  }
  return static_cast<double>( hits ) / static_cast<double>( count - 1 );
}

} // namespace faultkey
