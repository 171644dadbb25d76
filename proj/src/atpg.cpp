#include "faultkey/atpg.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>
#include <charconv>
#include <limits>
#include <mutex>
#include <thread>

namespace faultkey {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t kFar = kNone / 4;

/// Fault-independent circuit measures used by the decision heuristics.
struct CircuitMeasures
{
  std::vector<std::uint32_t> po_distance; ///< fewest gates from net to any output
  std::vector<std::uint32_t> level;       ///< longest path from an input
  std::vector<std::uint32_t> cc0, cc1;    ///< SCOAP combinational controllability

  explicit CircuitMeasures( const Netlist& n )
      : po_distance( n.net_count(), kFar ), level( n.net_count(), 0 ), cc0( n.net_count(), 1 ),
        cc1( n.net_count(), 1 )
  {
    auto sat = []( std::uint64_t v ) { return static_cast<std::uint32_t>( std::min<std::uint64_t>( v, kFar ) ); };
    for ( const auto& gate : n.gates() )
    {
      std::uint32_t lvl = 0;
      std::uint64_t min0 = kFar, min1 = kFar, sum0 = 0, sum1 = 0;
      for ( auto in : gate.inputs )
      {
        lvl = std::max( lvl, level[in] + 1 );
        min0 = std::min<std::uint64_t>( min0, cc0[in] );
        min1 = std::min<std::uint64_t>( min1, cc1[in] );
        sum0 += cc0[in];
        sum1 += cc1[in];
      }
      level[gate.output] = lvl;
      std::uint64_t c0 = 0, c1 = 0;
      switch ( gate.kind )
      {
      case GateKind::Buf: c0 = cc0[gate.inputs[0]]; c1 = cc1[gate.inputs[0]]; break;
      case GateKind::Not: c0 = cc1[gate.inputs[0]]; c1 = cc0[gate.inputs[0]]; break;
      case GateKind::And: c0 = min0; c1 = sum1; break;
      case GateKind::Nand: c0 = sum1; c1 = min0; break;
      case GateKind::Or: c0 = sum0; c1 = min1; break;
      case GateKind::Nor: c0 = min1; c1 = sum0; break;
      case GateKind::Xor:
      case GateKind::Xnor: {
        auto a = gate.inputs[0], b = gate.inputs[1];
        std::uint64_t same = std::min<std::uint64_t>( cc0[a] + cc0[b], cc1[a] + cc1[b] );
        std::uint64_t diff = std::min<std::uint64_t>( cc0[a] + cc1[b], cc1[a] + cc0[b] );
        c0 = gate.kind == GateKind::Xor ? same : diff;
        c1 = gate.kind == GateKind::Xor ? diff : same;
        break;
      }
      }
      cc0[gate.output] = sat( c0 + 1 );
      cc1[gate.output] = sat( c1 + 1 );
    }
    for ( auto po : n.outputs() )
    {
      po_distance[po] = 0;
    }
    for ( auto g = n.gates().size(); g-- > 0; )
    {
      const auto& gate = n.gates()[g];
      if ( po_distance[gate.output] == kFar )
      {
        continue;
      }
      for ( auto in : gate.inputs )
      {
        po_distance[in] = std::min( po_distance[in], po_distance[gate.output] + 1 );
      }
    }
  }
};

struct SearchAborted
{
};

enum class Mode : std::uint8_t { GateLevel, InputLevel };

/// One gate evaluated in one circuit copy.
struct Instance
{
  GateKind kind;
  std::uint32_t gate;
  std::uint32_t out;
  std::uint32_t first_in;
  std::uint32_t n_in;
};

/// Search state for one fault. Variables 0..N-1 hold good-circuit values of
/// every net; N + n holds the faulty value of a net n in the fault's fanout
/// cone. Nets outside the cone have a single shared variable.
class Search
{
public:
  Search( const Netlist& n, const CircuitMeasures& m, const FaultSpec& fault, const InjectionMap& constraints,
          std::uint64_t limit )
      : n_( n ), m_( m ), fault_( fault ), limit_( limit ), N_( static_cast<std::uint32_t>( n.net_count() ) )
  {
    site_ = n.key_inputs()[fault.key_index];
    in_cone_.assign( N_, false );
    in_cone_[site_] = true;
    cone_nets_.push_back( site_ );
    for ( const auto& gate : n.gates() )
    {
      if ( std::any_of( gate.inputs.begin(), gate.inputs.end(), [&]( NetId in ) { return in_cone_[in]; } ) )
      {
        in_cone_[gate.output] = true;
        cone_nets_.push_back( gate.output );
      }
    }

    values_.assign( 2 * N_, Logic3::X );
    driver_.assign( 2 * N_, kNone );
    std::vector<std::uint32_t> fo_count( 2 * N_ + 1, 0 );
    for ( std::uint32_t g = 0; g < n.gates().size(); ++g )
    {
      const auto& gate = n.gates()[g];
      add_instance( gate, g, false );
      if ( in_cone_[gate.output] )
      {
        add_instance( gate, g, true );
      }
    }
    for ( const auto& inst : instances_ )
    {
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        ++fo_count[in_vars_[inst.first_in + k] + 1];
      }
    }
    for ( std::size_t v = 1; v < fo_count.size(); ++v )
    {
      fo_count[v] += fo_count[v - 1];
    }
    fo_offsets_ = fo_count;
    fo_instances_.resize( fo_count.back() );
    for ( std::uint32_t i = 0; i < instances_.size(); ++i )
    {
      const auto& inst = instances_[i];
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        fo_instances_[fo_count[in_vars_[inst.first_in + k]]++] = i;
      }
    }
    stamp_.assign( n.gates().size(), 0 );
    open_reach_.assign( N_, false );

    for ( const auto& [index, value] : constraints.entries() )
    {
      if ( index != fault.key_index )
      {
        initial_.emplace_back( n.key_inputs()[index], to_logic3( value ) );
      }
    }
    const auto stuck = stuck_value( fault.polarity );
    initial_.emplace_back( site_, to_logic3( !stuck ) );
    initial_.emplace_back( N_ + site_, to_logic3( stuck ) );
  }

  /// Gate-level search on the first half of the backtrack budget, then
  /// input-level search on the rest. Each is complete, so either one
  /// exhausting its space proves the fault untestable.
  AtpgResult run()
  {
    AtpgResult result;
    result.status = AtpgStatus::Aborted;
    const auto budget = limit_;
    for ( const auto mode : { Mode::GateLevel, Mode::InputLevel } )
    {
      mode_ = mode;
      limit_ = mode == Mode::GateLevel ? budget / 2 : budget;
      undo( 0 );
      try
      {
        bool ok = true;
        for ( auto [var, value] : initial_ )
        {
          ok = ok && assign( var, value );
        }
        ok = ok && propagate();
        if ( ok && solve() )
        {
          result.status = AtpgStatus::Detected;
          result.pattern = extract();
        }
        else
        {
          result.status = AtpgStatus::Untestable;
        }
        break;
      }
      catch ( const SearchAborted& )
      {
      }
    }
    result.backtracks = backtracks_;
    return result;
  }

private:
  std::uint32_t faulty_var( NetId net ) const { return in_cone_[net] ? N_ + net : net; }

  void add_instance( const Gate& gate, std::uint32_t g, bool faulty )
  {
    Instance inst{ gate.kind, g, faulty ? N_ + gate.output : gate.output, static_cast<std::uint32_t>( in_vars_.size() ),
                   static_cast<std::uint32_t>( gate.inputs.size() ) };
    for ( auto in : gate.inputs )
    {
      in_vars_.push_back( faulty ? faulty_var( in ) : in );
    }
    driver_[inst.out] = static_cast<std::uint32_t>( instances_.size() );
    instances_.push_back( inst );
  }

  bool assign( std::uint32_t var, Logic3 value )
  {
    auto current = values_[var];
    if ( current == value )
    {
      return true;
    }
    if ( current != Logic3::X )
    {
      return false;
    }
    values_[var] = value;
    trail_.push_back( var );
    if ( driver_[var] != kNone )
    {
      queue_.push_back( driver_[var] );
    }
    for ( auto k = fo_offsets_[var]; k < fo_offsets_[var + 1]; ++k )
    {
      queue_.push_back( fo_instances_[k] );
    }
    return true;
  }

  bool propagate()
  {
    while ( !queue_.empty() )
    {
      auto i = queue_.back();
      queue_.pop_back();
      if ( !imply( instances_[i] ) )
      {
        queue_.clear();
        return false;
      }
    }
    return true;
  }

  /// Forward value of an instance from its current inputs.
  Logic3 forward( const Instance& inst ) const
  {
    const auto* in = &in_vars_[inst.first_in];
    switch ( inst.kind )
    {
    case GateKind::Buf: return values_[in[0]];
    case GateKind::Not: return !values_[in[0]];
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool parity = inst.kind == GateKind::Xnor;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        auto v = values_[in[k]];
        if ( v == Logic3::X )
        {
          return Logic3::X;
        }
        parity ^= v == Logic3::One;
      }
      return to_logic3( parity );
    }
    default: {
      const bool and_like = inst.kind == GateKind::And || inst.kind == GateKind::Nand;
      const bool inverted = inst.kind == GateKind::Nand || inst.kind == GateKind::Nor;
      const Logic3 c = and_like ? Logic3::Zero : Logic3::One;
      bool unknown = false;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        auto v = values_[in[k]];
        if ( v == c )
        {
          return inverted ? !c : c;
        }
        unknown |= v == Logic3::X;
      }
      if ( unknown )
      {
        return Logic3::X;
      }
      return inverted ? c : !c;
    }
    }
  }

  bool imply( const Instance& inst )
  {
    const auto fwd = forward( inst );
    const auto out = values_[inst.out];
    if ( fwd != Logic3::X )
    {
      return assign( inst.out, fwd );
    }
    if ( out == Logic3::X )
    {
      return true;
    }
    const auto* in = &in_vars_[inst.first_in];
    switch ( inst.kind )
    {
    case GateKind::Buf: return assign( in[0], out );
    case GateKind::Not: return assign( in[0], !out );
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool parity = ( inst.kind == GateKind::Xnor ) ^ ( out == Logic3::One );
      std::uint32_t unknown = kNone, n_unknown = 0;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        auto v = values_[in[k]];
        if ( v == Logic3::X )
        {
          unknown = in[k];
          ++n_unknown;
        }
        else
        {
          parity ^= v == Logic3::One;
        }
      }
      return n_unknown == 1 ? assign( unknown, to_logic3( parity ) ) : true;
    }
    default: {
      const bool and_like = inst.kind == GateKind::And || inst.kind == GateKind::Nand;
      const bool inverted = inst.kind == GateKind::Nand || inst.kind == GateKind::Nor;
      const Logic3 c = and_like ? Logic3::Zero : Logic3::One;
      const Logic3 core = inverted ? !out : out;
      if ( core == !c )
      {
        for ( std::uint32_t k = 0; k < inst.n_in; ++k )
        {
          if ( !assign( in[k], !c ) )
          {
            return false;
          }
        }
        return true;
      }
      std::uint32_t unknown = kNone, n_unknown = 0;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        if ( values_[in[k]] == Logic3::X )
        {
          unknown = in[k];
          ++n_unknown;
        }
      }
      return n_unknown == 1 ? assign( unknown, c ) : true;
    }
    }
  }

  bool is_effect( NetId net ) const
  {
    if ( !in_cone_[net] )
    {
      return false;
    }
    auto g = values_[net], f = values_[N_ + net];
    return g != Logic3::X && f != Logic3::X && g != f;
  }

  /// Net can still end up carrying a fault effect.
  bool open( NetId net ) const
  {
    auto g = values_[net], f = values_[faulty_var( net )];
    return in_cone_[net] && !( g != Logic3::X && f != Logic3::X && g == f );
  }

  bool output_has_effect() const
  {
    return std::any_of( n_.outputs().begin(), n_.outputs().end(), [&]( NetId po ) { return is_effect( po ); } );
  }

  std::uint32_t pick_unjustified() const
  {
    std::uint32_t best = kNone;
    std::uint32_t best_level = 0;
    for ( auto var : trail_ )
    {
      auto i = driver_[var];
      if ( i == kNone || forward( instances_[i] ) != Logic3::X )
      {
        continue;
      }
      auto lvl = m_.level[n_.gates()[instances_[i].gate].output];
      if ( best == kNone || lvl > best_level || ( lvl == best_level && i < best ) )
      {
        best = i;
        best_level = lvl;
      }
    }
    return best;
  }

  /// D-frontier gates whose output has an open path to some output, nearest first.
  std::vector<std::uint32_t> usable_frontier()
  {
    for ( auto it = cone_nets_.rbegin(); it != cone_nets_.rend(); ++it )
    {
      auto net = *it;
      bool reach = false;
      if ( open( net ) )
      {
        reach = m_.po_distance[net] == 0;
        for ( auto g : n_.fanout( net ) )
        {
          if ( reach )
          {
            break;
          }
          reach = open_reach_[n_.gates()[g].output];
        }
      }
      open_reach_[net] = reach;
    }

    ++epoch_;
    std::vector<std::uint32_t> frontier;
    for ( auto net : cone_nets_ )
    {
      if ( !is_effect( net ) )
      {
        continue;
      }
      for ( auto g : n_.fanout( net ) )
      {
        auto out = n_.gates()[g].output;
        if ( stamp_[g] == epoch_ )
        {
          continue;
        }
        stamp_[g] = epoch_;
        if ( values_[out] != Logic3::X && values_[N_ + out] != Logic3::X )
        {
          continue;
        }
        if ( open_reach_[out] )
        {
          frontier.push_back( g );
        }
      }
    }
    std::sort( frontier.begin(), frontier.end(), [&]( auto a, auto b ) {
      auto da = m_.po_distance[n_.gates()[a].output], db = m_.po_distance[n_.gates()[b].output];
      return da != db ? da < db : a < b;
    } );
    return frontier;
  }

  void undo( std::size_t mark )
  {
    while ( trail_.size() > mark )
    {
      values_[trail_.back()] = Logic3::X;
      trail_.pop_back();
    }
    queue_.clear();
  }

  void count_backtrack()
  {
    if ( ++backtracks_ > limit_ )
    {
      throw SearchAborted{};
    }
  }

  bool try_assignments( std::initializer_list<std::pair<std::uint32_t, Logic3>> assignments )
  {
    const auto mark = trail_.size();
    bool ok = true;
    for ( auto [var, value] : assignments )
    {
      ok = ok && assign( var, value );
    }
    if ( ok && propagate() && solve() )
    {
      return true;
    }
    undo( mark );
    count_backtrack();
    return false;
  }

  bool solve() { return mode_ == Mode::GateLevel ? solve_gate_level() : solve_input_level(); }

  /// Drives the fault effect through the D-frontier, then justifies the
  /// assigned gate values one gate at a time.
  bool solve_gate_level()
  {
    if ( output_has_effect() )
    {
      auto j = pick_unjustified();
      if ( j == kNone )
      {
        return true;
      }
      return justify( instances_[j] );
    }
    for ( auto g : usable_frontier() )
    {
      auto out = n_.gates()[g].output;
      if ( try_assignments( { { out, Logic3::Zero }, { N_ + out, Logic3::One } } ) ||
           try_assignments( { { out, Logic3::One }, { N_ + out, Logic3::Zero } } ) )
      {
        return true;
      }
    }
    return false;
  }

  /// Decides data inputs only: a side input of the nearest D-frontier gate is
  /// traced back to an unassigned data input, which is tried at the traced
  /// value and then its complement.
  bool solve_input_level()
  {
    if ( output_has_effect() && pick_unjustified() == kNone )
    {
      return true;
    }
    auto frontier = usable_frontier();
    if ( frontier.empty() )
    {
      return false;
    }
    const auto& gate = n_.gates()[frontier.front()];
    const Logic3 want =
        gate.kind == GateKind::And || gate.kind == GateKind::Nand ? Logic3::One : Logic3::Zero;
    for ( const bool faulty : { false, true } )
    {
      for ( auto in : gate.inputs )
      {
        auto var = faulty ? faulty_var( in ) : in;
        if ( values_[var] == Logic3::X )
        {
          return branch_on_input( var, want );
        }
      }
    }
    return false;
  }

  bool branch_on_input( std::uint32_t var, Logic3 want )
  {
    while ( driver_[var] != kNone )
    {
      std::tie( var, want ) = objective_input( instances_[driver_[var]], want );
    }
    return try_assignments( { { var, want } } ) || try_assignments( { { var, !want } } );
  }

  bool justify( const Instance& inst )
  {
    std::vector<std::uint32_t> unknown;
    for ( std::uint32_t k = 0; k < inst.n_in; ++k )
    {
      if ( values_[in_vars_[inst.first_in + k]] == Logic3::X )
      {
        unknown.push_back( in_vars_[inst.first_in + k] );
      }
    }
    if ( inst.kind == GateKind::Xor || inst.kind == GateKind::Xnor )
    {
      return try_assignments( { { unknown.front(), Logic3::Zero } } ) ||
             try_assignments( { { unknown.front(), Logic3::One } } );
    }
    const bool and_like = inst.kind == GateKind::And || inst.kind == GateKind::Nand;
    const Logic3 c = and_like ? Logic3::Zero : Logic3::One;
    std::stable_sort( unknown.begin(), unknown.end(),
                      [&]( auto a, auto b ) { return cost( a, c ) < cost( b, c ); } );
    for ( auto var : unknown )
    {
      if ( try_assignments( { { var, c } } ) )
      {
        return true;
      }
    }
    return false;
  }

  std::uint32_t cost( std::uint32_t var, Logic3 value ) const
  {
    auto net = var >= N_ ? var - N_ : var;
    return value == Logic3::Zero ? m_.cc0[net] : m_.cc1[net];
  }

  /// Input of `inst` to set, and its value, towards output value `want`.
  std::pair<std::uint32_t, Logic3> objective_input( const Instance& inst, Logic3 want ) const
  {
    const auto* in = &in_vars_[inst.first_in];
    switch ( inst.kind )
    {
    case GateKind::Buf: return { in[0], want };
    case GateKind::Not: return { in[0], !want };
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool parity = ( inst.kind == GateKind::Xnor ) ^ ( want == Logic3::One );
      std::uint32_t first = kNone, n_unknown = 0;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        auto v = values_[in[k]];
        if ( v == Logic3::X )
        {
          first = first == kNone ? in[k] : first;
          ++n_unknown;
        }
        else
        {
          parity ^= v == Logic3::One;
        }
      }
      if ( n_unknown == 1 )
      {
        return { first, to_logic3( parity ) };
      }
      return { first, cost( first, Logic3::Zero ) <= cost( first, Logic3::One ) ? Logic3::Zero : Logic3::One };
    }
    default: {
      const bool and_like = inst.kind == GateKind::And || inst.kind == GateKind::Nand;
      const bool inverted = inst.kind == GateKind::Nand || inst.kind == GateKind::Nor;
      const Logic3 c = and_like ? Logic3::Zero : Logic3::One;
      const Logic3 core = inverted ? !want : want;
      const Logic3 target = core == c ? c : !c;
      std::uint32_t best = kNone;
      for ( std::uint32_t k = 0; k < inst.n_in; ++k )
      {
        if ( values_[in[k]] != Logic3::X )
        {
          continue;
        }
        // Easiest input when one suffices, hardest when all are needed.
        if ( best == kNone || ( core == c ? cost( in[k], target ) < cost( best, target )
                                          : cost( in[k], target ) > cost( best, target ) ) )
        {
          best = in[k];
        }
      }
      return { best, target };
    }
    }
  }

  Pattern extract() const
  {
    Pattern p;
    p.key_index = fault_.key_index;
    p.polarity = fault_.polarity;
    for ( auto in : n_.inputs() )
    {
      p.pi.push_back( values_[in] );
    }
    for ( std::size_t o = 0; o < n_.outputs().size(); ++o )
    {
      if ( is_effect( n_.outputs()[o] ) )
      {
        p.detecting_pos.push_back( o );
      }
    }
    return p;
  }

  const Netlist& n_;
  const CircuitMeasures& m_;
  FaultSpec fault_;
  std::uint64_t limit_;
  std::uint32_t N_;
  NetId site_ = 0;
  std::vector<bool> in_cone_;
  std::vector<NetId> cone_nets_;
  std::vector<Logic3> values_;
  std::vector<Instance> instances_;
  std::vector<std::uint32_t> in_vars_;
  std::vector<std::uint32_t> driver_;
  std::vector<std::uint32_t> fo_offsets_;
  std::vector<std::uint32_t> fo_instances_;
  std::vector<std::uint32_t> trail_;
  std::vector<std::uint32_t> queue_;
  std::vector<std::pair<std::uint32_t, Logic3>> initial_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<bool> open_reach_;
  std::uint64_t backtracks_ = 0;
  Mode mode_ = Mode::GateLevel;
};

AtpgResult run_d_algorithm( const Netlist& netlist, const CircuitMeasures& measures, const FaultSpec& fault,
                            const InjectionMap& constraints, const AtpgOptions& options )
{
  const auto key_count = netlist.key_inputs().size();
  if ( fault.key_index >= key_count )
  {
    throw DimensionError( "fault on key index " + std::to_string( fault.key_index ) + " but circuit has " +
                          std::to_string( key_count ) + " key inputs" );
  }
  constraints.check( key_count );
  if ( auto pinned = constraints.at( fault.key_index ); pinned && *pinned == stuck_value( fault.polarity ) )
  {
    throw ActivationConflict( "key line " + std::to_string( fault.key_index ) + " is constrained to its stuck value" );
  }
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    if ( i != fault.key_index && !constraints.contains( i ) )
    {
      throw Error( "key line " + std::to_string( i ) + " has no constraint" );
    }
  }
  Search search( netlist, measures, fault, constraints, options.backtrack_limit );
  auto result = search.run();
  if ( result.pattern )
  {
    result.pattern->constraints = constraints;
    result.pattern->constraints.release( fault.key_index );
  }
  return result;
}

} // namespace

InjectionMap standard_constraints( std::size_t key_count, const FaultSpec& fault )
{
  return InjectionMap::all_except( key_count, fault.key_index, stuck_value( fault.polarity ) );
}

std::string_view to_string( AtpgStatus status )
{
  switch ( status )
  {
  case AtpgStatus::Detected: return "detected";
  case AtpgStatus::Untestable: return "untestable";
  case AtpgStatus::Aborted: return "aborted";
  }
  return "?";
}

AtpgResult d_algorithm( const Netlist& netlist, const FaultSpec& fault, const InjectionMap& constraints,
                        const AtpgOptions& options )
{
  CircuitMeasures measures( netlist );
  return run_d_algorithm( netlist, measures, fault, constraints, options );
}

const Pattern* PatternSet::find( std::size_t key_index ) const
{
  auto it = std::find_if( patterns.begin(), patterns.end(), [&]( const auto& p ) { return p.key_index == key_index; } );
  return it == patterns.end() ? nullptr : &*it;
}

PatternSet generate_pattern_set( const Netlist& locked, Polarity polarity, const PatternSetOptions& options )
{
  const auto key_count = locked.key_inputs().size();
  const CircuitMeasures measures( locked );

  struct Slot
  {
    std::optional<Pattern> pattern;
    KeyTestStatus status = KeyTestStatus::Unresolved;
    bool aborted = false;
  };
  std::vector<Slot> slots( key_count );

  auto work = [&]( std::size_t i ) {
    auto& slot = slots[i];
    FaultSpec fault{ i, polarity };
    auto r = run_d_algorithm( locked, measures, fault, standard_constraints( key_count, fault ), options.atpg );
    slot.aborted = r.status == AtpgStatus::Aborted;
    if ( r.pattern )
    {
      slot.pattern = std::move( r.pattern );
      slot.status = KeyTestStatus::Primary;
      return;
    }
    if ( !options.fallback )
    {
      return;
    }
    FaultSpec flipped{ i, opposite( polarity ) };
    r = run_d_algorithm( locked, measures, flipped, standard_constraints( key_count, flipped ), options.atpg );
    slot.aborted |= r.status == AtpgStatus::Aborted;
    if ( r.pattern )
    {
      slot.pattern = std::move( r.pattern );
      slot.status = KeyTestStatus::Fallback;
    }
  };

  const unsigned threads = std::max( 1u, std::min<unsigned>( options.threads, static_cast<unsigned>( key_count ) ) );
  if ( threads <= 1 )
  {
    for ( std::size_t i = 0; i < key_count; ++i )
    {
      work( i );
    }
  }
  else
  {
    std::mutex mutex;
    std::size_t next = 0;
    std::vector<std::jthread> pool;
    for ( unsigned t = 0; t < threads; ++t )
    {
      pool.emplace_back( [&] {
        while ( true )
        {
          std::size_t i;
          {
            std::lock_guard lock( mutex );
            if ( next >= key_count )
            {
              return;
            }
            i = next++;
          }
          work( i );
        }
      } );
    }
  }

  PatternSet set;
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    set.status.push_back( slots[i].status );
    if ( slots[i].aborted )
    {
      set.aborted.push_back( i );
    }
    if ( slots[i].pattern )
    {
      set.patterns.push_back( std::move( *slots[i].pattern ) );
    }
    else
    {
      set.unresolved.push_back( i );
    }
  }
  return set;
}

bool verify_pattern( const Netlist& locked, const Pattern& p, std::size_t exhaustive_limit )
{
  const auto key_count = locked.key_inputs().size();
  if ( p.key_index >= key_count || p.pi.size() != locked.inputs().size() || p.detecting_pos.empty() )
  {
    return false;
  }
  for ( auto o : p.detecting_pos )
  {
    if ( o >= locked.outputs().size() )
    {
      return false;
    }
  }
  Vector3 key( key_count, Logic3::X );
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    if ( i == p.key_index )
    {
      continue;
    }
    auto c = p.constraints.at( i );
    if ( !c )
    {
      return false;
    }
    key[i] = to_logic3( *c );
  }

  auto key0 = key, key1 = key;
  key0[p.key_index] = Logic3::Zero;
  key1[p.key_index] = Logic3::One;
  auto r0 = simulate3( locked, p.pi, key0 );
  auto r1 = simulate3( locked, p.pi, key1 );
  const bool certified = std::all_of( p.detecting_pos.begin(), p.detecting_pos.end(), [&]( std::size_t o ) {
    return is_known( r0[o] ) && is_known( r1[o] ) && r0[o] != r1[o];
  } );
  if ( certified )
  {
    return true;
  }
  // A known, equal pair at a detecting output fails every completion.
  for ( auto o : p.detecting_pos )
  {
    if ( is_known( r0[o] ) && is_known( r1[o] ) && r0[o] == r1[o] )
    {
      return false;
    }
  }

  std::vector<std::size_t> free;
  for ( std::size_t j = 0; j < p.pi.size(); ++j )
  {
    if ( !is_known( p.pi[j] ) )
    {
      free.push_back( j );
    }
  }
  if ( free.size() > exhaustive_limit )
  {
    return false;
  }

  BitVector key_bits0( key_count ), key_bits1( key_count );
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    key_bits0[i] = i == p.key_index ? 0 : *p.constraints.at( i );
    key_bits1[i] = i == p.key_index ? 1 : *p.constraints.at( i );
  }
  const auto kw0 = splat_bits( key_bits0 ), kw1 = splat_bits( key_bits1 );
  WordSimulator s0( locked ), s1( locked );
  std::vector<std::uint64_t> pi( p.pi.size() );
  const std::uint64_t total = std::uint64_t{ 1 } << free.size();
  for ( std::uint64_t base = 0; base < total; base += 64 )
  {
    const std::uint64_t lanes = std::min<std::uint64_t>( 64, total - base );
    const std::uint64_t mask = lanes == 64 ? ~std::uint64_t{ 0 } : ( std::uint64_t{ 1 } << lanes ) - 1;
    for ( std::size_t j = 0; j < p.pi.size(); ++j )
    {
      pi[j] = p.pi[j] == Logic3::One ? ~std::uint64_t{ 0 } : 0;
    }
    for ( std::size_t f = 0; f < free.size(); ++f )
    {
      std::uint64_t w = 0;
      for ( std::uint64_t l = 0; l < lanes; ++l )
      {
        w |= ( ( ( base + l ) >> f ) & 1 ) << l;
      }
      pi[free[f]] = w;
    }
    s0.run( pi, kw0 );
    s1.run( pi, kw1 );
    for ( auto o : p.detecting_pos )
    {
      if ( ~( s0.output( o ) ^ s1.output( o ) ) & mask )
      {
        return false;
      }
    }
  }
  return true;
}

std::string write_pattern_file( const Netlist& locked, const PatternSet& set )
{
  std::string out = std::to_string( locked.inputs().size() ) + " " + std::to_string( locked.outputs().size() ) + " " +
                    std::to_string( locked.key_inputs().size() ) + " " + locked.name() + "\n";
  for ( const auto& p : set.patterns )
  {
    out += "P " + std::to_string( p.key_index ) + " " + std::string( to_string( p.polarity ) ) + " " +
           to_string( std::span<const Logic3>( p.pi ) ) + " ";
    for ( std::size_t k = 0; k < p.detecting_pos.size(); ++k )
    {
      out += ( k ? "," : "" ) + std::to_string( p.detecting_pos[k] );
    }
    out += "\n";
  }
  if ( !set.unresolved.empty() )
  {
    out += "# unresolved";
    for ( auto i : set.unresolved )
    {
      out += " " + std::to_string( i );
    }
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string_view> split_ws( std::string_view line )
{
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while ( pos < line.size() )
  {
    while ( pos < line.size() && std::isspace( static_cast<unsigned char>( line[pos] ) ) )
    {
      ++pos;
    }
    auto start = pos;
    while ( pos < line.size() && !std::isspace( static_cast<unsigned char>( line[pos] ) ) )
    {
      ++pos;
    }
    if ( pos > start )
    {
      out.push_back( line.substr( start, pos - start ) );
    }
  }
  return out;
}

std::size_t parse_index( std::string_view text, std::size_t line, const char* what )
{
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars( text.data(), text.data() + text.size(), value );
  if ( ec != std::errc() || ptr != text.data() + text.size() )
  {
    throw ParseError( std::string( "pattern file: bad " ) + what + " '" + std::string( text ) + "'", line );
  }
  return value;
}

} // namespace

PatternSet read_pattern_file( std::string_view text, const Netlist& locked )
{
  const auto key_count = locked.key_inputs().size();
  PatternSet set;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<bool> seen( key_count, false );
  std::size_t pos = 0;
  while ( pos < text.size() )
  {
    auto end = text.find( '\n', pos );
    if ( end == std::string_view::npos )
    {
      end = text.size();
    }
    auto line = text.substr( pos, end - pos );
    pos = end + 1;
    ++line_no;
    auto fields = split_ws( line );
    if ( fields.empty() || fields.front().starts_with( "#" ) )
    {
      continue;
    }
    if ( !header )
    {
      if ( fields.size() != 4 )
      {
        throw ParseError( "pattern file: header must be '|PI| |PO| |K| <name>'", line_no );
      }
      if ( parse_index( fields[0], line_no, "|PI|" ) != locked.inputs().size() ||
           parse_index( fields[1], line_no, "|PO|" ) != locked.outputs().size() ||
           parse_index( fields[2], line_no, "|K|" ) != key_count )
      {
        throw ParseError( "pattern file: header dimensions do not match the netlist", line_no );
      }
      header = true;
      continue;
    }
    if ( fields.size() != 5 || fields[0] != "P" )
    {
      throw ParseError( "pattern file: expected 'P <key> <sa1|sa0> <bits> <pos>'", line_no );
    }
    Pattern p;
    p.key_index = parse_index( fields[1], line_no, "key index" );
    if ( p.key_index >= key_count || seen[p.key_index] )
    {
      throw ParseError( "pattern file: key index out of range or repeated", line_no );
    }
    seen[p.key_index] = true;
    auto pol = polarity_from_string( fields[2] );
    if ( !pol )
    {
      throw ParseError( "pattern file: polarity must be sa1 or sa0", line_no );
    }
    p.polarity = *pol;
    try
    {
      p.pi = parse_vector3( fields[3] );
    }
    catch ( const ParseError& e )
    {
      throw ParseError( std::string( "pattern file: " ) + e.what(), line_no );
    }
    if ( p.pi.size() != locked.inputs().size() )
    {
      throw ParseError( "pattern file: pattern width does not match |PI|", line_no );
    }
    std::size_t start = 0;
    auto pos_text = fields[4];
    while ( true )
    {
      auto comma = pos_text.find( ',', start );
      auto item = pos_text.substr( start, comma == std::string_view::npos ? std::string_view::npos : comma - start );
      auto o = parse_index( item, line_no, "output index" );
      if ( o >= locked.outputs().size() )
      {
        throw ParseError( "pattern file: output index out of range", line_no );
      }
      p.detecting_pos.push_back( o );
      if ( comma == std::string_view::npos )
      {
        break;
      }
      start = comma + 1;
    }
    p.constraints = standard_constraints( key_count, { p.key_index, p.polarity } );
    set.patterns.push_back( std::move( p ) );
  }
  if ( !header )
  {
    throw ParseError( "pattern file: missing header" );
  }
  std::sort( set.patterns.begin(), set.patterns.end(),
             []( const auto& a, const auto& b ) { return a.key_index < b.key_index; } );
  set.status.assign( key_count, KeyTestStatus::Unresolved );
  for ( const auto& p : set.patterns )
  {
    set.status[p.key_index] = KeyTestStatus::Primary;
  }
  for ( std::size_t i = 0; i < key_count; ++i )
  {
    if ( !seen[i] )
    {
      set.unresolved.push_back( i );
    }
  }
  return set;
}

} // namespace faultkey
