#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace faultkey {

/// Seeded generator with portable draws. std::mt19937_64 output is fixed by
/// the standard; the distributions in <random> are not, so bounded draws are
/// done here to keep seeded artifacts identical across standard libraries.
class Rng
{
public:
  explicit Rng( std::uint64_t seed ) : engine_( seed ) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, bound). bound must be positive.
  std::uint64_t below( std::uint64_t bound )
  {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do
    {
      r = engine_();
    } while ( r >= limit );
    return r % bound;
  }

  bool bit() { return engine_() >> 63; }

  template<typename T>
  void shuffle( std::vector<T>& items )
  {
    for ( std::size_t i = items.size(); i > 1; --i )
    {
      std::swap( items[i - 1], items[below( i )] );
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace faultkey
