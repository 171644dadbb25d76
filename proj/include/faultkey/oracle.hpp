#pragma once

#include "faultkey/logic.hpp"
#include "faultkey/netlist.hpp"
#include "faultkey/simulate.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace faultkey {

/// Interface dimensions of the chip behind an oracle.
struct OracleShape
{
  std::string name;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::size_t keys = 0;

  bool operator==( const OracleShape& ) const = default;
};

OracleShape shape_of( const Netlist& netlist );

struct TranscriptRecord
{
  std::uint64_t session_id = 0;
  InjectionMap injection;
  BitVector pi;
  BitVector po;

  bool operator==( const TranscriptRecord& ) const = default;
};

/// Every query answered by an oracle, in order.
struct Transcript
{
  OracleShape shape;
  std::vector<TranscriptRecord> records;

  /// Header `|PI| |PO| |K| <name>`, then `<session> <injection> <pi> <po>` per record.
  std::string to_text() const;
  /// Throws ParseError on malformed text or records that disagree with the header.
  static Transcript parse( std::string_view text );

  bool operator==( const Transcript& ) const = default;
};

/// X positions become `fill`.
BitVector fill_x( std::span<const Logic3> values, std::uint8_t fill = 0 );

class Oracle;

/// One fault-injection configuration held fixed for a run of queries.
class OracleSession
{
public:
  std::uint64_t id() const { return id_; }
  const InjectionMap& injection() const { return injection_; }
  std::uint64_t query_count() const { return queries_; }

  /// Applies one fully specified input vector; throws DimensionError on a
  /// width mismatch and Error on a value other than 0/1.
  BitVector query( std::span<const std::uint8_t> pi );

private:
  friend class Oracle;
  OracleSession( Oracle& oracle, std::uint64_t id, InjectionMap injection )
      : oracle_( &oracle ), id_( id ), injection_( std::move( injection ) )
  {
  }

  Oracle* oracle_;
  std::uint64_t id_;
  InjectionMap injection_;
  std::uint64_t queries_ = 0;
};

/// Black-box chip that answers queries under injected key-line faults.
/// Counts queries and records a transcript; subclasses only produce outputs.
class Oracle
{
public:
  explicit Oracle( OracleShape shape ) : shape_( std::move( shape ) ) { transcript_.shape = shape_; }
  virtual ~Oracle() = default;
  Oracle( const Oracle& ) = delete;
  Oracle& operator=( const Oracle& ) = delete;

  const OracleShape& shape() const { return shape_; }

  /// Throws DimensionError when an injected index is not a key line.
  OracleSession open_session( const InjectionMap& injection );

  std::uint64_t total_queries() const;
  std::uint64_t session_count() const;
  Transcript transcript() const;

protected:
  virtual BitVector respond( const InjectionMap& injection, std::span<const std::uint8_t> pi ) = 0;

private:
  friend class OracleSession;
  BitVector answer( OracleSession& session, std::span<const std::uint8_t> pi );

  OracleShape shape_;
  mutable std::mutex mutex_;
  std::uint64_t next_session_ = 0;
  std::uint64_t queries_ = 0;
  Transcript transcript_;
};

/// Simulated chip: the locked netlist with its hidden key sealed inside.
class SimulatedOracle final : public Oracle
{
public:
  /// Throws DimensionError when the key width differs from the key inputs.
  SimulatedOracle( Netlist locked, KeyVector hidden_key );

  /// Reads a `.bench` netlist and a key sidecar.
  static std::unique_ptr<SimulatedOracle> from_files( const std::string& bench_path, const std::string& key_path,
                                                      const KeyNaming& naming = {} );

protected:
  BitVector respond( const InjectionMap& injection, std::span<const std::uint8_t> pi ) override;

private:
  Netlist netlist_;
  KeyVector hidden_key_;
};

/// Answers from a recorded transcript; throws ReplayMiss for a query whose
/// (injection, input) pair was never recorded.
class ReplayOracle final : public Oracle
{
public:
  explicit ReplayOracle( const Transcript& recorded );

protected:
  BitVector respond( const InjectionMap& injection, std::span<const std::uint8_t> pi ) override;

private:
  std::map<std::pair<std::string, std::string>, BitVector> answers_;
};

} // namespace faultkey
