#include "faultkey/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace faultkey {

namespace {

bool is_name_char( char c )
{
  return !std::isspace( static_cast<unsigned char>( c ) ) && c != '(' && c != ')' && c != ',' && c != '=' && c != '#';
}

bool iequals( std::string_view a, std::string_view b )
{
  return a.size() == b.size() && std::equal( a.begin(), a.end(), b.begin(), []( char x, char y ) {
           return std::toupper( static_cast<unsigned char>( x ) ) == std::toupper( static_cast<unsigned char>( y ) );
         } );
}

/// Single-line scanner with 1-based column tracking.
class LineScanner
{
public:
  LineScanner( std::string_view text, std::size_t line ) : text_( text ), line_( line ) {}

  void skip_space()
  {
    while ( pos_ < text_.size() && std::isspace( static_cast<unsigned char>( text_[pos_] ) ) )
    {
      ++pos_;
    }
  }

  bool at_end()
  {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string name( std::string_view what )
  {
    skip_space();
    auto start = pos_;
    while ( pos_ < text_.size() && is_name_char( text_[pos_] ) )
    {
      ++pos_;
    }
    if ( start == pos_ )
    {
      fail( "expected " + std::string( what ) );
    }
    return std::string( text_.substr( start, pos_ - start ) );
  }

  void expect( char c )
  {
    skip_space();
    if ( pos_ >= text_.size() || text_[pos_] != c )
    {
      fail( std::string( "expected '" ) + c + "'" );
    }
    ++pos_;
  }

  bool accept( char c )
  {
    skip_space();
    if ( pos_ < text_.size() && text_[pos_] == c )
    {
      ++pos_;
      return true;
    }
    return false;
  }

  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void fail( const std::string& message, DiagnosticKind kind = DiagnosticKind::Syntax ) const
  {
    throw NetlistError( { { kind, "", line_, pos_ + 1, message } } );
  }

private:
  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

} // namespace

NetlistDraft parse_bench_draft( std::string_view text, std::string name )
{
  NetlistDraft draft;
  draft.name = std::move( name );
  std::size_t line_no = 0;
  std::size_t start = 0;
  while ( start <= text.size() )
  {
    auto end = text.find( '\n', start );
    if ( end == std::string_view::npos )
    {
      end = text.size();
    }
    auto line = text.substr( start, end - start );
    start = end + 1;
    ++line_no;
    if ( auto hash = line.find( '#' ); hash != std::string_view::npos )
    {
      line = line.substr( 0, hash );
    }
    LineScanner scan( line, line_no );
    if ( scan.at_end() )
    {
      if ( end == text.size() )
      {
        break;
      }
      continue;
    }
    auto head = scan.name( "INPUT, OUTPUT or a net name" );
    if ( iequals( head, "INPUT" ) || iequals( head, "OUTPUT" ) )
    {
      if ( scan.accept( '(' ) )
      {
        auto net = scan.name( "net name" );
        scan.expect( ')' );
        if ( !scan.at_end() )
        {
          scan.fail( "unexpected text after declaration" );
        }
        ( iequals( head, "INPUT" ) ? draft.inputs : draft.outputs ).push_back( std::move( net ) );
        continue;
      }
    }
    scan.expect( '=' );
    auto kind_column = ( scan.skip_space(), scan.column() );
    auto kind_text = scan.name( "gate kind" );
    auto kind = gate_kind_from_string( kind_text );
    if ( !kind )
    {
      if ( iequals( kind_text, "DFF" ) )
      {
        throw NetlistError( { { DiagnosticKind::SequentialElement, head, line_no, kind_column,
                                "DFF driving '" + head + "': only combinational netlists are supported" } } );
      }
      throw NetlistError( { { DiagnosticKind::UnknownGateKind, head, line_no, kind_column,
                              "unknown gate kind '" + kind_text + "'" } } );
    }
    NetlistDraft::GateLine gate{ head, *kind, {}, line_no };
    scan.expect( '(' );
    do
    {
      gate.inputs.push_back( scan.name( "gate input" ) );
    } while ( scan.accept( ',' ) );
    scan.expect( ')' );
    if ( !scan.at_end() )
    {
      scan.fail( "unexpected text after gate" );
    }
    draft.gates.push_back( std::move( gate ) );
    if ( end == text.size() )
    {
      break;
    }
  }
  return draft;
}

Netlist parse_bench( std::string_view text, std::string name, const KeyNaming& naming )
{
  return Netlist::build( parse_bench_draft( text, std::move( name ) ), naming );
}

std::string emit_bench( const Netlist& netlist )
{
  std::ostringstream out;
  out << "# " << netlist.name() << "\n";
  out << "# " << netlist.inputs().size() << " inputs, " << netlist.key_inputs().size() << " key inputs, "
      << netlist.outputs().size() << " outputs, " << netlist.gates().size() << " gates\n\n";
  for ( auto in : netlist.inputs() )
  {
    out << "INPUT(" << netlist.net_name( in ) << ")\n";
  }
  for ( auto k : netlist.key_inputs() )
  {
    out << "INPUT(" << netlist.net_name( k ) << ")\n";
  }
  out << "\n";
  for ( auto po : netlist.outputs() )
  {
    out << "OUTPUT(" << netlist.net_name( po ) << ")\n";
  }
  out << "\n";
  for ( const auto& gate : netlist.gates() )
  {
    out << netlist.net_name( gate.output ) << " = " << to_string( gate.kind ) << "(";
    for ( std::size_t i = 0; i < gate.inputs.size(); ++i )
    {
      out << ( i ? ", " : "" ) << netlist.net_name( gate.inputs[i] );
    }
    out << ")\n";
  }
  return out.str();
}

Netlist read_bench_file( const std::string& path, const KeyNaming& naming )
{
  std::ifstream in( path );
  if ( !in )
  {
    throw ParseError( "cannot open '" + path + "'" );
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto stem = path.substr( path.find_last_of( '/' ) + 1 );
  if ( auto dot = stem.rfind( '.' ); dot != std::string::npos && dot > 0 )
  {
    stem.resize( dot );
  }
  return parse_bench( buffer.str(), stem, naming );
}

} // namespace faultkey
