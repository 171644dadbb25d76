#include "faultkey/error.hpp"

namespace faultkey {

ParseError::ParseError( std::string message, std::size_t line, std::size_t column )
    : Error( std::move( message ) ), line_( line ), column_( column )
{
}

} // namespace faultkey
