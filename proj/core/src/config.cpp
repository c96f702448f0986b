// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/config.hpp>
#include <dufay/error.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dufay::config
{

namespace
{

std::string_view trim( std::string_view s )
{
    while ( !s.empty() && ( s.front() == ' ' || s.front() == '\t' ) )
        s.remove_prefix( 1 );
    while ( !s.empty() && ( s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ) )
        s.remove_suffix( 1 );
    return s;
}

[[noreturn]] void fail( std::size_t line, const std::string &what )
{
    throw Error( ErrorCode::ParseError, "config line " + std::to_string( line ) + ": " + what );
}

// Removes a trailing comment that is not inside a string.
std::string_view strip_comment( std::string_view s )
{
    bool in_string = false;
    for ( std::size_t i = 0; i < s.size(); ++i )
    {
        if ( s[i] == '"' && ( i == 0 || s[i - 1] != '\\' ) )
            in_string = !in_string;
        else if ( s[i] == '#' && !in_string )
            return s.substr( 0, i );
    }
    return s;
}

std::string unquote_key( std::string_view key, std::size_t line )
{
    key = trim( key );
    if ( key.size() >= 2 && key.front() == '"' && key.back() == '"' )
        return std::string( key.substr( 1, key.size() - 2 ) );
    if ( key.empty() )
        fail( line, "empty key" );
    for ( char c: key )
        if ( !( std::isalnum( static_cast<unsigned char>( c ) ) || c == '_' || c == '-' || c == '.' ) )
            fail( line, "invalid key '" + std::string( key ) + "'" );
    return std::string( key );
}

bool parse_number( std::string_view s, double &out )
{
    std::string cleaned;
    for ( char c: trim( s ) )
        if ( c != '_' )
            cleaned.push_back( c );
    std::string_view v = cleaned;
    if ( !v.empty() && v.front() == '+' )
        v.remove_prefix( 1 );
    if ( v.empty() )
        return false;
    auto [ptr, ec] = std::from_chars( v.data(), v.data() + v.size(), out );
    return ec == std::errc() && ptr == v.data() + v.size();
}

Value parse_value( std::string_view raw, std::size_t line )
{
    std::string_view s = trim( raw );
    if ( s.empty() )
        fail( line, "missing value" );
    if ( s.front() == '"' )
    {
        if ( s.size() < 2 || s.back() != '"' )
            fail( line, "unterminated string" );
        std::string out;
        for ( std::size_t i = 1; i + 1 < s.size(); ++i )
        {
            char c = s[i];
            if ( c == '\\' && i + 2 < s.size() )
            {
                char n = s[++i];
                switch ( n )
                {
                    case 'n': out.push_back( '\n' ); break;
                    case 't': out.push_back( '\t' ); break;
                    case '"': out.push_back( '"' ); break;
                    case '\\': out.push_back( '\\' ); break;
                    default: fail( line, "unsupported escape" );
                }
            }
            else
                out.push_back( c );
        }
        return out;
    }
    if ( s == "true" )
        return true;
    if ( s == "false" )
        return false;
    if ( s.front() == '[' )
    {
        if ( s.back() != ']' )
            fail( line, "arrays must be on a single line" );
        std::vector<double> values;
        std::string_view    body = trim( s.substr( 1, s.size() - 2 ) );
        while ( !body.empty() )
        {
            auto             comma = body.find( ',' );
            std::string_view item  = trim( body.substr( 0, comma ) );
            if ( !item.empty() )
            {
                double v;
                if ( !parse_number( item, v ) )
                    fail( line, "array items must be numbers" );
                values.push_back( v );
            }
            if ( comma == std::string_view::npos )
                break;
            body.remove_prefix( comma + 1 );
        }
        return values;
    }
    double v;
    if ( !parse_number( s, v ) )
        fail( line, "cannot parse value '" + std::string( s ) + "'" );
    return v;
}

} // namespace

Document Document::parse( std::string_view text )
{
    Document    doc;
    std::string prefix;
    std::size_t line_no = 0;
    while ( !text.empty() )
    {
        auto             nl   = text.find( '\n' );
        std::string_view line = text.substr( 0, nl );
        text.remove_prefix( nl == std::string_view::npos ? text.size() : nl + 1 );
        ++line_no;
        line = trim( strip_comment( line ) );
        if ( line.empty() )
            continue;
        if ( line.front() == '[' )
        {
            if ( line.back() != ']' || line.size() < 3 || line[1] == '[' )
                fail( line_no, "malformed table header" );
            prefix = unquote_key( line.substr( 1, line.size() - 2 ), line_no ) + ".";
            continue;
        }
        auto eq = line.find( '=' );
        if ( eq == std::string_view::npos )
            fail( line_no, "expected key = value" );
        std::string key = prefix + unquote_key( line.substr( 0, eq ), line_no );
        if ( doc.entries_.count( key ) )
            fail( line_no, "duplicate key '" + key + "'" );
        doc.entries_.emplace( std::move( key ), parse_value( line.substr( eq + 1 ), line_no ) );
    }
    return doc;
}

Document Document::load( const std::filesystem::path &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw Error( ErrorCode::IoError, "cannot open " + path.string() );
    std::stringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse( ss.str() );
    }
    catch ( const Error &e )
    {
        throw Error( e.code(), path.string() + ": " + e.what() );
    }
}

bool Document::contains( std::string_view key ) const
{
    return entries_.find( key ) != entries_.end();
}

std::optional<double> Document::number( std::string_view key ) const
{
    auto it = entries_.find( key );
    if ( it == entries_.end() )
        return std::nullopt;
    if ( auto *v = std::get_if<double>( &it->second ) )
        return *v;
    throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' must be a number" );
}

std::optional<std::string> Document::string( std::string_view key ) const
{
    auto it = entries_.find( key );
    if ( it == entries_.end() )
        return std::nullopt;
    if ( auto *v = std::get_if<std::string>( &it->second ) )
        return *v;
    throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' must be a string" );
}

std::optional<bool> Document::boolean( std::string_view key ) const
{
    auto it = entries_.find( key );
    if ( it == entries_.end() )
        return std::nullopt;
    if ( auto *v = std::get_if<bool>( &it->second ) )
        return *v;
    throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' must be a boolean" );
}

std::optional<std::vector<double>> Document::numbers( std::string_view key ) const
{
    auto it = entries_.find( key );
    if ( it == entries_.end() )
        return std::nullopt;
    if ( auto *v = std::get_if<std::vector<double>>( &it->second ) )
        return *v;
    throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' must be an array of numbers" );
}

double Document::require_number( std::string_view key ) const
{
    auto v = number( key );
    if ( !v )
        throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' is required" );
    return *v;
}

std::string Document::require_string( std::string_view key ) const
{
    auto v = string( key );
    if ( !v )
        throw Error( ErrorCode::ParseError, "config key '" + std::string( key ) + "' is required" );
    return *v;
}

} // namespace dufay::config
