// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dufay::config
{

/// Values supported by the configuration reader.
using Value = std::variant<bool, double, std::string, std::vector<double>>;

/// Flat view of a TOML document: keys are dotted paths such as
/// `red.x` for `x` inside `[red]`.
///
/// Supported subset: `#` comments, `[table]` / `[a.b]` headers, bare or
/// quoted keys, basic strings, integers and floats, booleans, and
/// single-line arrays of numbers.
class Document
{
public:
    static Document parse( std::string_view text );
    static Document load( const std::filesystem::path &path );

    [[nodiscard]] bool contains( std::string_view key ) const;

    [[nodiscard]] std::optional<double>      number( std::string_view key ) const;
    [[nodiscard]] std::optional<std::string> string( std::string_view key ) const;
    [[nodiscard]] std::optional<bool>        boolean( std::string_view key ) const;
    [[nodiscard]] std::optional<std::vector<double>> numbers( std::string_view key ) const;

    /// Throws ParseError when missing or of the wrong type.
    [[nodiscard]] double      require_number( std::string_view key ) const;
    [[nodiscard]] std::string require_string( std::string_view key ) const;

    [[nodiscard]] const std::map<std::string, Value, std::less<>> &entries() const noexcept
    {
        return entries_;
    }

private:
    std::map<std::string, Value, std::less<>> entries_;
};

} // namespace dufay::config
