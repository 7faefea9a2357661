/*
 * Copyright 2026 The optpower Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OPTPOWER_CSV_HPP
#define OPTPOWER_CSV_HPP

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace optpower {

/// Malformed or inconsistent input data. line() is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error
{
public:
    explicit DataError(std::string const& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what)
        , line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace csv {

inline std::string_view trim(std::string_view s)
{
    auto const is_space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n'; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;)
    {
        std::size_t const pos = line.find(sep, start);
        if (pos == std::string_view::npos)
        {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline bool try_parse(std::string_view text, double& out)
{
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

inline bool try_parse(std::string_view text, std::int64_t& out)
{
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

inline double parse_double(std::string_view text, std::size_t line, char const* field)
{
    double value = 0;
    if (!try_parse(text, value))
        throw DataError(std::string("bad ") + field + " '" + std::string(text) + "'", line);
    return value;
}

inline std::int64_t parse_int(std::string_view text, std::size_t line, char const* field)
{
    std::int64_t value = 0;
    if (!try_parse(text, value))
        throw DataError(std::string("bad ") + field + " '" + std::string(text) + "'", line);
    return value;
}

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double value)
{
    char buf[64];
    auto const [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

/**
 * Calls row(fields, line_no) for every non-blank, non-comment line of a file.
 * A first row whose numeric_column field does not parse as a number is
 * treated as a header and skipped.
 */
inline void for_each_row(std::string const& path,
                         std::function<void(std::vector<std::string_view> const&, std::size_t)> const& row,
                         std::size_t numeric_column = 0)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF"))
            view.remove_prefix(3);
        view = trim(view);
        if (view.empty() || view.front() == '#')
            continue;
        auto const fields = split(view);
        if (first)
        {
            first = false;
            double probe = 0;
            if (fields.size() > numeric_column && !try_parse(fields[numeric_column], probe))
                continue;
        }
        row(fields, line_no);
    }
}

} // namespace csv
} // namespace optpower

#endif // OPTPOWER_CSV_HPP
