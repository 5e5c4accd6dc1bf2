#include "stsr/text.hpp"

#include "stsr/error.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace stsr::text {

std::string format_shortest(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

std::string format_fixed(double v, int decimals) {
    std::array<char, 512> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
    return {buf.data(), static_cast<std::size_t>(n)};
}

double parse_double(std::string_view token, std::string_view what) {
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || token.empty()) {
        fail(ErrorCode::ParseError, "invalid number '" + std::string(token) + "' for " + std::string(what));
    }
    return v;
}

long long parse_int(std::string_view token, std::string_view what) {
    long long v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size() || token.empty()) {
        fail(ErrorCode::ParseError, "invalid integer '" + std::string(token) + "' for " + std::string(what));
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace stsr::text
