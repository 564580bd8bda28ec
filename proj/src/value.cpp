#include "kypher/value.hpp"

#include "kypher/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

namespace kypher {

namespace {

bool is_lang_tag(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') return false;
    }
    return true;
}

// Escapes the delimiter quote, backslash, tab and newline so the surface
// form stays a single TSV cell.
void append_escaped(std::string& out, std::string_view content, char quote) {
    for (char c : content) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        default:
            if (c == quote) out.push_back('\\');
            out.push_back(c);
        }
    }
}

// Decodes the body of a quoted literal; `end` is the position of the closing
// quote. Throws on unknown escapes and unterminated bodies.
std::string unescape_body(std::string_view cell, std::size_t from, std::size_t to, char quote) {
    std::string out;
    out.reserve(to - from);
    for (std::size_t i = from; i < to; ++i) {
        char c = cell[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 1 >= to) throw ParseError("dangling escape in literal: " + std::string(cell));
        char e = cell[++i];
        switch (e) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default:
            if (e == quote) { out.push_back(quote); break; }
            throw ParseError(std::string("unknown escape '\\") + e + "' in literal: " + std::string(cell));
        }
    }
    (void)quote;
    return out;
}

// Finds the closing unescaped `quote` starting at position 1.
std::size_t find_close(std::string_view cell, char quote) {
    for (std::size_t i = 1; i < cell.size(); ++i) {
        if (cell[i] == '\\') { ++i; continue; }
        if (cell[i] == quote) return i;
    }
    return std::string_view::npos;
}

bool looks_numeric(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    bool digits = false, dot = false, exp = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) { digits = true; continue; }
        if (c == '.' && !dot && !exp) { dot = true; continue; }
        if ((c == 'e' || c == 'E') && digits && !exp) {
            exp = true;
            if (i + 1 < s.size() && (s[i + 1] == '+' || s[i + 1] == '-')) ++i;
            digits = false; // require exponent digits
            continue;
        }
        return false;
    }
    return digits;
}

std::string canonical_double(double v) {
    std::array<char, 64> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), p);
}

} // namespace

Value Value::symbol(std::string text) {
    if (text.empty()) throw ParseError("symbol text must be non-empty");
    if (text.find('\t') != std::string::npos || text.find('\n') != std::string::npos ||
        text.find('\r') != std::string::npos)
        throw ParseError("symbol text may not contain tab or newline: " + text);
    Value v;
    v.kind_ = Kind::Symbol;
    v.surface_ = std::move(text);
    return v;
}

Value Value::string(std::string_view content) {
    Value v;
    v.kind_ = Kind::String;
    v.surface_.push_back('"');
    append_escaped(v.surface_, content, '"');
    v.surface_.push_back('"');
    return v;
}

Value Value::lang_string(std::string_view content, std::string_view lang) {
    if (!is_lang_tag(lang)) throw ParseError("bad language tag: @" + std::string(lang));
    Value v;
    v.kind_ = Kind::LangString;
    v.surface_.push_back('\'');
    append_escaped(v.surface_, content, '\'');
    v.surface_.push_back('\'');
    v.surface_.push_back('@');
    v.surface_.append(lang);
    return v;
}

Value Value::integer(std::int64_t n) {
    Value v;
    v.kind_ = Kind::Number;
    v.exact_ = true;
    v.int_ = n;
    v.surface_ = std::to_string(n);
    return v;
}

Value Value::real(double d) {
    // Integral doubles canonicalize to the integer spelling so that equal
    // numbers share one surface form.
    if (std::isfinite(d) && d >= -9.2233720368547748e18 && d <= 9.2233720368547748e18 &&
        d == std::floor(d)) {
        auto n = static_cast<std::int64_t>(d);
        if (static_cast<double>(n) == d) return integer(n);
    }
    if (!std::isfinite(d)) throw ParseError("non-finite number");
    Value v;
    v.kind_ = Kind::Number;
    v.exact_ = false;
    v.dbl_ = d;
    v.surface_ = canonical_double(d);
    return v;
}

Value Value::parse(std::string_view cell) {
    if (cell.empty()) return Value();
    if (cell.find('\t') != std::string_view::npos || cell.find('\n') != std::string_view::npos)
        throw ParseError("cell contains tab or newline: " + std::string(cell));

    if (cell.front() == '"') {
        std::size_t close = find_close(cell, '"');
        if (close == std::string_view::npos || close + 1 != cell.size())
            throw ParseError("unterminated string literal: " + std::string(cell));
        return string(unescape_body(cell, 1, close, '"'));
    }
    if (cell.front() == '\'') {
        std::size_t close = find_close(cell, '\'');
        if (close == std::string_view::npos)
            throw ParseError("unterminated language-qualified string: " + std::string(cell));
        if (close + 1 >= cell.size() || cell[close + 1] != '@')
            throw ParseError("missing @tag on language-qualified string: " + std::string(cell));
        std::string_view tag = cell.substr(close + 2);
        if (!is_lang_tag(tag))
            throw ParseError("bad language tag in: " + std::string(cell));
        return lang_string(unescape_body(cell, 1, close, '\''), tag);
    }
    if (looks_numeric(cell)) {
        bool plain_int = cell.find('.') == std::string_view::npos &&
                         cell.find('e') == std::string_view::npos &&
                         cell.find('E') == std::string_view::npos;
        if (plain_int) {
            std::int64_t n = 0;
            std::string_view digits = cell.front() == '+' ? cell.substr(1) : cell;
            auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
            if (ec == std::errc() && p == digits.data() + digits.size()) return integer(n);
            // out of int64 range: fall through to double
        }
        double d = 0.0;
        std::string_view num = cell.front() == '+' ? cell.substr(1) : cell;
        auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), d);
        if (ec != std::errc() || p != num.data() + num.size())
            throw ParseError("malformed number: " + std::string(cell));
        return real(d);
    }
    return symbol(std::string(cell));
}

std::string Value::content() const {
    switch (kind_) {
    case Kind::Empty:
    case Kind::Number:
    case Kind::Symbol:
        return surface_;
    case Kind::String: {
        std::size_t close = find_close(surface_, '"');
        return unescape_body(surface_, 1, close, '"');
    }
    case Kind::LangString: {
        std::size_t close = find_close(surface_, '\'');
        return unescape_body(surface_, 1, close, '\'');
    }
    }
    return {};
}

std::string Value::language() const {
    if (kind_ != Kind::LangString) return {};
    std::size_t close = find_close(surface_, '\'');
    return surface_.substr(close + 2);
}

std::strong_ordering compare(const Value& a, const Value& b) {
    auto rank = [](const Value& v) { return v.is_empty() ? 0 : v.is_number() ? 1 : 2; };
    if (int r = rank(a) - rank(b); r != 0)
        return r < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.is_empty()) return std::strong_ordering::equal;
    if (a.is_number()) {
        if (a.exact_ && b.exact_) return a.int_ <=> b.int_;
        // long double holds every int64 exactly on x86-64
        long double x = a.exact_ ? static_cast<long double>(a.int_) : static_cast<long double>(a.dbl_);
        long double y = b.exact_ ? static_cast<long double>(b.int_) : static_cast<long double>(b.dbl_);
        if (x < y) return std::strong_ordering::less;
        if (x > y) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    int c = a.surface_.compare(b.surface_);
    return c < 0   ? std::strong_ordering::less
           : c > 0 ? std::strong_ordering::greater
                   : std::strong_ordering::equal;
}

} // namespace kypher
