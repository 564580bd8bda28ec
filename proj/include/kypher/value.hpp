#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace kypher {

// One KGTK cell value. The canonical surface form is stored verbatim so that
// formatting is free and canonical-text equality coincides with value
// equality (numbers are additionally cached in numeric form).
//
// Surface forms:
//   Symbol      Q42, P31, arbitrary text without tab/newline
//   String      "text" with \" \\ \t \n escapes
//   LangString  'text'@en with \' \\ \t \n escapes
//   Number      canonical decimal: integers without point, doubles shortest
//   Empty       empty cell
class Value {
public:
    enum class Kind : std::uint8_t { Empty, Number, Symbol, String, LangString };

    Value() = default;

    static Value symbol(std::string text);
    static Value string(std::string_view content);
    static Value lang_string(std::string_view content, std::string_view lang);
    static Value integer(std::int64_t v);
    static Value real(double v);

    // Classifies a TSV cell by surface form. Throws ParseError for malformed
    // literals (unterminated quote, bad language tag, stray tab/newline).
    static Value parse(std::string_view cell);

    Kind kind() const { return kind_; }
    bool is_empty() const { return kind_ == Kind::Empty; }
    bool is_number() const { return kind_ == Kind::Number; }
    bool is_text() const {
        return kind_ == Kind::Symbol || kind_ == Kind::String || kind_ == Kind::LangString;
    }

    // Canonical surface form; round-trips through parse().
    const std::string& format() const { return surface_; }

    // Content without delimiters: symbol text, unescaped string body,
    // canonical digits for numbers. Empty yields "".
    std::string content() const;

    // Language tag of a LangString, "" otherwise.
    std::string language() const;

    bool is_integer() const { return kind_ == Kind::Number && exact_; }
    std::int64_t as_integer() const { return int_; }
    double as_double() const { return kind_ == Kind::Number && exact_ ? static_cast<double>(int_) : dbl_; }

    friend std::strong_ordering compare(const Value& a, const Value& b);
    bool operator==(const Value& o) const { return compare(*this, o) == std::strong_ordering::equal; }

private:
    Kind kind_ = Kind::Empty;
    bool exact_ = false;     // Number holds an exact int64
    std::int64_t int_ = 0;
    double dbl_ = 0.0;
    std::string surface_;
};

// Total order over canonical values: Empty sorts first, numbers next in
// numeric order, text-like values last in lexicographic order of their
// canonical surface form.
std::strong_ordering compare(const Value& a, const Value& b);

} // namespace kypher
