#include "kypher/parser.hpp"

#include "kypher/cache.hpp"
#include "kypher/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <set>

namespace kypher {

namespace {

enum class Tok {
    End,
    Ident,      // bare name (may contain '.')
    Backquoted, // `arbitrary text`
    String,     // "..."
    LangString, // '...'@tag
    Number,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Semicolon,
    Dash,       // -
    ArrowRight, // ->   (pattern mode)
    ArrowLeft,  // <-   (pattern mode)
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;   // ident/backquoted content or literal surface form
    std::size_t offset = 0;
};

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// One lexer, two modes: pattern mode knows arrows, expression mode knows
// comparison operators. Both strip # comments to end of line.
class Lexer {
public:
    Lexer(const std::string& text, bool pattern_mode) : text_(text), pattern_(pattern_mode) {
        advance();
    }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message + " at offset " + std::to_string(tok_.offset) + " in: " + text_,
                         static_cast<std::int64_t>(tok_.offset));
    }

    Token expect(Tok kind, const char* what) {
        if (tok_.kind != kind) fail(std::string("expected ") + what);
        return take();
    }

private:
    void advance() {
        skip_space();
        tok_ = Token{};
        tok_.offset = pos_;
        if (pos_ >= text_.size()) return;

        char c = text_[pos_];
        if (ident_start(c)) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
            tok_.kind = Tok::Ident;
            tok_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            ((c == '+' || c == '-') && !pattern_ && pos_ + 1 < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.')) ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            lex_number();
            return;
        }
        switch (c) {
        case '`': lex_backquoted(); return;
        case '"': lex_quoted('"'); return;
        case '\'': lex_quoted('\''); return;
        case '(': single(Tok::LParen); return;
        case ')': single(Tok::RParen); return;
        case '[': single(Tok::LBracket); return;
        case ']': single(Tok::RBracket); return;
        case ':': single(Tok::Colon); return;
        case ',': single(Tok::Comma); return;
        case ';': single(Tok::Semicolon); return;
        default: break;
        }

        if (pattern_) {
            if (c == '-') {
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                    tok_.kind = Tok::ArrowRight;
                    pos_ += 2;
                } else {
                    single(Tok::Dash);
                }
                return;
            }
            if (c == '<' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
                tok_.kind = Tok::ArrowLeft;
                pos_ += 2;
                return;
            }
        } else {
            switch (c) {
            case '<':
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
                    tok_.kind = Tok::Le;
                    pos_ += 2;
                } else {
                    single(Tok::Lt);
                }
                return;
            case '>':
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
                    tok_.kind = Tok::Ge;
                    pos_ += 2;
                } else {
                    single(Tok::Gt);
                }
                return;
            case '=': single(Tok::Eq); return;
            case '!':
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
                    tok_.kind = Tok::Ne;
                    pos_ += 2;
                    return;
                }
                break;
            case '-': single(Tok::Dash); return;
            default: break;
            }
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "' at offset " +
                             std::to_string(pos_) + " in: " + text_,
                         static_cast<std::int64_t>(pos_));
    }

    void single(Tok kind) {
        tok_.kind = kind;
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    void lex_backquoted() {
        std::size_t close = text_.find('`', pos_ + 1);
        if (close == std::string::npos)
            throw ParseError("unterminated backquoted name in: " + text_,
                             static_cast<std::int64_t>(pos_));
        tok_.kind = Tok::Backquoted;
        tok_.text = text_.substr(pos_ + 1, close - pos_ - 1);
        pos_ = close + 1;
    }

    // Lexes "..." or '...'@tag keeping the literal's surface form; Value
    // parsing validates it.
    void lex_quoted(char quote) {
        std::size_t i = pos_ + 1;
        while (i < text_.size()) {
            if (text_[i] == '\\') {
                i += 2;
                continue;
            }
            if (text_[i] == quote) break;
            ++i;
        }
        if (i >= text_.size())
            throw ParseError("unterminated literal in: " + text_,
                             static_cast<std::int64_t>(pos_));
        std::size_t end = i + 1;
        if (quote == '\'') {
            if (end >= text_.size() || text_[end] != '@')
                throw ParseError("missing @tag on language-qualified string in: " + text_,
                                 static_cast<std::int64_t>(pos_));
            ++end;
            while (end < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '-'))
                ++end;
            tok_.kind = Tok::LangString;
        } else {
            tok_.kind = Tok::String;
        }
        tok_.text = text_.substr(pos_, end - pos_);
        pos_ = end;
    }

    void lex_number() {
        std::size_t start = pos_;
        if (text_[pos_] == '+' || text_[pos_] == '-') ++pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        tok_.kind = Tok::Number;
        tok_.text = text_.substr(start, pos_ - start);
    }

    const std::string& text_;
    bool pattern_;
    std::size_t pos_ = 0;
    Token tok_;
};

bool keyword(const Token& t, const char* kw) {
    if (t.kind != Tok::Ident) return false;
    const std::string& s = t.text;
    std::size_t n = std::strlen(kw);
    if (s.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != kw[i]) return false;
    return true;
}

Value anchor_value(Lexer& lex) {
    Token t = lex.take();
    switch (t.kind) {
    case Tok::Ident: return Value::symbol(t.text);
    case Tok::Backquoted: return Value::symbol(t.text);
    case Tok::Number:
    case Tok::String:
    case Tok::LangString: return Value::parse(t.text);
    default: lex.fail("expected an anchor value");
    }
}

NodePattern parse_node(Lexer& lex) {
    lex.expect(Tok::LParen, "'('");
    NodePattern node;
    if (lex.peek().kind == Tok::Ident) node.var = lex.take().text;
    if (lex.peek().kind == Tok::Colon) {
        lex.take();
        node.anchor = anchor_value(lex);
    }
    lex.expect(Tok::RParen, "')'");
    return node;
}

// Relation bodies: `[var]`, `[:label]`, `[var:label]`, `[]`.
RelPattern parse_rel_body(Lexer& lex) {
    RelPattern rel;
    lex.expect(Tok::LBracket, "'['");
    if (lex.peek().kind == Tok::Ident) rel.var = lex.take().text;
    if (lex.peek().kind == Tok::Colon) {
        lex.take();
        rel.anchor = anchor_value(lex);
    }
    lex.expect(Tok::RBracket, "']'");
    return rel;
}

PatternClause parse_clause(Lexer& lex) {
    PatternClause clause;
    // graph prefix: NAME ':' followed by '('
    if (lex.peek().kind == Tok::Ident || lex.peek().kind == Tok::Backquoted) {
        Token name = lex.take();
        lex.expect(Tok::Colon, "':' after graph name");
        clause.graph = name.text;
    }
    clause.nodes.push_back(parse_node(lex));
    while (true) {
        Tok k = lex.peek().kind;
        if (k == Tok::Dash) {
            lex.take();
            RelPattern rel = parse_rel_body(lex);
            // forward 'a-[..]->b' or undirected-looking 'a-[..]-b' is not in
            // the language: require the arrow
            lex.expect(Tok::ArrowRight, "'->'");
            rel.backward = false;
            clause.rels.push_back(std::move(rel));
            clause.nodes.push_back(parse_node(lex));
        } else if (k == Tok::ArrowLeft) {
            lex.take();
            RelPattern rel = parse_rel_body(lex);
            lex.expect(Tok::Dash, "'-'");
            rel.backward = true;
            clause.rels.push_back(std::move(rel));
            clause.nodes.push_back(parse_node(lex));
        } else {
            break;
        }
    }
    return clause;
}

// Expression parsing; precedence or < and < not < comparison.
ExprPtr parse_or(Lexer& lex, bool allow_aggregate);

ExprPtr parse_primary(Lexer& lex, bool allow_aggregate) {
    const Token& t = lex.peek();
    switch (t.kind) {
    case Tok::LParen: {
        lex.take();
        ExprPtr e = parse_or(lex, allow_aggregate);
        lex.expect(Tok::RParen, "')'");
        return e;
    }
    case Tok::Number:
    case Tok::String:
    case Tok::LangString: {
        Token lit = lex.take();
        return Expr::lit(Value::parse(lit.text));
    }
    case Tok::Backquoted: {
        Token lit = lex.take();
        return Expr::lit(Value::symbol(lit.text));
    }
    case Tok::Ident: {
        Token name = lex.take();
        if (lex.peek().kind == Tok::LParen && keyword(name, "count")) {
            if (!allow_aggregate)
                throw SemanticError("count(...) is only allowed in the return list");
            lex.take();
            bool distinct = false;
            if (keyword(lex.peek(), "distinct")) {
                lex.take();
                distinct = true;
            }
            ExprPtr arg = parse_or(lex, false);
            lex.expect(Tok::RParen, "')'");
            return Expr::count(std::move(arg), distinct);
        }
        if (lex.peek().kind == Tok::LParen && keyword(name, "cast")) {
            lex.take();
            ExprPtr arg = parse_or(lex, false);
            lex.expect(Tok::Comma, "',' in cast");
            Token type = lex.expect(Tok::Ident, "type name");
            CastType ct;
            if (keyword(type, "integer")) ct = CastType::Integer;
            else if (keyword(type, "float")) ct = CastType::Float;
            else if (keyword(type, "string")) ct = CastType::String;
            else throw SemanticError("unknown cast type '" + type.text + "'");
            lex.expect(Tok::RParen, "')'");
            return Expr::cast(std::move(arg), ct);
        }
        if (lex.peek().kind == Tok::LParen)
            lex.fail("unknown function '" + name.text + "'");
        return Expr::var(name.text);
    }
    default:
        lex.fail("expected an expression");
    }
}

ExprPtr parse_comparison(Lexer& lex, bool allow_aggregate) {
    ExprPtr left = parse_primary(lex, allow_aggregate);
    Tok k = lex.peek().kind;
    CmpOp op;
    switch (k) {
    case Tok::Lt: op = CmpOp::Lt; break;
    case Tok::Le: op = CmpOp::Le; break;
    case Tok::Gt: op = CmpOp::Gt; break;
    case Tok::Ge: op = CmpOp::Ge; break;
    case Tok::Eq: op = CmpOp::Eq; break;
    case Tok::Ne: op = CmpOp::Ne; break;
    default: return left;
    }
    lex.take();
    ExprPtr right = parse_primary(lex, allow_aggregate);
    return Expr::cmp(op, std::move(left), std::move(right));
}

ExprPtr parse_not(Lexer& lex, bool allow_aggregate) {
    if (keyword(lex.peek(), "not")) {
        lex.take();
        return Expr::bnot(parse_not(lex, allow_aggregate));
    }
    return parse_comparison(lex, allow_aggregate);
}

ExprPtr parse_and(Lexer& lex, bool allow_aggregate) {
    ExprPtr left = parse_not(lex, allow_aggregate);
    while (keyword(lex.peek(), "and")) {
        lex.take();
        left = Expr::band(std::move(left), parse_not(lex, allow_aggregate));
    }
    return left;
}

ExprPtr parse_or(Lexer& lex, bool allow_aggregate) {
    ExprPtr left = parse_and(lex, allow_aggregate);
    while (keyword(lex.peek(), "or")) {
        lex.take();
        left = Expr::bor(std::move(left), parse_and(lex, allow_aggregate));
    }
    return left;
}

// Aliases: IDENT (';' IDENT)* joined, or one backquoted name.
std::string parse_alias(Lexer& lex) {
    if (lex.peek().kind == Tok::Backquoted) return lex.take().text;
    Token first = lex.expect(Tok::Ident, "alias name");
    std::string alias = first.text;
    while (lex.peek().kind == Tok::Semicolon) {
        lex.take();
        Token part = lex.expect(Tok::Ident, "alias name after ';'");
        alias += ";";
        alias += part.text;
    }
    return alias;
}

} // namespace

std::vector<PatternClause> parse_match(const std::string& text) {
    Lexer lex(text, true);
    std::vector<PatternClause> clauses;
    clauses.push_back(parse_clause(lex));
    while (lex.peek().kind == Tok::Comma) {
        lex.take();
        clauses.push_back(parse_clause(lex));
    }
    if (lex.peek().kind != Tok::End) lex.fail("trailing input after pattern");
    return clauses;
}

ExprPtr parse_expression(const std::string& text) {
    Lexer lex(text, false);
    ExprPtr e = parse_or(lex, false);
    if (lex.peek().kind != Tok::End) lex.fail("trailing input after expression");
    return e;
}

ReturnList parse_return(const std::string& text) {
    Lexer lex(text, false);
    ReturnList ret;
    if (keyword(lex.peek(), "distinct")) {
        lex.take();
        ret.distinct = true;
    }
    std::set<std::string> seen;
    while (true) {
        ReturnItem item;
        item.expr = parse_or(lex, true);
        if (keyword(lex.peek(), "as")) {
            lex.take();
            item.alias = parse_alias(lex);
        } else {
            item.alias = print(item.expr);
        }
        if (!seen.insert(item.alias).second)
            throw SemanticError("duplicate return alias '" + item.alias + "'");
        ret.items.push_back(std::move(item));
        if (lex.peek().kind != Tok::Comma) break;
        lex.take();
    }
    if (lex.peek().kind != Tok::End) lex.fail("trailing input after return list");
    if (ret.items.empty()) throw ParseError("empty return list");
    return ret;
}

std::vector<OrderKey> parse_order(const std::string& text) {
    Lexer lex(text, false);
    std::vector<OrderKey> keys;
    while (true) {
        OrderKey key;
        key.expr = parse_or(lex, false);
        if (keyword(lex.peek(), "desc")) {
            lex.take();
            key.descending = true;
        } else if (keyword(lex.peek(), "asc")) {
            lex.take();
        }
        keys.push_back(std::move(key));
        if (lex.peek().kind != Tok::Comma) break;
        lex.take();
    }
    if (lex.peek().kind != Tok::End) lex.fail("trailing input after order-by list");
    return keys;
}

namespace {

// Unprefixed clauses inherit the previous clause's graph; the first clause
// defaults to the first input.
void apply_graph_inheritance(std::vector<PatternClause>& clauses, const std::string& first_input) {
    std::string current = first_input;
    for (PatternClause& c : clauses) {
        if (c.graph) current = *c.graph;
        else c.graph = current;
    }
}

} // namespace

QuerySpec assemble_query(std::vector<InputSpec> inputs, const std::string& match_text,
                         const std::vector<std::string>& opt_texts,
                         const std::optional<std::string>& where_text,
                         const std::string& return_text,
                         const std::optional<std::string>& order_text,
                         std::optional<std::uint64_t> limit) {
    QuerySpec spec;

    std::set<std::string> names;
    for (InputSpec& in : inputs) {
        in.name = in.alias ? *in.alias : graph_name_from_path(in.path);
        if (!names.insert(in.name).second)
            throw SemanticError("two inputs share the graph name '" + in.name +
                                "'; use --as to disambiguate");
    }
    spec.inputs = std::move(inputs);
    if (spec.inputs.empty()) throw UsageError("at least one input is required");

    spec.match = parse_match(match_text);
    apply_graph_inheritance(spec.match, spec.inputs.front().name);
    for (const std::string& opt : opt_texts) {
        spec.optionals.push_back(parse_match(opt));
        apply_graph_inheritance(spec.optionals.back(), spec.inputs.front().name);
    }
    if (where_text) spec.where = parse_expression(*where_text);
    spec.ret = parse_return(return_text);
    if (order_text) spec.order = parse_order(*order_text);
    spec.limit = limit;

    // binding checks
    std::vector<std::string> bound = bound_variables(spec);
    auto is_bound = [&bound](const std::string& v) {
        return std::find(bound.begin(), bound.end(), v) != bound.end();
    };
    auto check_bound = [&](const ExprPtr& e, const char* where) {
        std::vector<std::string> used;
        collect_variables(e, used);
        for (const std::string& v : used)
            if (!is_bound(v))
                throw SemanticError("variable '" + v + "' in " + where +
                                    " is not bound by any match clause");
    };
    if (spec.where) check_bound(spec.where, "--where");
    for (const ReturnItem& item : spec.ret.items) check_bound(item.expr, "--return");

    std::set<std::string> aliases;
    for (const ReturnItem& item : spec.ret.items) aliases.insert(item.alias);
    for (const OrderKey& key : spec.order) {
        // a bare name that matches an alias refers to the output column
        if (key.expr->kind == Expr::Kind::Var && aliases.count(key.expr->name)) continue;
        std::vector<std::string> used;
        collect_variables(key.expr, used);
        for (const std::string& v : used)
            if (!is_bound(v) && !aliases.count(v))
                throw SemanticError("variable '" + v +
                                    "' in --order-by is neither bound nor a return alias");
    }
    return spec;
}

} // namespace kypher
