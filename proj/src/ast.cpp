#include "kypher/ast.hpp"

#include <algorithm>

namespace kypher {

namespace {

bool plain_name(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s.front())) && s.front() != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '.';
    });
}

// Backquotes a name when it cannot be lexed bare.
std::string print_name(const std::string& s) {
    if (plain_name(s)) return s;
    return "`" + s + "`";
}

std::string print_anchor(const Value& v) {
    // Symbols with bare-name syntax print unquoted; everything else uses its
    // literal surface form (backquoted symbols included).
    if (v.kind() == Value::Kind::Symbol) return print_name(v.format());
    return v.format();
}

// Alias tokens may chain identifiers with ';' without backquotes.
std::string print_alias(const std::string& s) {
    std::size_t start = 0;
    bool ok = !s.empty();
    while (ok) {
        std::size_t semi = s.find(';', start);
        std::string part = semi == std::string::npos ? s.substr(start) : s.substr(start, semi - start);
        if (!plain_name(part)) ok = false;
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    if (ok) return s;
    return "`" + s + "`";
}

const char* cmp_text(CmpOp op) {
    switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    }
    return "?";
}

const char* cast_text(CastType t) {
    switch (t) {
    case CastType::Integer: return "integer";
    case CastType::Float: return "float";
    case CastType::String: return "string";
    }
    return "?";
}

void print_expr(const ExprPtr& e, std::string& out) {
    switch (e->kind) {
    case Expr::Kind::Var:
        out += print_name(e->name);
        break;
    case Expr::Kind::Literal:
        // bare identifiers always mean variables, so symbol literals print
        // backquoted
        if (e->literal.kind() == Value::Kind::Symbol)
            out += "`" + e->literal.format() + "`";
        else
            out += e->literal.format();
        break;
    case Expr::Kind::Cmp:
        out += "(";
        print_expr(e->left, out);
        out += " ";
        out += cmp_text(e->cmp);
        out += " ";
        print_expr(e->right, out);
        out += ")";
        break;
    case Expr::Kind::And:
        out += "(";
        print_expr(e->left, out);
        out += " and ";
        print_expr(e->right, out);
        out += ")";
        break;
    case Expr::Kind::Or:
        out += "(";
        print_expr(e->left, out);
        out += " or ";
        print_expr(e->right, out);
        out += ")";
        break;
    case Expr::Kind::Not:
        out += "(not ";
        print_expr(e->left, out);
        out += ")";
        break;
    case Expr::Kind::Cast:
        out += "cast(";
        print_expr(e->left, out);
        out += ", ";
        out += cast_text(e->cast_type);
        out += ")";
        break;
    case Expr::Kind::Count:
        out += "count(";
        if (e->distinct) out += "distinct ";
        print_expr(e->left, out);
        out += ")";
        break;
    }
}

} // namespace

ExprPtr Expr::var(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::lit(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Literal;
    e->literal = std::move(v);
    return e;
}

ExprPtr Expr::cmp(CmpOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Cmp;
    e->cmp = op;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

ExprPtr Expr::band(ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::And;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

ExprPtr Expr::bor(ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Or;
    e->left = std::move(l);
    e->right = std::move(r);
    return e;
}

ExprPtr Expr::bnot(ExprPtr inner) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Not;
    e->left = std::move(inner);
    return e;
}

ExprPtr Expr::cast(ExprPtr inner, CastType t) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Cast;
    e->cast_type = t;
    e->left = std::move(inner);
    return e;
}

ExprPtr Expr::count(ExprPtr inner, bool distinct) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Count;
    e->distinct = distinct;
    e->left = std::move(inner);
    return e;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a == !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case Expr::Kind::Var: return a->name == b->name;
    case Expr::Kind::Literal: return a->literal == b->literal;
    case Expr::Kind::Cmp:
        return a->cmp == b->cmp && equal(a->left, b->left) && equal(a->right, b->right);
    case Expr::Kind::And:
    case Expr::Kind::Or:
        return equal(a->left, b->left) && equal(a->right, b->right);
    case Expr::Kind::Not: return equal(a->left, b->left);
    case Expr::Kind::Cast: return a->cast_type == b->cast_type && equal(a->left, b->left);
    case Expr::Kind::Count: return a->distinct == b->distinct && equal(a->left, b->left);
    }
    return false;
}

std::string print(const ExprPtr& expr) {
    std::string out;
    print_expr(expr, out);
    return out;
}

bool contains_aggregate(const ExprPtr& e) {
    if (!e) return false;
    if (e->kind == Expr::Kind::Count) return true;
    return contains_aggregate(e->left) || contains_aggregate(e->right);
}

void collect_variables(const ExprPtr& e, std::vector<std::string>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Var) {
        if (std::find(out.begin(), out.end(), e->name) == out.end()) out.push_back(e->name);
        return;
    }
    collect_variables(e->left, out);
    collect_variables(e->right, out);
}

std::string print(const PatternClause& clause) {
    std::string out;
    if (clause.graph) {
        out += print_name(*clause.graph);
        out += ": ";
    }
    for (std::size_t i = 0; i < clause.nodes.size(); ++i) {
        const NodePattern& n = clause.nodes[i];
        out += "(";
        if (n.var) out += print_name(*n.var);
        if (n.anchor) {
            out += ":";
            out += print_anchor(*n.anchor);
        }
        out += ")";
        if (i < clause.rels.size()) {
            const RelPattern& r = clause.rels[i];
            out += r.backward ? "<-[" : "-[";
            if (r.var) out += print_name(*r.var);
            if (r.anchor) {
                out += ":";
                out += print_anchor(*r.anchor);
            }
            out += r.backward ? "]-" : "]->";
        }
    }
    return out;
}

std::string print(const std::vector<PatternClause>& clauses) {
    std::string out;
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        if (i) out += ", ";
        out += print(clauses[i]);
    }
    return out;
}

std::string print(const ReturnList& ret) {
    std::string out;
    if (ret.distinct) out += "distinct ";
    for (std::size_t i = 0; i < ret.items.size(); ++i) {
        if (i) out += ", ";
        out += print(ret.items[i].expr);
        out += " as ";
        out += print_alias(ret.items[i].alias);
    }
    return out;
}

std::string print(const std::vector<OrderKey>& keys) {
    std::string out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i) out += ", ";
        out += print(keys[i].expr);
        if (keys[i].descending) out += " desc";
    }
    return out;
}

std::vector<std::string> bound_variables(const QuerySpec& spec) {
    std::vector<std::string> vars;
    auto add = [&vars](const std::optional<std::string>& v) {
        if (v && std::find(vars.begin(), vars.end(), *v) == vars.end()) vars.push_back(*v);
    };
    auto walk = [&](const std::vector<PatternClause>& clauses) {
        for (const PatternClause& c : clauses) {
            for (const NodePattern& n : c.nodes) add(n.var);
            for (const RelPattern& r : c.rels) add(r.var);
        }
    };
    walk(spec.match);
    for (const auto& group : spec.optionals) walk(group);
    return vars;
}

} // namespace kypher
