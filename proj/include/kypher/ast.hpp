#pragma once

#include "kypher/value.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kypher {

// ---------------------------------------------------------------------------
// Match patterns
// ---------------------------------------------------------------------------

// `(var:Anchor)`; both parts optional, `()` is anonymous.
struct NodePattern {
    std::optional<std::string> var;
    std::optional<Value> anchor;

    bool operator==(const NodePattern&) const = default;
};

// `-[var:Label]->` or `<-[var:Label]-`. The variable binds the edge id.
struct RelPattern {
    std::optional<std::string> var;
    std::optional<Value> anchor;
    bool backward = false;

    bool operator==(const RelPattern&) const = default;
};

// One comma-separated element of a match text: an optionally graph-qualified
// chain of node patterns connected by relation patterns.
struct PatternClause {
    std::optional<std::string> graph;
    std::vector<NodePattern> nodes; // nodes.size() == rels.size() + 1
    std::vector<RelPattern> rels;

    bool operator==(const PatternClause&) const = default;
};

std::string print(const PatternClause& clause);
std::string print(const std::vector<PatternClause>& clauses);

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };
enum class CastType { Integer, Float, String };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Var, Literal, Cmp, And, Or, Not, Cast, Count };

    Kind kind;
    std::string name;       // Var
    Value literal;          // Literal
    CmpOp cmp = CmpOp::Eq;  // Cmp
    CastType cast_type = CastType::Integer;
    bool distinct = false;  // Count
    ExprPtr left, right;    // children (Not/Cast/Count use left)

    static ExprPtr var(std::string name);
    static ExprPtr lit(Value v);
    static ExprPtr cmp(CmpOp op, ExprPtr l, ExprPtr r);
    static ExprPtr band(ExprPtr l, ExprPtr r);
    static ExprPtr bor(ExprPtr l, ExprPtr r);
    static ExprPtr bnot(ExprPtr e);
    static ExprPtr cast(ExprPtr e, CastType t);
    static ExprPtr count(ExprPtr e, bool distinct);
};

bool equal(const ExprPtr& a, const ExprPtr& b);
std::string print(const ExprPtr& expr);
bool contains_aggregate(const ExprPtr& expr);
void collect_variables(const ExprPtr& expr, std::vector<std::string>& out);

// ---------------------------------------------------------------------------
// Return list, order, query
// ---------------------------------------------------------------------------

struct ReturnItem {
    ExprPtr expr;
    std::string alias; // output column name; may contain ';'

    bool operator==(const ReturnItem& o) const { return alias == o.alias && equal(expr, o.expr); }
};

struct ReturnList {
    bool distinct = false;
    std::vector<ReturnItem> items;

    bool operator==(const ReturnList&) const = default;
};

std::string print(const ReturnList& ret);

struct OrderKey {
    ExprPtr expr;
    bool descending = false;

    bool operator==(const OrderKey& o) const {
        return descending == o.descending && equal(expr, o.expr);
    }
};

std::string print(const std::vector<OrderKey>& keys);

struct InputSpec {
    std::string path;                  // as given on the command line
    std::optional<std::string> alias;  // --as
    std::string name;                  // resolved graph name

    bool operator==(const InputSpec&) const = default;
};

struct QuerySpec {
    std::vector<InputSpec> inputs;
    std::vector<PatternClause> match;
    std::vector<std::vector<PatternClause>> optionals;
    ExprPtr where; // null when absent
    ReturnList ret;
    std::vector<OrderKey> order;
    std::optional<std::uint64_t> limit;
};

// All variables bound by the mandatory and optional patterns, in first
// appearance order.
std::vector<std::string> bound_variables(const QuerySpec& spec);

} // namespace kypher
