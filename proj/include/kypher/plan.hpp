#pragma once

#include "kypher/ast.hpp"
#include "kypher/cache.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace kypher {

// Relational operator tree compiled from a QuerySpec. Column identity is by
// name: variable names below the projection boundary, output aliases (plus
// '#v:'-prefixed carried variables) above it.
struct PlanNode {
    enum class Op { Scan, Join, LeftOuterJoin, Filter, Project, Aggregate, Distinct, Sort, Limit };

    struct Constraint {
        std::string column; // table column (node1/label/node2/id)
        Value value;
    };

    struct Item {
        ExprPtr expr;
        std::string name;
        bool aggregate = false;      // count(...)
        bool count_distinct = false; // count(distinct ...)
    };

    struct SortKey {
        ExprPtr expr; // references child columns by name
        bool descending = false;
    };

    Op op;
    std::vector<std::string> columns; // output columns, in order

    // Scan
    std::string graph;
    std::uint64_t table_rows = 0; // descriptor edge count, for size estimates
    std::vector<Constraint> constraints;
    std::vector<std::pair<std::string, std::string>> binds;   // var -> table column
    std::vector<std::pair<std::string, std::string>> self_eq; // intra-row column equalities

    // Join / LeftOuterJoin
    std::vector<std::string> join_vars;

    // Filter
    ExprPtr predicate;

    // Project / Aggregate
    std::vector<Item> items;
    std::size_t visible = 0; // leading items that are user-facing

    // Sort
    std::vector<SortKey> sort_keys;

    // Limit
    std::uint64_t limit = 0;

    std::unique_ptr<PlanNode> left, right;
};

using PlanPtr = std::unique_ptr<PlanNode>;

// variable -> every (graph, table column) position it occupies
using BindingMap = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

struct LogicalPlan {
    PlanPtr root;
    std::vector<std::string> output_columns; // return aliases, in order
    BindingMap bindings;
    std::vector<std::string> warnings; // e.g. cross products
};

// Stable one-operator-per-line rendering used by --explain and tests.
std::string explain(const LogicalPlan& plan);

// Indexes the executor wants before running: every join-equality column and
// every pushed-down constant-constraint column.
std::set<std::pair<std::string, std::string>> required_indexes(const LogicalPlan& plan);

} // namespace kypher
