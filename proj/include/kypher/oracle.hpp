#pragma once

#include "kypher/ast.hpp"
#include "kypher/schema.hpp"

#include <map>
#include <string>
#include <vector>

namespace kypher {

// In-memory graph for the brute-force oracle.
struct OracleGraph {
    ColumnSchema schema;
    std::vector<Record> rows;
};

struct OracleResult {
    std::vector<std::string> columns;
    std::vector<Record> rows;
};

// Brute-force reference evaluator: enumerates all clause-binding
// combinations with variable-consistency filtering, then applies where,
// grouping/aggregation, distinct, order-by and limit. Shares the AST and
// value types with the engine but none of the planner/executor code. Only
// suitable for small graphs.
OracleResult oracle_query(const QuerySpec& spec,
                          const std::map<std::string, OracleGraph>& graphs);

} // namespace kypher
