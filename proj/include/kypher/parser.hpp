#pragma once

#include "kypher/ast.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kypher {

// Parses a --match / --opt pattern text: comma-separated, optionally
// graph-qualified chains. `#` starts a comment running to end of line.
std::vector<PatternClause> parse_match(const std::string& text);

// Parses a --where expression. Aggregates are rejected here.
ExprPtr parse_expression(const std::string& text);

// Parses a --return list: optional leading `distinct`, items `expr [as
// alias]`. Aliases default to the printed expression.
ReturnList parse_return(const std::string& text);

// Parses an --order-by list: `expr [asc|desc]`, comma separated.
std::vector<OrderKey> parse_order(const std::string& text);

// Assembles and validates a full query: resolves input names, applies
// graph-prefix inheritance, checks that every variable used in where,
// return and order-by is bound (order-by may also reference return
// aliases).
QuerySpec assemble_query(std::vector<InputSpec> inputs, const std::string& match_text,
                         const std::vector<std::string>& opt_texts,
                         const std::optional<std::string>& where_text,
                         const std::string& return_text,
                         const std::optional<std::string>& order_text,
                         std::optional<std::uint64_t> limit);

} // namespace kypher
