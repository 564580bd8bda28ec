#pragma once

#include "kypher/ast.hpp"
#include "kypher/cache.hpp"
#include "kypher/plan.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kypher {

// QuerySpec whose clause graphs have been resolved against cache
// descriptors.
struct ResolvedQuery {
    QuerySpec spec;
    std::map<std::string, GraphDescriptor> graphs; // graph name -> descriptor
};

struct PlannerOptions {
    // Push constant anchors and single-scan predicates down into scans. Off,
    // they evaluate as filters above the join tree; results are identical.
    bool pushdown = true;

    // Forces the mandatory scans to join left-deep in this order (indexes
    // into the scan list as produced by clause order). Used by the
    // differential tests; the default is a greedy heuristic.
    std::optional<std::vector<std::size_t>> join_order;
};

// Resolves every clause's graph prefix to an imported graph. Unknown
// prefixes raise SemanticError listing the available names.
ResolvedQuery bind_graphs(const QuerySpec& spec, const GraphCache& cache);

// Compiles a resolved query to a relational plan: scans with pushed-down
// anchors, joins over shared variables (greedy most-constrained-first
// order), where-predicate placement, left outer joins for optional groups,
// aggregation/projection, distinct, sort, limit.
LogicalPlan compile(const ResolvedQuery& query, const PlannerOptions& options = {});

} // namespace kypher
