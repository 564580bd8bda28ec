#include "kypher/plan.hpp"

namespace kypher {

namespace {

void render(const PlanNode* node, int depth, std::string& out) {
    if (!node) return;
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    switch (node->op) {
    case PlanNode::Op::Scan: {
        out += "Scan graph=" + node->graph;
        out += " constraints=[";
        for (std::size_t i = 0; i < node->constraints.size(); ++i) {
            if (i) out += ", ";
            out += node->constraints[i].column + "=" + node->constraints[i].value.format();
        }
        out += "] binds=[";
        for (std::size_t i = 0; i < node->binds.size(); ++i) {
            if (i) out += ", ";
            out += node->binds[i].first + ":" + node->binds[i].second;
        }
        out += "]";
        for (const auto& [a, b] : node->self_eq) out += " self[" + a + "=" + b + "]";
        break;
    }
    case PlanNode::Op::Join:
    case PlanNode::Op::LeftOuterJoin: {
        out += node->op == PlanNode::Op::Join ? "Join on=[" : "LeftOuterJoin on=[";
        for (std::size_t i = 0; i < node->join_vars.size(); ++i) {
            if (i) out += ", ";
            out += node->join_vars[i];
        }
        out += "]";
        break;
    }
    case PlanNode::Op::Filter:
        out += "Filter " + print(node->predicate);
        break;
    case PlanNode::Op::Project:
    case PlanNode::Op::Aggregate: {
        out += node->op == PlanNode::Op::Project ? "Project [" : "Aggregate [";
        for (std::size_t i = 0; i < node->items.size(); ++i) {
            const PlanNode::Item& item = node->items[i];
            if (i) out += ", ";
            if (i == node->visible) out += "| ";
            if (item.aggregate)
                out += std::string("count(") + (item.count_distinct ? "distinct " : "") +
                       print(item.expr) + ")";
            else
                out += print(item.expr);
            out += " as " + item.name;
        }
        out += "]";
        break;
    }
    case PlanNode::Op::Distinct:
        out += "Distinct";
        break;
    case PlanNode::Op::Sort: {
        out += "Sort keys=[";
        for (std::size_t i = 0; i < node->sort_keys.size(); ++i) {
            if (i) out += ", ";
            out += print(node->sort_keys[i].expr);
            out += node->sort_keys[i].descending ? " desc" : " asc";
        }
        out += "]";
        break;
    }
    case PlanNode::Op::Limit:
        out += "Limit n=" + std::to_string(node->limit);
        break;
    }
    out += "\n";
    render(node->left.get(), depth + 1, out);
    render(node->right.get(), depth + 1, out);
}

} // namespace

std::string explain(const LogicalPlan& plan) {
    std::string out;
    render(plan.root.get(), 0, out);
    auto indexes = required_indexes(plan);
    out += "required indexes:";
    if (indexes.empty()) out += " none";
    out += "\n";
    for (const auto& [graph, column] : indexes) out += "  " + graph + "." + column + "\n";
    return out;
}

} // namespace kypher
