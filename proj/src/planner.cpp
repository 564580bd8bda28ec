#include "kypher/planner.hpp"

#include "kypher/error.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

namespace kypher {

namespace {

// One edge pattern, direction-normalized: src -> dst in storage terms.
struct Atom {
    std::string graph;
    NodePattern src;
    RelPattern rel;
    NodePattern dst;
    bool single_node = false; // bare (x) clause: binds node1 only
    bool optional_group_member = false;
};

std::vector<Atom> decompose(const std::vector<PatternClause>& clauses, bool optional_member) {
    std::vector<Atom> atoms;
    for (const PatternClause& clause : clauses) {
        assert(clause.graph.has_value());
        if (clause.rels.empty()) {
            Atom a;
            a.graph = *clause.graph;
            a.src = clause.nodes[0];
            a.single_node = true;
            a.optional_group_member = optional_member;
            atoms.push_back(std::move(a));
            continue;
        }
        for (std::size_t i = 0; i < clause.rels.size(); ++i) {
            Atom a;
            a.graph = *clause.graph;
            a.rel = clause.rels[i];
            if (a.rel.backward) {
                a.src = clause.nodes[i + 1];
                a.dst = clause.nodes[i];
                a.rel.backward = false;
            } else {
                a.src = clause.nodes[i];
                a.dst = clause.nodes[i + 1];
            }
            a.optional_group_member = optional_member;
            atoms.push_back(std::move(a));
        }
    }
    return atoms;
}

std::vector<std::string> atom_vars(const Atom& a) {
    std::vector<std::string> vars;
    auto add = [&vars](const std::optional<std::string>& v) {
        if (v && std::find(vars.begin(), vars.end(), *v) == vars.end()) vars.push_back(*v);
    };
    add(a.src.var);
    add(a.rel.var);
    add(a.dst.var);
    return vars;
}

int anchor_count(const Atom& a) {
    return (a.src.anchor ? 1 : 0) + (a.rel.anchor ? 1 : 0) + (a.dst.anchor ? 1 : 0);
}

// A scan under construction, before joins.
struct ScanBuild {
    PlanPtr node;
    std::vector<std::string> vars;     // output variables
    std::vector<ExprPtr> post_filters; // pushdown-off anchor predicates
    std::uint64_t estimate = 1;
    int constraints = 0;
    std::size_t ordinal = 0; // position in atom order, for deterministic ties
};

struct Compiler {
    const ResolvedQuery& query;
    const PlannerOptions& options;
    LogicalPlan plan;
    std::vector<std::string> needed; // variables that must survive scans
    int synthetic = 0;

    const GraphDescriptor& descriptor(const std::string& graph) const {
        auto it = query.graphs.find(graph);
        if (it == query.graphs.end())
            throw SemanticError("graph '" + graph + "' was not resolved");
        return it->second;
    }

    bool is_needed(const std::string& var) const {
        return std::find(needed.begin(), needed.end(), var) != needed.end();
    }

    void compute_needed(const std::vector<Atom>& all_atoms) {
        auto add = [this](const std::string& v) {
            if (!is_needed(v)) needed.push_back(v);
        };
        std::vector<std::string> used;
        for (const ReturnItem& item : query.spec.ret.items) collect_variables(item.expr, used);
        if (query.spec.where) collect_variables(query.spec.where, used);
        for (const OrderKey& key : query.spec.order) collect_variables(key.expr, used);
        for (const std::string& v : used) add(v);

        // shared variables are join keys
        std::map<std::string, int> occurrences;
        for (const Atom& a : all_atoms)
            for (const std::string& v : atom_vars(a)) ++occurrences[v];
        for (const auto& [v, n] : occurrences)
            if (n > 1) add(v);
    }

    ScanBuild build_scan(const Atom& atom, std::size_t ordinal) {
        const GraphDescriptor& desc = descriptor(atom.graph);
        ColumnSchema schema = ColumnSchema::from_columns(desc.columns, false);

        auto node = std::make_unique<PlanNode>();
        node->op = PlanNode::Op::Scan;
        node->graph = atom.graph;

        ScanBuild build;
        build.ordinal = ordinal;
        build.constraints = anchor_count(atom);

        // (variable, table column, anchor) triples in storage order
        struct Slot {
            const std::optional<std::string>* var;
            const std::optional<Value>* anchor;
            const char* column;
        };
        std::vector<Slot> slots;
        slots.push_back({&atom.src.var, &atom.src.anchor, "node1"});
        if (!atom.single_node) {
            slots.push_back({&atom.rel.var, &atom.rel.anchor, "id"});
            slots.push_back({&atom.dst.var, &atom.dst.anchor, "node2"});
        }

        for (const Slot& slot : slots) {
            std::string column = slot.column;
            if (column == "id") {
                // the relation variable binds the edge id; the label anchor
                // constrains the label column
                if (*slot.anchor)
                    add_constraint(*node, build, "label", **slot.anchor);
                if (*slot.var) {
                    if (schema.id < 0)
                        throw SemanticError("relation variable '" + **slot.var + "' needs an id column in graph '" +
                                            atom.graph + "'");
                    bind_var(*node, **slot.var, "id");
                }
                continue;
            }
            if (*slot.anchor) add_constraint(*node, build, column, **slot.anchor);
            if (*slot.var) bind_var(*node, **slot.var, column);
        }

        for (const auto& [var, column] : node->binds) {
            plan.bindings[var].emplace_back(atom.graph, column);
            if (is_needed(var) || var.rfind("#c", 0) == 0) {
                if (std::find(node->columns.begin(), node->columns.end(), var) ==
                    node->columns.end()) {
                    node->columns.push_back(var);
                    build.vars.push_back(var);
                }
            }
        }

        std::uint64_t est = desc.edge_count;
        for (int i = 0; i < build.constraints; ++i) est /= 4;
        build.estimate = est + 1;
        node->table_rows = desc.edge_count;
        build.node = std::move(node);
        return build;
    }

    void add_constraint(PlanNode& node, ScanBuild& build, const std::string& column,
                        const Value& value) {
        if (options.pushdown) {
            node.constraints.push_back({column, value});
            return;
        }
        // pushdown off: bind a variable (synthetic when anonymous) and
        // filter later
        std::string var;
        for (const auto& [v, c] : node.binds)
            if (c == column) var = v;
        if (var.empty()) {
            var = "#c" + std::to_string(synthetic++);
            bind_var(node, var, column);
        }
        build.post_filters.push_back(Expr::cmp(CmpOp::Eq, Expr::var(var), Expr::lit(value)));
    }

    void bind_var(PlanNode& node, const std::string& var, const std::string& column) {
        for (const auto& [v, c] : node.binds) {
            if (v == var) {
                node.self_eq.emplace_back(c, column);
                return;
            }
        }
        node.binds.emplace_back(var, column);
    }

    static std::vector<std::string> shared_vars(const std::vector<std::string>& a,
                                                const std::vector<std::string>& b) {
        std::vector<std::string> out;
        for (const std::string& v : a)
            if (std::find(b.begin(), b.end(), v) != b.end()) out.push_back(v);
        return out;
    }

    // Greedy order: most anchored scan first (ties: smaller estimate, then
    // clause order), then repeatedly attach the best-scored scan sharing a
    // variable; disconnected scans cross-join last.
    std::vector<std::size_t> greedy_order(const std::vector<ScanBuild>& scans) {
        auto better = [&](std::size_t a, std::size_t b) {
            if (scans[a].constraints != scans[b].constraints)
                return scans[a].constraints > scans[b].constraints;
            if (scans[a].estimate != scans[b].estimate)
                return scans[a].estimate < scans[b].estimate;
            return scans[a].ordinal < scans[b].ordinal;
        };
        std::vector<std::size_t> order;
        std::vector<bool> used(scans.size(), false);
        std::vector<std::string> bound;
        for (std::size_t round = 0; round < scans.size(); ++round) {
            std::size_t best = scans.size();
            bool best_connected = false;
            for (std::size_t i = 0; i < scans.size(); ++i) {
                if (used[i]) continue;
                bool connected = !shared_vars(bound, scans[i].vars).empty() || round == 0;
                if (best == scans.size() || (connected && !best_connected) ||
                    (connected == best_connected && better(i, best))) {
                    best = i;
                    best_connected = connected;
                }
            }
            used[best] = true;
            order.push_back(best);
            for (const std::string& v : scans[best].vars)
                if (std::find(bound.begin(), bound.end(), v) == bound.end()) bound.push_back(v);
        }
        return order;
    }

    // Left-deep join tree over the scans in `order`.
    std::pair<PlanPtr, std::vector<std::string>> join_tree(std::vector<ScanBuild>& scans,
                                                           const std::vector<std::size_t>& order,
                                                           const char* what) {
        PlanPtr current = std::move(scans[order[0]].node);
        std::vector<std::string> vars = scans[order[0]].vars;
        for (std::size_t k = 1; k < order.size(); ++k) {
            ScanBuild& next = scans[order[k]];
            std::vector<std::string> on = shared_vars(vars, next.vars);
            if (on.empty())
                plan.warnings.push_back(std::string("cross product between ") + what +
                                        " pattern elements (no shared variable)");
            auto join = std::make_unique<PlanNode>();
            join->op = PlanNode::Op::Join;
            join->join_vars = on;
            join->columns = current->columns;
            for (const std::string& c : next.node->columns)
                if (std::find(join->columns.begin(), join->columns.end(), c) == join->columns.end())
                    join->columns.push_back(c);
            join->left = std::move(current);
            join->right = std::move(next.node);
            current = std::move(join);
            for (const std::string& v : next.vars)
                if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
        }
        return {std::move(current), std::move(vars)};
    }

    static PlanPtr add_filter(PlanPtr child, ExprPtr predicate) {
        auto node = std::make_unique<PlanNode>();
        node->op = PlanNode::Op::Filter;
        node->columns = child->columns;
        node->predicate = std::move(predicate);
        node->left = std::move(child);
        return node;
    }

    static ExprPtr conjoin(const std::vector<ExprPtr>& parts) {
        ExprPtr out;
        for (const ExprPtr& p : parts) out = out ? Expr::band(out, p) : p;
        return out;
    }

    static void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
        if (e && e->kind == Expr::Kind::And) {
            flatten_and(e->left, out);
            flatten_and(e->right, out);
            return;
        }
        if (e) out.push_back(e);
    }

    LogicalPlan run() {
        const QuerySpec& spec = query.spec;
        std::vector<Atom> mandatory = decompose(spec.match, false);
        std::vector<std::vector<Atom>> groups;
        for (const auto& group : spec.optionals) groups.push_back(decompose(group, true));

        std::vector<Atom> all_atoms = mandatory;
        for (const auto& g : groups) all_atoms.insert(all_atoms.end(), g.begin(), g.end());
        compute_needed(all_atoms);

        // mandatory scans
        std::vector<ScanBuild> scans;
        for (std::size_t i = 0; i < mandatory.size(); ++i) scans.push_back(build_scan(mandatory[i], i));

        std::vector<std::string> mandatory_vars;
        for (const Atom& a : mandatory)
            for (const std::string& v : atom_vars(a))
                if (std::find(mandatory_vars.begin(), mandatory_vars.end(), v) ==
                    mandatory_vars.end())
                    mandatory_vars.push_back(v);

        // split where into single-scan, cross-scan and optional-dependent
        std::vector<ExprPtr> conjuncts;
        flatten_and(spec.where, conjuncts);
        std::vector<ExprPtr> above_joins, above_outer;
        for (const ExprPtr& c : conjuncts) {
            std::vector<std::string> used;
            collect_variables(c, used);
            bool touches_optional = std::any_of(used.begin(), used.end(), [&](const std::string& v) {
                return std::find(mandatory_vars.begin(), mandatory_vars.end(), v) ==
                       mandatory_vars.end();
            });
            if (touches_optional) {
                above_outer.push_back(c);
                continue;
            }
            bool pushed = false;
            if (options.pushdown) {
                for (ScanBuild& s : scans) {
                    auto covers = [&](const std::string& v) {
                        return std::find(s.vars.begin(), s.vars.end(), v) != s.vars.end();
                    };
                    if (!used.empty() && std::all_of(used.begin(), used.end(), covers)) {
                        s.post_filters.push_back(c);
                        pushed = true;
                        break;
                    }
                }
            }
            if (!pushed) above_joins.push_back(c);
        }

        // anchor predicates (pushdown off) and pushed conjuncts sit directly
        // above their scan
        for (ScanBuild& s : scans)
            if (!s.post_filters.empty()) s.node = add_filter(std::move(s.node), conjoin(s.post_filters));

        std::vector<std::size_t> order;
        if (options.join_order) {
            order = *options.join_order;
            if (order.size() != scans.size())
                throw SemanticError("join_order must list every mandatory pattern element once");
        } else {
            order = greedy_order(scans);
        }
        auto [root, vars] = join_tree(scans, order, "match");

        if (ExprPtr f = conjoin(above_joins)) root = add_filter(std::move(root), f);

        // optional groups become left outer joins
        for (std::vector<Atom>& group : groups) {
            std::vector<ScanBuild> gscans;
            for (std::size_t i = 0; i < group.size(); ++i) gscans.push_back(build_scan(group[i], i));
            for (ScanBuild& s : gscans)
                if (!s.post_filters.empty())
                    s.node = add_filter(std::move(s.node), conjoin(s.post_filters));
            auto gorder = greedy_order(gscans);
            auto [gtree, gvars] = join_tree(gscans, gorder, "optional");

            auto outer = std::make_unique<PlanNode>();
            outer->op = PlanNode::Op::LeftOuterJoin;
            outer->join_vars = shared_vars(root->columns, gtree->columns);
            if (outer->join_vars.empty())
                plan.warnings.push_back("optional group shares no variable with the match "
                                        "pattern (cross product)");
            outer->columns = root->columns;
            for (const std::string& c : gtree->columns)
                if (std::find(outer->columns.begin(), outer->columns.end(), c) ==
                    outer->columns.end())
                    outer->columns.push_back(c);
            outer->left = std::move(root);
            outer->right = std::move(gtree);
            root = std::move(outer);
        }

        if (ExprPtr f = conjoin(above_outer)) root = add_filter(std::move(root), f);

        root = add_projection(std::move(root));
        if (spec.ret.distinct) {
            auto node = std::make_unique<PlanNode>();
            node->op = PlanNode::Op::Distinct;
            node->columns = root->columns;
            node->left = std::move(root);
            root = std::move(node);
        }
        root = add_sort(std::move(root));
        if (spec.limit) {
            auto node = std::make_unique<PlanNode>();
            node->op = PlanNode::Op::Limit;
            node->limit = *spec.limit;
            node->columns = root->columns;
            node->left = std::move(root);
            root = std::move(node);
        }

        for (const ReturnItem& item : spec.ret.items) plan.output_columns.push_back(item.alias);
        plan.root = std::move(root);
        return std::move(plan);
    }

    // Rewrites order-by expressions against the projected row: bare aliases
    // stay, bound variables become '#v:' carried columns.
    struct SortPrep {
        std::vector<PlanNode::SortKey> keys;
        std::vector<std::string> hidden_vars; // in first-use order
    };

    SortPrep prepare_sort() const {
        SortPrep prep;
        std::set<std::string> aliases;
        for (const ReturnItem& item : query.spec.ret.items) aliases.insert(item.alias);
        std::vector<std::string> bound = bound_variables(query.spec);
        auto is_bound = [&bound](const std::string& v) {
            return std::find(bound.begin(), bound.end(), v) != bound.end();
        };

        std::function<ExprPtr(const ExprPtr&)> rewrite = [&](const ExprPtr& e) -> ExprPtr {
            if (e->kind == Expr::Kind::Var) {
                if (is_bound(e->name)) {
                    if (std::find(prep.hidden_vars.begin(), prep.hidden_vars.end(), e->name) ==
                        prep.hidden_vars.end())
                        prep.hidden_vars.push_back(e->name);
                    return Expr::var("#v:" + e->name);
                }
                return e; // alias reference
            }
            auto copy = std::make_shared<Expr>(*e);
            if (e->left) copy->left = rewrite(e->left);
            if (e->right) copy->right = rewrite(e->right);
            return copy;
        };

        for (const OrderKey& key : query.spec.order) {
            PlanNode::SortKey out;
            out.descending = key.descending;
            if (key.expr->kind == Expr::Kind::Var && aliases.count(key.expr->name)) {
                out.expr = key.expr; // output column reference
            } else {
                out.expr = rewrite(key.expr);
            }
            prep.keys.push_back(std::move(out));
        }
        return prep;
    }

    PlanPtr add_projection(PlanPtr child) {
        const QuerySpec& spec = query.spec;
        bool has_agg = false;
        for (const ReturnItem& item : spec.ret.items)
            if (contains_aggregate(item.expr)) has_agg = true;

        SortPrep prep = prepare_sort();
        if (!prep.hidden_vars.empty() && spec.ret.distinct)
            throw SemanticError("order-by under distinct must reference return aliases only");
        pending_sort_ = std::move(prep.keys);

        auto node = std::make_unique<PlanNode>();
        node->op = has_agg ? PlanNode::Op::Aggregate : PlanNode::Op::Project;
        node->visible = spec.ret.items.size();

        for (const ReturnItem& item : spec.ret.items) {
            PlanNode::Item out;
            out.name = item.alias;
            if (contains_aggregate(item.expr)) {
                if (item.expr->kind != Expr::Kind::Count)
                    throw SemanticError("count(...) must be the whole return expression in '" +
                                        print(item.expr) + "'");
                out.aggregate = true;
                out.count_distinct = item.expr->distinct;
                out.expr = item.expr->left;
            } else {
                out.expr = item.expr;
            }
            node->items.push_back(std::move(out));
        }

        for (const std::string& var : prep.hidden_vars) {
            if (has_agg) {
                bool grouped = std::any_of(
                    spec.ret.items.begin(), spec.ret.items.end(), [&](const ReturnItem& item) {
                        return !contains_aggregate(item.expr) &&
                               item.expr->kind == Expr::Kind::Var && item.expr->name == var;
                    });
                if (!grouped)
                    throw SemanticError("order-by variable '" + var +
                                        "' is not a grouped return item");
            }
            PlanNode::Item out;
            out.name = "#v:" + var;
            out.expr = Expr::var(var);
            node->items.push_back(std::move(out));
        }

        for (const PlanNode::Item& item : node->items) node->columns.push_back(item.name);
        node->left = std::move(child);
        return node;
    }

    PlanPtr add_sort(PlanPtr child) {
        if (pending_sort_.empty()) return child;
        auto node = std::make_unique<PlanNode>();
        node->op = PlanNode::Op::Sort;
        node->sort_keys = std::move(pending_sort_);
        node->columns = child->columns;
        node->left = std::move(child);
        return node;
    }

    std::vector<PlanNode::SortKey> pending_sort_;
};

} // namespace

ResolvedQuery bind_graphs(const QuerySpec& spec, const GraphCache& cache) {
    ResolvedQuery out;
    out.spec = spec;

    std::vector<std::string> available;
    for (const InputSpec& in : spec.inputs) available.push_back(in.name);

    auto resolve = [&](const std::vector<PatternClause>& clauses) {
        for (const PatternClause& clause : clauses) {
            const std::string& g = *clause.graph;
            if (std::find(available.begin(), available.end(), g) == available.end()) {
                std::string names;
                for (std::size_t i = 0; i < available.size(); ++i)
                    names += (i ? ", " : "") + available[i];
                throw SemanticError("unknown graph '" + g + "'; inputs are {" + names + "}");
            }
            if (out.graphs.count(g)) continue;
            auto desc = cache.find(g);
            if (!desc)
                throw SemanticError("graph '" + g + "' has not been imported into the cache");
            out.graphs.emplace(g, *desc);
        }
    };
    resolve(spec.match);
    for (const auto& group : spec.optionals) resolve(group);
    return out;
}

LogicalPlan compile(const ResolvedQuery& query, const PlannerOptions& options) {
    Compiler compiler{query, options, {}, {}, 0, {}};
    return compiler.run();
}

std::set<std::pair<std::string, std::string>> required_indexes(const LogicalPlan& plan) {
    std::set<std::pair<std::string, std::string>> out;
    std::function<void(const PlanNode*)> walk = [&](const PlanNode* node) {
        if (!node) return;
        if (node->op == PlanNode::Op::Scan) {
            for (const PlanNode::Constraint& c : node->constraints) out.emplace(node->graph, c.column);
        }
        if (node->op == PlanNode::Op::Join || node->op == PlanNode::Op::LeftOuterJoin) {
            for (const std::string& var : node->join_vars) {
                auto it = plan.bindings.find(var);
                if (it != plan.bindings.end())
                    for (const auto& gc : it->second) out.insert(gc);
            }
        }
        walk(node->left.get());
        walk(node->right.get());
    };
    walk(plan.root.get());
    return out;
}

} // namespace kypher
