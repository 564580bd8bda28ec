#include "kypher/oracle.hpp"

#include "kypher/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>

namespace kypher {

namespace {

// Variable environment with undo positions for backtracking.
struct Env {
    std::vector<std::pair<std::string, Value>> bound;

    const Value* find(const std::string& name) const {
        for (const auto& [n, v] : bound)
            if (n == name) return &v;
        return nullptr;
    }

    std::size_t mark() const { return bound.size(); }
    void rollback(std::size_t mark) { bound.resize(mark); }

    // Binds or checks consistency; false on clash.
    bool unify(const std::string& name, const Value& v) {
        if (const Value* existing = find(name)) return *existing == v;
        bound.emplace_back(name, v);
        return true;
    }
};

struct FlatAtom {
    std::string graph;
    std::optional<std::string> src_var, rel_var, dst_var;
    std::optional<Value> src_anchor, rel_anchor, dst_anchor;
    bool single_node = false;
};

std::vector<FlatAtom> flatten(const std::vector<PatternClause>& clauses) {
    std::vector<FlatAtom> atoms;
    for (const PatternClause& clause : clauses) {
        if (!clause.graph) throw SemanticError("oracle requires resolved graph prefixes");
        if (clause.rels.empty()) {
            FlatAtom a;
            a.graph = *clause.graph;
            a.src_var = clause.nodes[0].var;
            a.src_anchor = clause.nodes[0].anchor;
            a.single_node = true;
            atoms.push_back(std::move(a));
            continue;
        }
        for (std::size_t i = 0; i < clause.rels.size(); ++i) {
            FlatAtom a;
            a.graph = *clause.graph;
            const NodePattern& lhs = clause.nodes[i];
            const NodePattern& rhs = clause.nodes[i + 1];
            const NodePattern& src = clause.rels[i].backward ? rhs : lhs;
            const NodePattern& dst = clause.rels[i].backward ? lhs : rhs;
            a.src_var = src.var;
            a.src_anchor = src.anchor;
            a.dst_var = dst.var;
            a.dst_anchor = dst.anchor;
            a.rel_var = clause.rels[i].var;
            a.rel_anchor = clause.rels[i].anchor;
            atoms.push_back(std::move(a));
        }
    }
    return atoms;
}

std::vector<std::string> atom_variables(const FlatAtom& a) {
    std::vector<std::string> out;
    for (const auto* v : {&a.src_var, &a.rel_var, &a.dst_var})
        if (*v) out.push_back(**v);
    return out;
}

// Orders atoms so each one shares a variable with what's already placed
// whenever possible; keeps the enumeration from exploding on chains.
std::vector<std::size_t> connectivity_order(const std::vector<FlatAtom>& atoms) {
    std::vector<std::size_t> order;
    std::vector<bool> used(atoms.size(), false);
    std::set<std::string> seen;
    for (std::size_t round = 0; round < atoms.size(); ++round) {
        std::size_t pick = atoms.size();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (used[i]) continue;
            bool connected = false;
            for (const std::string& v : atom_variables(atoms[i]))
                if (seen.count(v)) connected = true;
            if (connected || round == 0) {
                pick = i;
                break;
            }
            if (pick == atoms.size()) pick = i;
        }
        // fall back to the first unused atom when nothing connects
        for (std::size_t i = 0; pick == atoms.size() && i < atoms.size(); ++i)
            if (!used[i]) pick = i;
        used[pick] = true;
        order.push_back(pick);
        for (const std::string& v : atom_variables(atoms[pick])) seen.insert(v);
    }
    return order;
}

struct Evaluator {
    const std::map<std::string, OracleGraph>& graphs;

    const OracleGraph& graph(const std::string& name) const {
        auto it = graphs.find(name);
        if (it == graphs.end())
            throw SemanticError("oracle has no graph named '" + name + "'");
        return it->second;
    }

    // All rows of the atom's graph that satisfy its constant anchors.
    std::vector<const Record*> candidates(const FlatAtom& atom) const {
        const OracleGraph& g = graph(atom.graph);
        std::vector<const Record*> out;
        for (const Record& row : g.rows) {
            if (atom.src_anchor && !(row[static_cast<std::size_t>(g.schema.node1)] == *atom.src_anchor))
                continue;
            if (!atom.single_node) {
                if (atom.rel_anchor && !(row[static_cast<std::size_t>(g.schema.label)] == *atom.rel_anchor))
                    continue;
                if (atom.dst_anchor && !(row[static_cast<std::size_t>(g.schema.node2)] == *atom.dst_anchor))
                    continue;
            }
            out.push_back(&row);
        }
        return out;
    }

    bool unify_atom(const FlatAtom& atom, const Record& row, Env& env) const {
        const OracleGraph& g = graph(atom.graph);
        if (atom.src_var && !env.unify(*atom.src_var, row[static_cast<std::size_t>(g.schema.node1)]))
            return false;
        if (atom.single_node) return true;
        if (atom.rel_var) {
            if (g.schema.id < 0)
                throw SemanticError("relation variable '" + *atom.rel_var +
                                    "' needs an id column in graph '" + atom.graph + "'");
            if (!env.unify(*atom.rel_var, row[static_cast<std::size_t>(g.schema.id)])) return false;
        }
        if (atom.dst_var && !env.unify(*atom.dst_var, row[static_cast<std::size_t>(g.schema.node2)]))
            return false;
        return true;
    }

    // Depth-first enumeration of consistent bindings.
    void enumerate(const std::vector<FlatAtom>& atoms, const std::vector<std::size_t>& order,
                   std::size_t depth, Env& env, const std::function<void(Env&)>& emit) const {
        if (depth == order.size()) {
            emit(env);
            return;
        }
        const FlatAtom& atom = atoms[order[depth]];
        for (const Record* row : candidates(atom)) {
            std::size_t mark = env.mark();
            if (unify_atom(atom, *row, env))
                enumerate(atoms, order, depth + 1, env, emit);
            env.rollback(mark);
        }
    }

    Value eval(const ExprPtr& e, const Env& env,
               const std::map<std::string, Value>* aliases = nullptr) const {
        switch (e->kind) {
        case Expr::Kind::Var: {
            if (const Value* v = env.find(e->name)) return *v;
            if (aliases) {
                auto it = aliases->find(e->name);
                if (it != aliases->end()) return it->second;
            }
            throw SemanticError("oracle: unbound variable '" + e->name + "'");
        }
        case Expr::Kind::Literal:
            return e->literal;
        case Expr::Kind::Cmp: {
            Value a = eval(e->left, env, aliases), b = eval(e->right, env, aliases);
            if (a.is_empty() || b.is_empty()) return Value::integer(0);
            auto c = compare(a, b);
            bool r = false;
            switch (e->cmp) {
            case CmpOp::Lt: r = c < 0; break;
            case CmpOp::Le: r = c <= 0; break;
            case CmpOp::Gt: r = c > 0; break;
            case CmpOp::Ge: r = c >= 0; break;
            case CmpOp::Eq: r = c == 0; break;
            case CmpOp::Ne: r = c != 0; break;
            }
            return Value::integer(r ? 1 : 0);
        }
        case Expr::Kind::And: {
            if (!is_true(eval(e->left, env, aliases))) return Value::integer(0);
            return Value::integer(is_true(eval(e->right, env, aliases)) ? 1 : 0);
        }
        case Expr::Kind::Or: {
            if (is_true(eval(e->left, env, aliases))) return Value::integer(1);
            return Value::integer(is_true(eval(e->right, env, aliases)) ? 1 : 0);
        }
        case Expr::Kind::Not:
            return Value::integer(is_true(eval(e->left, env, aliases)) ? 0 : 1);
        case Expr::Kind::Cast: {
            Value v = eval(e->left, env, aliases);
            if (v.is_empty()) return Value();
            switch (e->cast_type) {
            case CastType::Integer: {
                if (v.is_number()) {
                    if (v.is_integer()) return v;
                    double d = std::trunc(v.as_double());
                    if (d < -9.2e18 || d > 9.2e18) return Value();
                    return Value::integer(static_cast<std::int64_t>(d));
                }
                try {
                    Value n = Value::parse(v.content());
                    if (!n.is_number()) return Value();
                    if (n.is_integer()) return n;
                    double d = std::trunc(n.as_double());
                    if (d < -9.2e18 || d > 9.2e18) return Value();
                    return Value::integer(static_cast<std::int64_t>(d));
                } catch (const Error&) {
                    return Value();
                }
            }
            case CastType::Float: {
                if (v.is_number()) return v;
                try {
                    Value n = Value::parse(v.content());
                    return n.is_number() ? n : Value();
                } catch (const Error&) {
                    return Value();
                }
            }
            case CastType::String:
                return Value::string(v.content());
            }
            return Value();
        }
        case Expr::Kind::Count:
            throw SemanticError("oracle: aggregate in scalar position");
        }
        throw SemanticError("oracle: unreachable expression");
    }

    static bool is_true(const Value& v) { return v.is_number() && v.as_double() != 0.0; }
};

struct KeyLess {
    bool operator()(const Record& a, const Record& b) const {
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
            auto c = compare(a[i], b[i]);
            if (c != 0) return c < 0;
        }
        return a.size() < b.size();
    }
};

} // namespace

OracleResult oracle_query(const QuerySpec& spec, const std::map<std::string, OracleGraph>& graphs) {
    Evaluator ev{graphs};

    std::vector<FlatAtom> mandatory = flatten(spec.match);
    std::vector<std::vector<FlatAtom>> groups;
    for (const auto& g : spec.optionals) groups.push_back(flatten(g));

    // 1. all consistent bindings of the mandatory pattern
    std::vector<Env> solutions;
    if (mandatory.empty()) throw SemanticError("oracle: empty match pattern");
    {
        Env env;
        auto order = connectivity_order(mandatory);
        ev.enumerate(mandatory, order, 0, env, [&](Env& e) { solutions.push_back(e); });
    }

    // 2. optional groups: every extension, or Empty-padded when unmatched
    for (const std::vector<FlatAtom>& group : groups) {
        std::vector<std::string> group_vars;
        for (const FlatAtom& a : group)
            for (const std::string& v : atom_variables(a))
                if (std::find(group_vars.begin(), group_vars.end(), v) == group_vars.end())
                    group_vars.push_back(v);

        std::vector<Env> extended;
        auto order = connectivity_order(group);
        for (Env& base : solutions) {
            std::size_t before = extended.size();
            Env env = base;
            ev.enumerate(group, order, 0, env, [&](Env& e) { extended.push_back(e); });
            if (extended.size() == before) {
                Env padded = base;
                for (const std::string& v : group_vars)
                    if (!padded.find(v)) padded.bound.emplace_back(v, Value());
                extended.push_back(std::move(padded));
            }
        }
        solutions = std::move(extended);
    }

    // 3. where
    if (spec.where) {
        std::vector<Env> kept;
        for (Env& env : solutions)
            if (Evaluator::is_true(ev.eval(spec.where, env))) kept.push_back(std::move(env));
        solutions = std::move(kept);
    }

    // 4. projection / aggregation
    OracleResult result;
    for (const ReturnItem& item : spec.ret.items) result.columns.push_back(item.alias);

    bool has_agg = false;
    for (const ReturnItem& item : spec.ret.items)
        if (contains_aggregate(item.expr)) has_agg = true;

    // representative binding per emitted row, for order-by over variables
    std::vector<Env> row_envs;

    if (!has_agg) {
        for (Env& env : solutions) {
            Record row;
            for (const ReturnItem& item : spec.ret.items) row.push_back(ev.eval(item.expr, env));
            result.rows.push_back(std::move(row));
            row_envs.push_back(std::move(env));
        }
    } else {
        struct GroupState {
            Record keys;
            Env env; // first binding of the group
            std::vector<std::uint64_t> counts;
            std::vector<std::set<std::string>> distincts;
        };
        std::vector<GroupState> group_list;
        std::map<Record, std::size_t, KeyLess> group_index;

        std::vector<const ReturnItem*> aggs;
        for (const ReturnItem& item : spec.ret.items) {
            if (contains_aggregate(item.expr)) {
                if (item.expr->kind != Expr::Kind::Count)
                    throw SemanticError("count(...) must be the whole return expression");
                aggs.push_back(&item);
            }
        }

        for (Env& env : solutions) {
            Record keys;
            for (const ReturnItem& item : spec.ret.items)
                if (!contains_aggregate(item.expr)) keys.push_back(ev.eval(item.expr, env));
            auto [it, fresh] = group_index.try_emplace(keys, group_list.size());
            if (fresh) {
                GroupState g;
                g.keys = keys;
                g.env = env;
                g.counts.assign(aggs.size(), 0);
                g.distincts.resize(aggs.size());
                group_list.push_back(std::move(g));
            }
            GroupState& g = group_list[it->second];
            for (std::size_t a = 0; a < aggs.size(); ++a) {
                Value v = ev.eval(aggs[a]->expr->left, env);
                if (v.is_empty()) continue;
                if (aggs[a]->expr->distinct) g.distincts[a].insert(v.format());
                else ++g.counts[a];
            }
        }

        if (group_list.empty() && aggs.size() == spec.ret.items.size()) {
            GroupState g;
            g.counts.assign(aggs.size(), 0);
            g.distincts.resize(aggs.size());
            group_list.push_back(std::move(g));
        }

        for (GroupState& g : group_list) {
            Record row;
            std::size_t key_i = 0, agg_i = 0;
            for (const ReturnItem& item : spec.ret.items) {
                if (contains_aggregate(item.expr)) {
                    std::uint64_t n = item.expr->distinct ? g.distincts[agg_i].size()
                                                          : g.counts[agg_i];
                    ++agg_i;
                    row.push_back(Value::integer(static_cast<std::int64_t>(n)));
                } else {
                    row.push_back(g.keys[key_i++]);
                }
            }
            result.rows.push_back(std::move(row));
            row_envs.push_back(std::move(g.env));
        }
    }

    // 5. distinct
    if (spec.ret.distinct) {
        std::set<Record, KeyLess> seen;
        std::vector<Record> rows;
        std::vector<Env> envs;
        for (std::size_t i = 0; i < result.rows.size(); ++i) {
            if (seen.insert(result.rows[i]).second) {
                rows.push_back(result.rows[i]);
                envs.push_back(row_envs[i]);
            }
        }
        result.rows = std::move(rows);
        row_envs = std::move(envs);
    }

    // 6. order-by (aliases first for bare names, then variables)
    if (!spec.order.empty()) {
        std::vector<std::size_t> order(result.rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        auto key_value = [&](std::size_t row, const OrderKey& key) {
            std::map<std::string, Value> aliases;
            for (std::size_t c = 0; c < result.columns.size(); ++c)
                aliases[result.columns[c]] = result.rows[row][c];
            if (key.expr->kind == Expr::Kind::Var && aliases.count(key.expr->name))
                return aliases[key.expr->name];
            return ev.eval(key.expr, row_envs[row], &aliases);
        };

        std::vector<Record> keys(result.rows.size());
        for (std::size_t i = 0; i < result.rows.size(); ++i)
            for (const OrderKey& k : spec.order) keys[i].push_back(key_value(i, k));

        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            for (std::size_t k = 0; k < spec.order.size(); ++k) {
                auto c = compare(keys[a][k], keys[b][k]);
                if (c == 0) continue;
                return spec.order[k].descending ? c > 0 : c < 0;
            }
            return false;
        });
        std::vector<Record> sorted;
        sorted.reserve(result.rows.size());
        for (std::size_t i : order) sorted.push_back(std::move(result.rows[i]));
        result.rows = std::move(sorted);
    }

    // 7. limit
    if (spec.limit && result.rows.size() > *spec.limit) result.rows.resize(*spec.limit);

    return result;
}

} // namespace kypher
