/**
 * S-expression rendering of expressions, atoms, terms and formulas, e.g.
 * `(and (<= (+ x y) 1) (or A (not B)))`. Rationals print as `p/q`.
 */
#ifndef WMIPFV_PRINTING_HPP
#define WMIPFV_PRINTING_HPP

#include <sstream>
#include <string>

#include "logic.hpp"

namespace wmipfv {

inline std::string to_string(const LinearExpr& e)
{
    std::vector<std::string> items;
    for (const auto& [v, c] : e.terms())
        items.push_back(c == 1 ? v.name() : "(* " + to_string(c) + " " + v.name() + ")");
    if (e.constant() != 0 || items.empty())
        items.push_back(to_string(e.constant()));
    if (items.size() == 1)
        return items[0];
    std::string s = "(+";
    for (const auto& i : items)
        s += " " + i;
    return s + ")";
}

inline const char* relation_symbol(Relation r)
{
    switch (r) {
        case Relation::le: return "<=";
        case Relation::lt: return "<";
        case Relation::eq: return "=";
    }
    return "?";
}

inline const char* comparison_symbol(Comparison c)
{
    switch (c) {
        case Comparison::le: return "<=";
        case Comparison::lt: return "<";
        case Comparison::eq: return "=";
        case Comparison::ge: return ">=";
        case Comparison::gt: return ">";
        case Comparison::ne: return "!=";
    }
    return "?";
}

inline std::string to_string(const Atom& a)
{
    if (a.is_boolean())
        return a.variable().name();
    return std::string("(") + relation_symbol(a.relation()) + " " + to_string(a.lhs_expr()) + " " + to_string(a.rhs()) + ")";
}

inline std::string to_string(const Literal& l)
{
    return l.positive ? to_string(l.atom) : "(not " + to_string(l.atom) + ")";
}

std::string to_string(const Formula& f);

inline std::string to_string(const Term& t)
{
    const TermNode* n = t.node();
    switch (n->kind) {
        case TermKind::linear: return to_string(n->linear);
        case TermKind::ite:
            return "(ite " + to_string(n->cond) + " " + to_string(n->branches[0]) + " " + to_string(n->branches[1]) + ")";
        case TermKind::sum: {
            std::string s = "(+";
            for (const auto& [v, c] : n->linear.terms())
                s += " " + (c == 1 ? v.name() : "(* " + to_string(c) + " " + v.name() + ")");
            for (const auto& [c, p] : n->parts)
                s += " " + (c == 1 ? to_string(p) : "(* " + to_string(c) + " " + to_string(p) + ")");
            if (n->linear.constant() != 0)
                s += " " + to_string(n->linear.constant());
            return s + ")";
        }
    }
    return "?";
}

inline std::string to_string(const Formula& f)
{
    const FormulaNode* n = f.node();
    auto join = [&](const char* head) {
        std::string s = std::string("(") + head;
        for (const auto& c : n->children)
            s += " " + to_string(c);
        return s + ")";
    };
    switch (n->kind) {
        case FormulaKind::truth: return "true";
        case FormulaKind::falsity: return "false";
        case FormulaKind::atom: return to_string(n->atom);
        case FormulaKind::compare:
            return std::string("(") + comparison_symbol(n->comparison) + " " + to_string(*n->lhs) + " " + to_string(*n->rhs) + ")";
        case FormulaKind::negation: return join("not");
        case FormulaKind::conjunction: return join("and");
        case FormulaKind::disjunction: return join("or");
        case FormulaKind::implication: return join("=>");
        case FormulaKind::equivalence: return join("iff");
        case FormulaKind::ite: return join("ite");
    }
    return "?";
}

inline std::string to_string(const Assignment& mu)
{
    return to_string(mu.to_formula());
}

} // namespace wmipfv

#endif
