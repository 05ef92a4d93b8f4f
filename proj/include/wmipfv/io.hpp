/**
 * Interchange formats: S-expression formulas, terms, polynomials and weights;
 * JSON model and task files with rationals as `p/q` strings; CSV datasets
 * with a typed header (`name:real`, `name:bool`).
 */
#ifndef WMIPFV_IO_HPP
#define WMIPFV_IO_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "models.hpp"
#include "printing.hpp"
#include "training.hpp"
#include "verifier.hpp"

namespace wmipfv {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------- symbols

/** Name-to-variable map shared by everything parsed from one source. */
class SymbolTable
{
    public:
        Variable declare(const std::string& name, Sort sort)
        {
            if (name.empty())
                throw ParseError("empty variable name");
            auto it = vars_.find(name);
            if (it != vars_.end()) {
                if (it->second.sort() != sort)
                    throw ParseError("variable '" + name + "' used as both real and boolean");
                return it->second;
            }
            Variable v = sort == Sort::real ? Variable::real(name) : Variable::boolean(name);
            vars_.emplace(name, v);
            return v;
        }
        Variable real(const std::string& name) { return declare(name, Sort::real); }
        Variable boolean(const std::string& name) { return declare(name, Sort::boolean); }

        /** Registers an existing variable under its own name. */
        void add(const Variable& v)
        {
            auto [it, inserted] = vars_.emplace(v.name(), v);
            if (!inserted && it->second != v)
                throw ParseError("variable name '" + v.name() + "' is already bound");
        }

        std::optional<Variable> find(const std::string& name) const
        {
            auto it = vars_.find(name);
            if (it == vars_.end())
                return std::nullopt;
            return it->second;
        }

        Variable require(const std::string& name) const
        {
            auto v = find(name);
            if (!v)
                throw ParseError("unknown variable '" + name + "'");
            return *v;
        }

    private:
        std::map<std::string, Variable> vars_;
};

// ---------------------------------------------------------------- s-expressions

struct SExpr
{
    bool list = false;
    std::string symbol;
    std::vector<SExpr> items;
    std::size_t line = 1, column = 1;

    std::string where() const { return std::to_string(line) + ":" + std::to_string(column); }
    std::string head() const { return list && !items.empty() && !items[0].list ? items[0].symbol : std::string(); }
};

namespace detail {

class SExprReader
{
    public:
        explicit SExprReader(std::string_view text) : text_(text) {}

        SExpr read_all()
        {
            SExpr e = read();
            skip();
            if (pos_ < text_.size())
                throw ParseError(here() + ": trailing input after expression");
            return e;
        }

    private:
        std::string_view text_;
        std::size_t pos_ = 0, line_ = 1, col_ = 1;

        std::string here() const { return std::to_string(line_) + ":" + std::to_string(col_); }

        void advance()
        {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }

        void skip()
        {
            while (pos_ < text_.size()) {
                if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                    advance();
                } else if (text_[pos_] == ';') {
                    while (pos_ < text_.size() && text_[pos_] != '\n')
                        advance();
                } else {
                    break;
                }
            }
        }

        SExpr read()
        {
            skip();
            if (pos_ >= text_.size())
                throw ParseError(here() + ": unexpected end of input");
            SExpr e;
            e.line = line_;
            e.column = col_;
            if (text_[pos_] == ')')
                throw ParseError(here() + ": unexpected ')'");
            if (text_[pos_] == '(') {
                advance();
                e.list = true;
                for (;;) {
                    skip();
                    if (pos_ >= text_.size())
                        throw ParseError(e.where() + ": unclosed '('");
                    if (text_[pos_] == ')') {
                        advance();
                        return e;
                    }
                    e.items.push_back(read());
                }
            }
            while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
                   text_[pos_] != ')' && text_[pos_] != ';') {
                e.symbol += text_[pos_];
                advance();
            }
            return e;
        }
};

inline bool looks_numeric(const std::string& s)
{
    std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    return i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.');
}

} // namespace detail

inline SExpr parse_sexpr(std::string_view text) { return detail::SExprReader(text).read_all(); }

/**
 * Parser for the printed forms of formulas, terms, polynomials and weights.
 * Unknown symbols become variables whose sort follows their position.
 */
class ExprParser
{
    public:
        explicit ExprParser(SymbolTable& symbols) : symbols_(symbols) {}

        Formula formula(const SExpr& e)
        {
            if (!e.list) {
                if (e.symbol == "true")
                    return Formula::top();
                if (e.symbol == "false")
                    return Formula::bottom();
                if (detail::looks_numeric(e.symbol))
                    throw ParseError(e.where() + ": number '" + e.symbol + "' where a formula was expected");
                return Formula::variable(symbols_.boolean(e.symbol));
            }
            std::string h = e.head();
            auto args = [&](std::size_t n) {
                if (e.items.size() != n + 1)
                    throw ParseError(e.where() + ": '" + h + "' expects " + std::to_string(n) + " arguments");
            };
            auto children = [&] {
                std::vector<Formula> out;
                for (std::size_t i = 1; i < e.items.size(); ++i)
                    out.push_back(formula(e.items[i]));
                return out;
            };
            if (h == "and")
                return Formula::conjunction(children());
            if (h == "or")
                return Formula::disjunction(children());
            if (h == "not") {
                args(1);
                return !formula(e.items[1]);
            }
            if (h == "=>") {
                args(2);
                return Formula::implies(formula(e.items[1]), formula(e.items[2]));
            }
            if (h == "iff") {
                args(2);
                return Formula::iff(formula(e.items[1]), formula(e.items[2]));
            }
            if (h == "ite") {
                args(3);
                return Formula::ite(formula(e.items[1]), formula(e.items[2]), formula(e.items[3]));
            }
            static const std::map<std::string, Comparison> cmp{{"<=", Comparison::le}, {"<", Comparison::lt}, {"=", Comparison::eq},
                                                               {">=", Comparison::ge}, {">", Comparison::gt}, {"!=", Comparison::ne}};
            if (auto it = cmp.find(h); it != cmp.end()) {
                args(2);
                return Formula::compare(term(e.items[1]), it->second, term(e.items[2]));
            }
            throw ParseError(e.where() + ": unknown formula operator '" + h + "'");
        }

        Term term(const SExpr& e)
        {
            if (!e.list) {
                if (detail::looks_numeric(e.symbol))
                    return Term(number(e));
                return Term(symbols_.real(e.symbol));
            }
            std::string h = e.head();
            if (e.items.size() < 2)
                throw ParseError(e.where() + ": '" + h + "' without arguments");
            if (h == "+") {
                Term s(0);
                for (std::size_t i = 1; i < e.items.size(); ++i)
                    s = s + term(e.items[i]);
                return s;
            }
            if (h == "-") {
                if (e.items.size() == 2)
                    return -term(e.items[1]);
                Term s = term(e.items[1]);
                for (std::size_t i = 2; i < e.items.size(); ++i)
                    s = s - term(e.items[i]);
                return s;
            }
            if (h == "*") {
                Rational k = 1;
                std::optional<Term> factor;
                for (std::size_t i = 1; i < e.items.size(); ++i) {
                    Term t = term(e.items[i]);
                    auto lin = t.as_linear();
                    if (lin && lin->is_constant()) {
                        k *= lin->constant();
                    } else if (factor) {
                        throw ParseError(e.items[i].where() + ": nonlinear product in a linear term");
                    } else {
                        factor = t;
                    }
                }
                return factor ? k * *factor : Term(k);
            }
            if (h == "ite") {
                if (e.items.size() != 4)
                    throw ParseError(e.where() + ": 'ite' expects 3 arguments");
                return Term::ite(formula(e.items[1]), term(e.items[2]), term(e.items[3]));
            }
            throw ParseError(e.where() + ": unknown term operator '" + h + "'");
        }

        Polynomial polynomial(const SExpr& e)
        {
            if (!e.list) {
                if (detail::looks_numeric(e.symbol))
                    return Polynomial(number(e));
                return Polynomial::variable(symbols_.real(e.symbol));
            }
            std::string h = e.head();
            if (e.items.size() < 2)
                throw ParseError(e.where() + ": '" + h + "' without arguments");
            if (h == "+" || h == "*") {
                Polynomial p = polynomial(e.items[1]);
                for (std::size_t i = 2; i < e.items.size(); ++i)
                    p = h == "+" ? p + polynomial(e.items[i]) : p * polynomial(e.items[i]);
                return p;
            }
            if (h == "-") {
                if (e.items.size() == 2)
                    return polynomial(e.items[1]).scaled(-1);
                Polynomial p = polynomial(e.items[1]);
                for (std::size_t i = 2; i < e.items.size(); ++i)
                    p -= polynomial(e.items[i]);
                return p;
            }
            if (h == "^") {
                if (e.items.size() != 3 || e.items[2].list)
                    throw ParseError(e.where() + ": '^' expects a base and an integer exponent");
                unsigned n = 0;
                const std::string& s = e.items[2].symbol;
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
                if (ec != std::errc() || ptr != s.data() + s.size())
                    throw ParseError(e.items[2].where() + ": malformed exponent '" + s + "'");
                return polynomial(e.items[1]).pow(n);
            }
            throw ParseError(e.where() + ": unknown polynomial operator '" + h + "'");
        }

        /** `(poly P)`, a bare polynomial, `(ite φ w w)`, `(+ w…)`, `(* w…)`, `(support χ w)`. */
        WeightDag weight(const SExpr& e)
        {
            std::string h = e.head();
            if (h == "poly") {
                if (e.items.size() != 2)
                    throw ParseError(e.where() + ": 'poly' expects 1 argument");
                return WeightDag(polynomial(e.items[1]));
            }
            if (h == "ite") {
                if (e.items.size() != 4)
                    throw ParseError(e.where() + ": 'ite' expects 3 arguments");
                return WeightDag::ite(formula(e.items[1]), weight(e.items[2]), weight(e.items[3]));
            }
            if (h == "support") {
                if (e.items.size() != 3)
                    throw ParseError(e.where() + ": 'support' expects a formula and a weight");
                Formula chi = formula(e.items[1]);
                return weight(e.items[2]).with_support(chi);
            }
            if ((h == "+" || h == "*") && e.items.size() >= 2) {
                std::vector<WeightDag> parts;
                for (std::size_t i = 1; i < e.items.size(); ++i)
                    parts.push_back(weight(e.items[i]));
                return h == "+" ? WeightDag::sum(parts) : WeightDag::product(parts);
            }
            return WeightDag(polynomial(e));
        }

    private:
        SymbolTable& symbols_;

        static Rational number(const SExpr& e)
        {
            try {
                return parse_rational(e.symbol);
            } catch (const ParseError& err) {
                throw ParseError(e.where() + ": " + err.what());
            }
        }
};

inline Formula parse_formula(std::string_view text, SymbolTable& symbols) { return ExprParser(symbols).formula(parse_sexpr(text)); }
inline Term parse_term(std::string_view text, SymbolTable& symbols) { return ExprParser(symbols).term(parse_sexpr(text)); }
inline Polynomial parse_polynomial(std::string_view text, SymbolTable& symbols)
{
    return ExprParser(symbols).polynomial(parse_sexpr(text));
}
inline WeightDag parse_weight(std::string_view text, SymbolTable& symbols) { return ExprParser(symbols).weight(parse_sexpr(text)); }

/** Weight in parser syntax, wrapped in `(support χ …)` unless χ is true. */
inline std::string emit_weight(const WeightDag& w)
{
    std::string body = to_string(w);
    return w.support().is_true() ? body : "(support " + to_string(w.support()) + " " + body + ")";
}

// ---------------------------------------------------------------- json helpers

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object())
        throw ParseError(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw ParseError(path + ": missing field '" + key + "'");
    return *it;
}

inline const Json& array_field(const Json& j, const std::string& key, const std::string& path)
{
    const Json& a = field(j, key, path);
    if (!a.is_array())
        throw ParseError(path + "." + key + ": expected an array");
    return a;
}

inline std::string string_field(const Json& j, const std::string& key, const std::string& path)
{
    const Json& s = field(j, key, path);
    if (!s.is_string())
        throw ParseError(path + "." + key + ": expected a string");
    return s.get<std::string>();
}

template <typename T>
T value_or(const Json& j, const std::string& key, T fallback, const std::string& path)
{
    auto it = j.find(key);
    if (it == j.end())
        return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(path + "." + key + ": wrong value type");
    }
}

} // namespace detail

/** Accepts `"p/q"`, decimal strings, integers, and binary floats (read exactly). */
inline Rational rational_from_json(const Json& j, const std::string& path)
{
    if (j.is_string()) {
        try {
            return parse_rational(j.get<std::string>());
        } catch (const ParseError& e) {
            throw ParseError(path + ": " + e.what());
        }
    }
    if (j.is_number_integer())
        return Rational(j.get<std::int64_t>());
    if (j.is_number_unsigned())
        return Rational(Integer(std::to_string(j.get<std::uint64_t>())));
    if (j.is_number_float())
        return from_double(j.get<double>());
    throw ParseError(path + ": expected a rational");
}

inline Json rational_to_json(const Rational& r) { return to_string(r); }

inline std::vector<Rational> rationals_from_json(const Json& j, const std::string& path)
{
    if (!j.is_array())
        throw ParseError(path + ": expected an array");
    std::vector<Rational> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(rational_from_json(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline Json rationals_to_json(const std::vector<Rational>& rs)
{
    Json a = Json::array();
    for (const auto& r : rs)
        a.push_back(rational_to_json(r));
    return a;
}

/** Parses JSON text; syntax errors carry the line and column. */
inline Json parse_json(std::string_view text, const std::string& source = "<input>")
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << text;
}

inline Json load_json(const std::filesystem::path& path) { return parse_json(read_text_file(path), path.string()); }

// ---------------------------------------------------------------- neural networks

inline Json nn_to_json(const NeuralNet& nn)
{
    Json layers = Json::array();
    for (const auto& l : nn.layers) {
        Json w = Json::array();
        for (const auto& row : l.weights)
            w.push_back(rationals_to_json(row));
        layers.push_back({{"weights", w}, {"bias", rationals_to_json(l.bias)}, {"activation", l.activation == Activation::relu ? "relu" : "identity"}});
    }
    return {{"type", "nn"}, {"input_dim", nn.input_dim}, {"layers", layers}};
}

inline NeuralNet nn_from_json(const Json& j, const std::string& path = "nn")
{
    NeuralNet nn;
    const Json& dim = detail::field(j, "input_dim", path);
    if (!dim.is_number_unsigned() || dim.get<std::size_t>() == 0)
        throw ParseError(path + ".input_dim: expected a positive integer");
    nn.input_dim = dim.get<std::size_t>();
    const Json& layers = detail::array_field(j, "layers", path);
    if (layers.empty())
        throw ParseError(path + ".layers: network without layers");
    std::size_t width = nn.input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        std::string lp = path + ".layers[" + std::to_string(l) + "]";
        Layer layer;
        const Json& rows = detail::array_field(layers[l], "weights", lp);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::string rp = lp + ".weights[" + std::to_string(i) + "]";
            layer.weights.push_back(rationals_from_json(rows[i], rp));
            if (layer.weights.back().size() != width)
                throw ParseError(rp + ": expected " + std::to_string(width) + " entries, got " + std::to_string(layer.weights.back().size()));
        }
        layer.bias = rationals_from_json(detail::field(layers[l], "bias", lp), lp + ".bias");
        if (layer.bias.size() != layer.weights.size() || layer.weights.empty())
            throw ParseError(lp + ": " + std::to_string(layer.weights.size()) + " weight rows but " + std::to_string(layer.bias.size()) +
                             " biases");
        std::string act = detail::value_or<std::string>(layers[l], "activation", l + 1 == layers.size() ? "identity" : "relu", lp);
        if (act == "relu")
            layer.activation = Activation::relu;
        else if (act == "identity" || act == "linear")
            layer.activation = Activation::identity;
        else
            throw ParseError(lp + ".activation: unknown activation '" + act + "'");
        width = layer.weights.size();
        nn.layers.push_back(std::move(layer));
    }
    if (width != 1)
        throw ParseError(path + ".layers: final layer has " + std::to_string(width) + " units, expected 1");
    return nn;
}

// ---------------------------------------------------------------- density trees

inline Json det_to_json(const DensityTree& t)
{
    Json features = Json::array();
    for (const auto& f : t.features) {
        if (f.var.is_boolean())
            features.push_back({{"name", f.var.name()}, {"sort", "bool"}});
        else
            features.push_back({{"name", f.var.name()}, {"sort", "real"}, {"lo", rational_to_json(f.lo)}, {"hi", rational_to_json(f.hi)}});
    }
    std::function<Json(std::size_t)> rec = [&](std::size_t i) -> Json {
        const DetNode& n = t.nodes[i];
        if (n.leaf)
            return {{"mass", rational_to_json(n.mass)}};
        Json out = {{"feature", t.features[n.feature].var.name()}};
        if (t.features[n.feature].var.is_real())
            out["threshold"] = rational_to_json(n.threshold);
        out["left"] = rec(n.left);
        out["right"] = rec(n.right);
        return out;
    };
    return {{"type", "det"}, {"features", features}, {"tree", rec(0)}};
}

inline DensityTree det_from_json(const Json& j, SymbolTable& symbols, const std::string& path = "det")
{
    DensityTree t;
    std::map<std::string, std::size_t> index;
    const Json& features = detail::array_field(j, "features", path);
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::string fp = path + ".features[" + std::to_string(i) + "]";
        std::string name = detail::string_field(features[i], "name", fp);
        std::string sort = detail::value_or<std::string>(features[i], "sort", "real", fp);
        DetFeature f;
        if (sort == "bool") {
            f.var = symbols.boolean(name);
        } else if (sort == "real") {
            f.var = symbols.real(name);
            f.lo = rational_from_json(detail::field(features[i], "lo", fp), fp + ".lo");
            f.hi = rational_from_json(detail::field(features[i], "hi", fp), fp + ".hi");
        } else {
            throw ParseError(fp + ".sort: expected 'real' or 'bool'");
        }
        if (!index.emplace(name, i).second)
            throw ParseError(fp + ": duplicate feature '" + name + "'");
        t.features.push_back(f);
    }
    std::function<std::size_t(const Json&, const std::string&)> rec = [&](const Json& n, const std::string& np) -> std::size_t {
        if (!n.is_object())
            throw ParseError(np + ": expected an object");
        std::size_t id = t.nodes.size();
        t.nodes.emplace_back();
        if (n.contains("mass")) {
            t.nodes[id].leaf = true;
            t.nodes[id].mass = rational_from_json(n["mass"], np + ".mass");
            return id;
        }
        std::string name = detail::string_field(n, "feature", np);
        auto it = index.find(name);
        if (it == index.end())
            throw ParseError(np + ".feature: unknown feature '" + name + "'");
        DetNode node;
        node.leaf = false;
        node.feature = it->second;
        if (t.features[it->second].var.is_real())
            node.threshold = rational_from_json(detail::field(n, "threshold", np), np + ".threshold");
        node.left = rec(detail::field(n, "left", np), np + ".left");
        node.right = rec(detail::field(n, "right", np), np + ".right");
        t.nodes[id] = node;
        return id;
    };
    rec(detail::field(j, "tree", path), path + ".tree");
    try {
        t.validate();
    } catch (const ModelError& e) {
        throw ParseError(path + ": " + e.what());
    }
    return t;
}

inline Json forest_to_json(const DetForestClassifier& rf)
{
    Json pos = Json::array(), neg = Json::array();
    for (const auto& t : rf.positive)
        pos.push_back(det_to_json(t));
    for (const auto& t : rf.negative)
        neg.push_back(det_to_json(t));
    return {{"type", "forest"}, {"positive", pos}, {"negative", neg}};
}

inline DetForestClassifier forest_from_json(const Json& j, SymbolTable& symbols, const std::string& path = "forest")
{
    DetForestClassifier rf;
    const Json& pos = detail::array_field(j, "positive", path);
    const Json& neg = detail::array_field(j, "negative", path);
    for (std::size_t i = 0; i < pos.size(); ++i)
        rf.positive.push_back(det_from_json(pos[i], symbols, path + ".positive[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < neg.size(); ++i)
        rf.negative.push_back(det_from_json(neg[i], symbols, path + ".negative[" + std::to_string(i) + "]"));
    if (rf.positive.empty() || rf.positive.size() != rf.negative.size())
        throw ParseError(path + ": expected the same nonzero number of positive and negative trees");
    return rf;
}

// ---------------------------------------------------------------- sum-product networks

inline Json spn_node_to_json(const Spn& s)
{
    switch (s.kind) {
        case SpnKind::leaf: {
            Json pieces = Json::array();
            for (const auto& p : s.pieces)
                pieces.push_back({{"lo", rational_to_json(p.lo)}, {"hi", rational_to_json(p.hi)}, {"density", to_string(p.density)}});
            return {{"kind", "leaf"}, {"var", s.var.name()}, {"pieces", pieces}};
        }
        case SpnKind::sum: {
            Json children = Json::array();
            for (const auto& c : s.children)
                children.push_back(spn_node_to_json(c));
            return {{"kind", "sum"}, {"weights", rationals_to_json(s.weights)}, {"children", children}};
        }
        case SpnKind::product: {
            Json children = Json::array();
            for (const auto& c : s.children)
                children.push_back(spn_node_to_json(c));
            return {{"kind", "product"}, {"children", children}};
        }
    }
    return {};
}

inline Json spn_to_json(const Spn& s) { return {{"type", "spn"}, {"root", spn_node_to_json(s)}}; }

inline Spn spn_node_from_json(const Json& j, SymbolTable& symbols, const std::string& path)
{
    std::string kind = detail::string_field(j, "kind", path);
    if (kind == "leaf") {
        Variable v = symbols.real(detail::string_field(j, "var", path));
        const Json& pieces = detail::array_field(j, "pieces", path);
        std::vector<SpnPiece> out;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            std::string pp = path + ".pieces[" + std::to_string(i) + "]";
            SpnPiece p;
            p.lo = rational_from_json(detail::field(pieces[i], "lo", pp), pp + ".lo");
            p.hi = rational_from_json(detail::field(pieces[i], "hi", pp), pp + ".hi");
            const Json& d = detail::field(pieces[i], "density", pp);
            if (d.is_string()) {
                try {
                    p.density = parse_polynomial(d.get<std::string>(), symbols);
                } catch (const ParseError& e) {
                    throw ParseError(pp + ".density: " + e.what());
                }
            } else {
                p.density = Polynomial(rational_from_json(d, pp + ".density"));
            }
            out.push_back(std::move(p));
        }
        return Spn::leaf(v, std::move(out));
    }
    std::vector<Spn> children;
    const Json& cs = detail::array_field(j, "children", path);
    for (std::size_t i = 0; i < cs.size(); ++i)
        children.push_back(spn_node_from_json(cs[i], symbols, path + ".children[" + std::to_string(i) + "]"));
    if (kind == "product")
        return Spn::product(std::move(children));
    if (kind == "sum") {
        std::vector<Rational> w = rationals_from_json(detail::field(j, "weights", path), path + ".weights");
        if (w.size() != children.size())
            throw ParseError(path + ": " + std::to_string(w.size()) + " weights for " + std::to_string(children.size()) + " children");
        return Spn::sum(std::move(w), std::move(children));
    }
    throw ParseError(path + ".kind: unknown SPN node kind '" + kind + "'");
}

inline Spn spn_from_json(const Json& j, SymbolTable& symbols, const std::string& path = "spn")
{
    return spn_node_from_json(detail::field(j, "root", path), symbols, path + ".root");
}

// ---------------------------------------------------------------- datasets

/** Columns with names and sorts; values as doubles (booleans as 0/1). */
struct Dataset
{
    std::vector<std::string> names;
    std::vector<Sort> sorts;
    Matrix rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name)
                return i;
        throw ParseError("dataset has no column '" + name + "'");
    }

    Matrix columns(const std::vector<std::size_t>& idx) const
    {
        Matrix out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            std::vector<double> row;
            for (std::size_t i : idx)
                row.push_back(r[i]);
            out.push_back(std::move(row));
        }
        return out;
    }

    std::vector<int> labels(std::size_t col) const
    {
        std::vector<int> out;
        for (const auto& r : rows)
            out.push_back(r[col] != 0);
        return out;
    }
};

inline std::string format_double(double d)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

inline std::string write_csv(const Dataset& d)
{
    std::string out;
    for (std::size_t i = 0; i < d.names.size(); ++i)
        out += (i ? "," : "") + d.names[i] + (d.sorts[i] == Sort::boolean ? ":bool" : ":real");
    out += "\n";
    for (const auto& r : d.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i)
                out += ",";
            out += d.sorts[i] == Sort::boolean ? (r[i] != 0 ? "1" : "0") : format_double(r[i]);
        }
        out += "\n";
    }
    return out;
}

inline Dataset parse_csv(std::string_view text, const std::string& source = "<csv>")
{
    Dataset d;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        if (!s.empty() && s.back() == ',')
            out.emplace_back();
        return out;
    };
    auto trim = [](std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
            s.pop_back();
        std::size_t i = 0;
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        return s.substr(i);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty())
            continue;
        std::vector<std::string> cells = split(line);
        std::string at = source + ":" + std::to_string(lineno);
        if (d.names.empty()) {
            for (auto& c : cells) {
                c = trim(c);
                auto colon = c.rfind(':');
                if (colon == std::string::npos)
                    throw ParseError(at + ": header column '" + c + "' lacks a ':real' or ':bool' type");
                std::string type = c.substr(colon + 1);
                if (type != "real" && type != "bool")
                    throw ParseError(at + ": unknown column type '" + type + "'");
                d.names.push_back(c.substr(0, colon));
                d.sorts.push_back(type == "bool" ? Sort::boolean : Sort::real);
            }
            continue;
        }
        if (cells.size() != d.names.size())
            throw ParseError(at + ": expected " + std::to_string(d.names.size()) + " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::string c = trim(cells[i]);
            if (d.sorts[i] == Sort::boolean) {
                if (c == "1" || c == "true")
                    row.push_back(1);
                else if (c == "0" || c == "false")
                    row.push_back(0);
                else
                    throw ParseError(at + ": malformed boolean '" + c + "' in column '" + d.names[i] + "'");
            } else {
                char* end = nullptr;
                double v = std::strtod(c.c_str(), &end);
                if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v))
                    throw ParseError(at + ": malformed number '" + c + "' in column '" + d.names[i] + "'");
                row.push_back(v);
            }
        }
        d.rows.push_back(std::move(row));
    }
    if (d.names.empty())
        throw ParseError(source + ": missing header");
    return d;
}

inline Dataset load_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path.string()); }

// ---------------------------------------------------------------- task files

/** A loaded system together with the model it was encoded from. */
struct LoadedSystem
{
    SystemEncoding encoding;
    std::optional<NeuralNet> nn;
    std::optional<DetForestClassifier> forest;
};

/** Demographic parity is a ratio of two conditional probabilities rather than a single query. */
struct ParityQuery
{
    SystemEncoding system;
    Formula minority;
    WeightDag prior;
};

struct Task
{
    std::string name;
    std::string kind;
    /** "verify" or "classify" (Rob / ~Rob / ¬Rob). */
    std::string mode = "verify";
    PropertyEncoding property;
    std::optional<ParityQuery> parity;
    VerifierOptions options;
    std::vector<Variable> inputs;
    std::vector<LoadedSystem> systems;
};

namespace detail {

inline Json resolve_model(const Json& spec, const std::filesystem::path& base, const std::string& path)
{
    if (spec.contains("file"))
        return load_json(base / string_field(spec, "file", path));
    if (spec.contains("model"))
        return spec["model"];
    throw ParseError(path + ": expected 'file' or 'model'");
}

inline Formula formula_field(const Json& j, const std::string& key, SymbolTable& symbols, const std::string& path)
{
    try {
        return parse_formula(string_field(j, key, path), symbols);
    } catch (const ParseError& e) {
        if (std::string(e.what()).rfind(path, 0) == 0)
            throw;
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

inline Norm parse_norm(const std::string& s, const std::string& path)
{
    if (s == "linf")
        return Norm::linf;
    if (s == "l1")
        return Norm::l1;
    throw ParseError(path + ": unknown norm '" + s + "'");
}

} // namespace detail

inline Heuristic parse_heuristic(const std::string& s)
{
    if (s == "none")
        return Heuristic::none;
    if (s == "random")
        return Heuristic::random;
    if (s == "sampling")
        return Heuristic::sampling;
    throw ParseError("unknown heuristic '" + s + "'");
}

inline Norm parse_norm(const std::string& s) { return detail::parse_norm(s, "norm"); }

inline VerifierOptions verifier_options_from_json(const Json& j, const std::string& path = "verifier")
{
    VerifierOptions o;
    if (j.is_null())
        return o;
    if (j.contains("k"))
        o.k = rational_from_json(j["k"], path + ".k");
    o.partitions = detail::value_or<std::size_t>(j, "partitions", o.partitions, path);
    if (j.contains("heuristic")) {
        try {
            o.heuristic = parse_heuristic(detail::string_field(j, "heuristic", path));
        } catch (const ParseError& e) {
            throw ParseError(path + ".heuristic: " + e.what());
        }
    }
    o.seed = detail::value_or<std::uint64_t>(j, "seed", o.seed, path);
    o.samples = detail::value_or<std::size_t>(j, "samples", o.samples, path);
    o.bound_propagation = detail::value_or<bool>(j, "bp", o.bound_propagation, path);
    o.strict = detail::value_or<bool>(j, "strict", o.strict, path);
    o.early_exit = detail::value_or<bool>(j, "early_exit", o.early_exit, path);
    return o;
}

inline WeightDag prior_from_json(const Json& j, SymbolTable& symbols, const std::filesystem::path& base, const std::string& path = "prior")
{
    std::string kind = detail::string_field(j, "kind", path);
    if (kind == "uniform") {
        const Json& box = detail::field(j, "box", path);
        if (!box.is_object() || box.empty())
            throw ParseError(path + ".box: expected a non-empty object of intervals");
        Box b;
        std::vector<Variable> vars;
        for (const auto& [name, iv] : box.items()) {
            std::string ip = path + ".box." + name;
            std::vector<Rational> lh = rationals_from_json(iv, ip);
            if (lh.size() != 2)
                throw ParseError(ip + ": expected [lo, hi]");
            Variable v = symbols.real(name);
            try {
                b.set(v, Interval::closed(lh[0], lh[1]));
            } catch (const Error& e) {
                throw ParseError(ip + ": " + e.what());
            }
            vars.push_back(v);
        }
        return uniform_prior(vars, b);
    }
    if (kind == "det")
        return encode_det_weight(det_from_json(detail::resolve_model(j, base, path), symbols, path));
    if (kind == "spn")
        return encode_spn(spn_from_json(detail::resolve_model(j, base, path), symbols, path));
    if (kind == "weight") {
        WeightDag w = parse_weight(detail::string_field(j, "weight", path), symbols);
        if (j.contains("support"))
            w = w.with_support(detail::formula_field(j, "support", symbols, path));
        return w;
    }
    throw ParseError(path + ".kind: unknown prior kind '" + kind + "'");
}

inline LoadedSystem system_from_json(const Json& j, SymbolTable& symbols, const std::vector<Variable>& inputs,
                                     const std::filesystem::path& base, const std::string& path, const std::string& prefix)
{
    std::string kind = detail::string_field(j, "kind", path);
    LoadedSystem out;
    if (kind == "nn") {
        out.nn = nn_from_json(detail::resolve_model(j, base, path), path);
        if (out.nn->input_dim != inputs.size())
            throw ParseError(path + ": network expects " + std::to_string(out.nn->input_dim) + " inputs, task declares " +
                             std::to_string(inputs.size()));
        out.encoding = encode_relu_nn(*out.nn, inputs, prefix);
    } else if (kind == "forest") {
        out.forest = forest_from_json(detail::resolve_model(j, base, path), symbols, path);
        out.encoding = encode_rf_classifier(*out.forest, inputs);
    } else if (kind == "function") {
        SystemEncoding s;
        s.inputs = inputs;
        if (j.contains("output"))
            s.output = parse_term(detail::string_field(j, "output", path), symbols);
        if (j.contains("decision"))
            s.decision = detail::formula_field(j, "decision", symbols, path);
        else if (s.output)
            s.decision = *s.output >= Term(0);
        else
            throw ParseError(path + ": function system needs 'output' or 'decision'");
        out.encoding = s;
    } else {
        throw ParseError(path + ".kind: unknown system kind '" + kind + "'");
    }
    return out;
}

/** Builds a task from its JSON form; model files resolve relative to `base`. */
inline Task task_from_json(const Json& j, const std::filesystem::path& base = ".")
{
    Task t;
    SymbolTable symbols;
    t.name = detail::value_or<std::string>(j, "name", "task", "task");
    if (j.contains("variables")) {
        for (const auto& v : j["variables"]) {
            std::string sort = detail::value_or<std::string>(v, "sort", "real", "task.variables");
            symbols.declare(detail::string_field(v, "name", "task.variables"), sort == "bool" ? Sort::boolean : Sort::real);
        }
    }
    if (j.contains("inputs")) {
        for (const auto& name : j["inputs"]) {
            if (!name.is_string())
                throw ParseError("task.inputs: expected variable names");
            auto known = symbols.find(name.get<std::string>());
            t.inputs.push_back(known ? *known : symbols.real(name.get<std::string>()));
        }
    }
    WeightDag prior = prior_from_json(detail::field(j, "prior", "task"), symbols, base);
    if (j.contains("systems")) {
        const Json& systems = detail::array_field(j, "systems", "task");
        for (std::size_t i = 0; i < systems.size(); ++i)
            t.systems.push_back(system_from_json(systems[i], symbols, t.inputs, base, "task.systems[" + std::to_string(i) + "]",
                                                 "s" + std::to_string(i)));
    }
    t.options = verifier_options_from_json(j.contains("verifier") ? j["verifier"] : Json(), "task.verifier");
    if (j.contains("verifier"))
        t.mode = detail::value_or<std::string>(j["verifier"], "mode", "verify", "task.verifier");
    if (t.mode != "verify" && t.mode != "classify")
        throw ParseError("task.verifier.mode: expected 'verify' or 'classify'");

    const Json& prop = detail::field(j, "property", "task");
    const std::string pp = "task.property";
    t.kind = detail::string_field(prop, "kind", pp);
    Norm norm = detail::parse_norm(detail::value_or<std::string>(prop, "norm", "linf", pp), pp + ".norm");
    auto need_systems = [&](std::size_t n) {
        if (t.systems.size() != n)
            throw ParseError(pp + ": property '" + t.kind + "' needs " + std::to_string(n) + " system(s), task has " +
                             std::to_string(t.systems.size()));
    };
    auto point = [&](const std::string& key) {
        std::vector<Rational> x = rationals_from_json(detail::field(prop, key, pp), pp + "." + key);
        if (x.size() != t.inputs.size())
            throw ParseError(pp + "." + key + ": expected " + std::to_string(t.inputs.size()) + " coordinates");
        return x;
    };
    auto rational = [&](const std::string& key) { return rational_from_json(detail::field(prop, key, pp), pp + "." + key); };

    if (t.kind == "local_robustness") {
        need_systems(1);
        std::vector<Rational> x0 = point("x0");
        bool c0;
        if (prop.contains("c0")) {
            c0 = detail::value_or<bool>(prop, "c0", true, pp);
        } else {
            Valuation v;
            for (std::size_t i = 0; i < x0.size(); ++i)
                v.set(t.inputs[i], x0[i]);
            c0 = evaluate(t.systems[0].encoding.decision, v);
        }
        t.property = local_robustness(t.systems[0].encoding, x0, c0, rational("epsilon"), prior, norm);
    } else if (t.kind == "robustness_regression") {
        need_systems(1);
        t.property = local_robustness_regression(t.systems[0].encoding, point("x0"), rational("y0"), rational("epsilon"), rational("delta"),
                                                 prior, norm);
    } else if (t.kind == "equivalence") {
        need_systems(2);
        std::optional<std::pair<std::vector<Rational>, Rational>> local;
        if (prop.contains("x0"))
            local = std::make_pair(point("x0"), rational("epsilon"));
        t.property = equivalence(t.systems[0].encoding, t.systems[1].encoding, prior, local, norm);
    } else if (t.kind == "demographic_parity") {
        need_systems(1);
        t.parity = ParityQuery{t.systems[0].encoding, detail::formula_field(prop, "minority", symbols, pp), prior};
    } else if (t.kind == "individual_fairness") {
        need_systems(1);
        t.property = individual_fairness(t.systems[0].encoding, prior, rational("epsilon"), norm);
    } else if (t.kind == "monotonicity") {
        need_systems(1);
        Variable f = symbols.require(detail::string_field(prop, "feature", pp));
        auto it = std::find(t.inputs.begin(), t.inputs.end(), f);
        if (it == t.inputs.end())
            throw ParseError(pp + ".feature: '" + f.name() + "' is not an input");
        t.property = monotonicity(t.systems[0].encoding, std::size_t(it - t.inputs.begin()), prior);
    } else if (t.kind == "noise_robustness") {
        need_systems(1);
        const Json& noise = detail::array_field(prop, "noise", pp);
        std::vector<WeightDag> densities;
        std::vector<std::pair<std::size_t, Variable>> noised;
        for (std::size_t i = 0; i < noise.size(); ++i) {
            std::string np = pp + ".noise[" + std::to_string(i) + "]";
            Variable x = symbols.require(detail::string_field(noise[i], "input", np));
            auto it = std::find(t.inputs.begin(), t.inputs.end(), x);
            if (it == t.inputs.end())
                throw ParseError(np + ".input: '" + x.name() + "' is not an input");
            Variable n = symbols.real(detail::value_or<std::string>(noise[i], "var", "noise." + x.name(), np));
            Rational lo = rational_from_json(detail::field(noise[i], "lo", np), np + ".lo");
            Rational hi = rational_from_json(detail::field(noise[i], "hi", np), np + ".hi");
            if (noise[i].contains("mode")) {
                densities.push_back(triangular_density(n, lo, rational_from_json(noise[i]["mode"], np + ".mode"), hi));
            } else {
                Box b;
                b.set(n, Interval::closed(lo, hi));
                densities.push_back(uniform_prior({n}, b));
            }
            noised.emplace_back(std::size_t(it - t.inputs.begin()), n);
        }
        Formula support = Formula::top();
        for (const auto& d : densities)
            support = support && d.support();
        t.property = noise_robustness(t.systems[0].encoding, prior, WeightDag::product(densities).with_support(support), noised);
    } else if (t.kind == "formula") {
        PropertyEncoding p;
        p.kind = "formula";
        p.delta_pre = prop.contains("pre") ? detail::formula_field(prop, "pre", symbols, pp) : Formula::top();
        p.delta_post = detail::formula_field(prop, "post", symbols, pp);
        p.prior = prior;
        for (const auto& s : t.systems)
            p.systems.push_back(s.encoding);
        t.property = p;
    } else {
        throw ParseError(pp + ".kind: unknown property kind '" + t.kind + "'");
    }
    return t;
}

inline Task load_task(const std::filesystem::path& path)
{
    return task_from_json(load_json(path), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

} // namespace wmipfv

#endif
