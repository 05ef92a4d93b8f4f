/**
 * Exact integration of polynomials over convex polytopes: H-representation,
 * vertex enumeration, triangulation into simplices and the Dirichlet
 * monomial formula on the standard simplex.
 */
#ifndef WMIPFV_POLYTOPE_HPP
#define WMIPFV_POLYTOPE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lp.hpp"
#include "polynomial.hpp"

namespace wmipfv {

using Point = std::vector<Rational>;

/** normal · x ≤ offset */
struct Halfspace
{
    std::vector<Rational> normal;
    Rational offset;
};

/** Closed convex polyhedron over an ordered list of real coordinates. */
class Polytope
{
    public:
        explicit Polytope(std::vector<Variable> coordinates) : coordinates_(std::move(coordinates)) {}

        const std::vector<Variable>& coordinates() const { return coordinates_; }
        std::size_t dimension() const { return coordinates_.size(); }
        const std::vector<Halfspace>& constraints() const { return constraints_; }

        /** Set when the defining conjunction is unsatisfiable. */
        bool is_empty() const { return empty_; }
        void mark_empty() { empty_ = true; }

        void add(std::vector<Rational> normal, const Rational& offset)
        {
            if (normal.size() != dimension())
                throw ArityError("halfspace width does not match polytope dimension");
            constraints_.push_back({std::move(normal), offset});
        }

        /** LP over the constraints, optionally all made strict (interior). */
        LinearProgram program(bool strict = false) const
        {
            LinearProgram lp(dimension());
            for (const auto& h : constraints_)
                lp.add(h.normal, strict ? Relation::lt : Relation::le, h.offset);
            return lp;
        }

        bool contains(const Point& p) const
        {
            for (const auto& h : constraints_) {
                Rational s = 0;
                for (std::size_t j = 0; j < p.size(); ++j)
                    s += h.normal[j] * p[j];
                if (s > h.offset)
                    return false;
            }
            return true;
        }

    private:
        std::vector<Variable> coordinates_;
        std::vector<Halfspace> constraints_;
        bool empty_ = false;
};

/**
 * H-representation of the closure of a literal conjunction over
 * `coordinates`. Strict inequalities are closed, equalities become opposite
 * pairs and disequalities are dropped (they do not change the closure of a
 * satisfiable set). Unsatisfiable input yields a polytope marked empty;
 * callers that already know the input is satisfiable may skip that check.
 */
inline Polytope polytope_from_literals(const std::vector<Literal>& literals, const std::vector<Variable>& coordinates,
                                       bool check_satisfiable = true)
{
    Polytope p(coordinates);
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < coordinates.size(); ++i)
        index[coordinates[i].id()] = i;
    for (const auto& lit : literals) {
        if (lit.atom.is_boolean())
            continue;
        std::vector<Rational> n(coordinates.size());
        for (const auto& [v, c] : lit.atom.lhs()) {
            auto it = index.find(v.id());
            if (it == index.end())
                throw Error("literal over '" + v.name() + "', which is not a polytope coordinate");
            n[it->second] = c;
        }
        Rational b = lit.atom.rhs();
        auto negated = [&]() {
            std::vector<Rational> m(n.size());
            for (std::size_t j = 0; j < n.size(); ++j)
                m[j] = -n[j];
            return m;
        };
        if (lit.atom.relation() == Relation::eq) {
            if (!lit.positive)
                continue;
            p.add(negated(), -b);
            p.add(n, b);
        } else if (lit.positive) {
            p.add(n, b);
        } else {
            p.add(negated(), -b);
        }
    }
    if (check_satisfiable && !check_lra_sat(literals))
        p.mark_empty();
    return p;
}

namespace detail {

inline std::size_t matrix_rank(std::vector<std::vector<Rational>> rows)
{
    std::size_t rank = 0;
    std::size_t cols = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][c] == 0)
            ++pivot;
        if (pivot == rows.size())
            continue;
        std::swap(rows[pivot], rows[rank]);
        for (std::size_t r = rank + 1; r < rows.size(); ++r) {
            if (rows[r][c] == 0)
                continue;
            Rational f = rows[r][c] / rows[rank][c];
            for (std::size_t k = c; k < cols; ++k)
                rows[r][k] -= f * rows[rank][k];
        }
        ++rank;
    }
    return rank;
}

inline Rational determinant(std::vector<std::vector<Rational>> m)
{
    std::size_t n = m.size();
    Rational det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        while (pivot < n && m[pivot][c] == 0)
            ++pivot;
        if (pivot == n)
            return 0;
        if (pivot != c) {
            std::swap(m[pivot], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            if (m[r][c] == 0)
                continue;
            Rational f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k)
                m[r][k] -= f * m[c][k];
        }
    }
    return det;
}

/** Solves the square system A x = b; nullopt when singular. */
inline std::optional<Point> solve_square(std::vector<std::vector<Rational>> a, std::vector<Rational> b)
{
    std::size_t n = a.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        while (pivot < n && a[pivot][c] == 0)
            ++pivot;
        if (pivot == n)
            return std::nullopt;
        std::swap(a[pivot], a[c]);
        std::swap(b[pivot], b[c]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0)
                continue;
            Rational f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k)
                a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Point x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = b[i] / a[i][i];
    return x;
}

inline Rational slack(const Halfspace& h, const Point& p)
{
    Rational s = -h.offset;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (h.normal[j] != 0)
            s += h.normal[j] * p[j];
    return s;
}

inline std::size_t affine_rank(const std::vector<const Point*>& pts)
{
    if (pts.size() <= 1)
        return 0;
    std::vector<std::vector<Rational>> rows;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        std::vector<Rational> r(pts[0]->size());
        for (std::size_t j = 0; j < r.size(); ++j)
            r[j] = (*pts[i])[j] - (*pts[0])[j];
        rows.push_back(std::move(r));
    }
    return matrix_rank(std::move(rows));
}

} // namespace detail

using BoxBounds = std::vector<std::pair<Rational, Rational>>;

/**
 * Per-coordinate [min, max] of a polytope via LP. nullopt when empty.
 * Throws UnboundedRegionError when some coordinate is unbounded.
 */
inline std::optional<BoxBounds> bounding_box(const Polytope& p)
{
    if (p.is_empty())
        return std::nullopt;
    LinearProgram lp = p.program();
    BoxBounds box;
    for (std::size_t i = 0; i < p.dimension(); ++i) {
        std::vector<Rational> c(p.dimension());
        c[i] = 1;
        LpResult hi = lp.maximize(c);
        if (hi.status == LpStatus::infeasible)
            return std::nullopt;
        LpResult lo = lp.minimize(c);
        if (hi.status == LpStatus::unbounded || lo.status == LpStatus::unbounded)
            throw UnboundedRegionError("integration region unbounded in '" + p.coordinates()[i].name() + "'");
        box.emplace_back(lo.value, hi.value);
    }
    return box;
}

/** Whether the polytope has nonempty interior. */
inline bool is_full_dimensional(const Polytope& p)
{
    if (p.is_empty())
        return false;
    if (p.dimension() == 0)
        return true;
    return p.program(true).feasible();
}

/** Vertices by solving every d-subset of constraints and keeping feasible solutions. */
inline std::vector<Point> enumerate_vertices_exhaustive(const Polytope& p)
{
    if (p.is_empty() || !p.program().feasible())
        return {};
    std::size_t d = p.dimension();
    if (d == 0)
        return {Point{}};
    bounding_box(p);
    const auto& hs = p.constraints();
    std::set<Point> found;
    std::vector<std::size_t> pick(d);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == d) {
            std::vector<std::vector<Rational>> a;
            std::vector<Rational> b;
            for (auto i : pick) {
                a.push_back(hs[i].normal);
                b.push_back(hs[i].offset);
            }
            auto x = detail::solve_square(a, b);
            if (x && p.contains(*x))
                found.insert(*x);
            return;
        }
        for (std::size_t i = start; i + (d - depth) <= hs.size(); ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return {found.begin(), found.end()};
}

namespace detail {

struct Vertex
{
    Point point;
    std::vector<std::size_t> active;
};

/** Vertices of a bounded full-dimensional polytope by clipping its bounding box. */
inline std::vector<Vertex> clip_vertices(const std::vector<Halfspace>& box_then_constraints, std::size_t box_count,
                                         const BoxBounds& box)
{
    std::size_t d = box.size();
    const auto& hs = box_then_constraints;
    std::vector<Vertex> verts;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << d); ++mask) {
        Vertex v;
        v.point.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            bool upper = (mask >> i) & 1;
            v.point[i] = upper ? box[i].second : box[i].first;
            v.active.push_back(2 * i + (upper ? 0 : 1));
        }
        std::sort(v.active.begin(), v.active.end());
        verts.push_back(std::move(v));
    }
    auto adjacent = [&](const Vertex& a, const Vertex& b) {
        std::vector<std::size_t> common;
        std::set_intersection(a.active.begin(), a.active.end(), b.active.begin(), b.active.end(), std::back_inserter(common));
        if (common.size() + 1 < d)
            return false;
        std::vector<std::vector<Rational>> rows;
        for (auto c : common)
            rows.push_back(hs[c].normal);
        return matrix_rank(std::move(rows)) + 1 == d;
    };
    for (std::size_t k = box_count; k < hs.size(); ++k) {
        std::vector<Rational> s(verts.size());
        bool any_out = false;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            s[i] = slack(hs[k], verts[i].point);
            any_out |= s[i] > 0;
        }
        if (!any_out) {
            for (std::size_t i = 0; i < verts.size(); ++i)
                if (s[i] == 0)
                    verts[i].active.insert(std::lower_bound(verts[i].active.begin(), verts[i].active.end(), k), k);
            continue;
        }
        std::vector<Vertex> next;
        std::map<Point, std::size_t> where;
        for (std::size_t i = 0; i < verts.size(); ++i) {
            if (s[i] > 0)
                continue;
            Vertex v = verts[i];
            if (s[i] == 0)
                v.active.insert(std::lower_bound(v.active.begin(), v.active.end(), k), k);
            where.emplace(v.point, next.size());
            next.push_back(std::move(v));
        }
        for (std::size_t i = 0; i < verts.size(); ++i) {
            if (s[i] >= 0)
                continue;
            for (std::size_t j = 0; j < verts.size(); ++j) {
                if (s[j] <= 0 || !adjacent(verts[i], verts[j]))
                    continue;
                Rational t = s[i] / (s[i] - s[j]);
                Point q(d);
                for (std::size_t c = 0; c < d; ++c)
                    q[c] = verts[i].point[c] + t * (verts[j].point[c] - verts[i].point[c]);
                if (where.count(q))
                    continue;
                Vertex v;
                v.point = q;
                for (std::size_t c = 0; c <= k; ++c)
                    if (slack(hs[c], q) == 0)
                        v.active.push_back(c);
                where.emplace(q, next.size());
                next.push_back(std::move(v));
            }
        }
        verts = std::move(next);
    }
    return verts;
}

inline std::vector<Halfspace> with_box(const Polytope& p, const BoxBounds& box)
{
    std::vector<Halfspace> hs;
    std::size_t d = p.dimension();
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<Rational> up(d), down(d);
        up[i] = 1;
        down[i] = -1;
        hs.push_back({up, box[i].second});
        hs.push_back({down, -box[i].first});
    }
    hs.insert(hs.end(), p.constraints().begin(), p.constraints().end());
    return hs;
}

} // namespace detail

/**
 * Exact vertex set. Bounded full-dimensional polytopes are handled by
 * clipping their bounding box; degenerate ones by the exhaustive method.
 * Throws UnboundedRegionError for unbounded input.
 */
inline std::vector<Point> enumerate_vertices(const Polytope& p, const BoxBounds* box_hint = nullptr)
{
    if (p.is_empty())
        return {};
    if (!is_full_dimensional(p))
        return enumerate_vertices_exhaustive(p);
    std::optional<BoxBounds> box;
    if (box_hint)
        box = *box_hint;
    else
        box = bounding_box(p);
    if (!box)
        return {};
    auto hs = detail::with_box(p, *box);
    auto verts = detail::clip_vertices(hs, 2 * p.dimension(), *box);
    std::vector<Point> out;
    for (auto& v : verts)
        out.push_back(std::move(v.point));
    std::sort(out.begin(), out.end());
    return out;
}

/** d+1 vertices of a d-simplex. */
struct Simplex
{
    std::vector<Point> vertices;
};

inline Rational simplex_volume(const Simplex& s)
{
    std::size_t d = s.vertices.size() - 1;
    std::vector<std::vector<Rational>> m(d, std::vector<Rational>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m[j][i] = s.vertices[i + 1][j] - s.vertices[0][j];
    return abs(detail::determinant(std::move(m))) / factorial(static_cast<unsigned>(d));
}

namespace detail {

// Fan from the lexicographically smallest vertex over the facets not containing it.
inline void triangulate_face(const std::vector<Vertex>& all, const std::vector<std::size_t>& face, std::size_t k,
                             std::vector<std::size_t>& apexes, std::vector<Simplex>& out)
{
    if (k == 0) {
        Simplex s;
        for (auto a : apexes)
            s.vertices.push_back(all[a].point);
        s.vertices.push_back(all[face[0]].point);
        out.push_back(std::move(s));
        return;
    }
    std::size_t v0 = face[0];
    std::set<std::vector<std::size_t>> facets;
    std::set<std::size_t> constraints;
    for (auto v : face)
        constraints.insert(all[v].active.begin(), all[v].active.end());
    for (auto c : constraints) {
        if (std::binary_search(all[v0].active.begin(), all[v0].active.end(), c))
            continue;
        std::vector<std::size_t> sub;
        for (auto v : face)
            if (std::binary_search(all[v].active.begin(), all[v].active.end(), c))
                sub.push_back(v);
        if (sub.size() < k || facets.count(sub))
            continue;
        std::vector<const Point*> pts;
        for (auto v : sub)
            pts.push_back(&all[v].point);
        if (affine_rank(pts) + 1 != k)
            continue;
        facets.insert(sub);
    }
    apexes.push_back(v0);
    for (const auto& f : facets)
        triangulate_face(all, f, k - 1, apexes, out);
    apexes.pop_back();
}

} // namespace detail

/**
 * Simplices with disjoint interiors covering a bounded full-dimensional
 * polytope. Lower-dimensional (or empty) polytopes yield no simplices.
 */
inline std::vector<Simplex> triangulate(const Polytope& p, const BoxBounds* box_hint = nullptr)
{
    if (p.is_empty() || !is_full_dimensional(p))
        return {};
    std::size_t d = p.dimension();
    if (d == 0)
        return {Simplex{{Point{}}}};
    std::optional<BoxBounds> box = box_hint ? std::optional<BoxBounds>(*box_hint) : bounding_box(p);
    if (!box)
        return {};
    auto hs = detail::with_box(p, *box);
    auto verts = detail::clip_vertices(hs, 2 * d, *box);
    std::sort(verts.begin(), verts.end(), [](const auto& a, const auto& b) { return a.point < b.point; });
    for (auto& v : verts) {
        v.active.clear();
        for (std::size_t c = 0; c < hs.size(); ++c)
            if (detail::slack(hs[c], v.point) == 0)
                v.active.push_back(c);
    }
    std::vector<std::size_t> face(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i)
        face[i] = i;
    std::vector<std::size_t> apexes;
    std::vector<Simplex> out;
    detail::triangulate_face(verts, face, d, apexes, out);
    return out;
}

namespace detail {

using DenseMonomial = std::vector<unsigned>;
using DensePoly = std::map<DenseMonomial, Rational>;

inline DensePoly dense_multiply(const DensePoly& a, const DensePoly& b)
{
    DensePoly out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            DenseMonomial m(ma.size());
            for (std::size_t i = 0; i < m.size(); ++i)
                m[i] = ma[i] + mb[i];
            auto& slot = out[m];
            slot += ca * cb;
        }
    for (auto it = out.begin(); it != out.end();)
        it = it->second == 0 ? out.erase(it) : std::next(it);
    return out;
}

} // namespace detail

/** Exact ∫ poly over a simplex whose vertices are given in `coordinates` order. */
inline Rational integrate_over_simplex(const Polynomial& poly, const std::vector<Variable>& coordinates, const Simplex& s)
{
    std::size_t d = coordinates.size();
    if (d == 0)
        return poly.constant_term();
    std::vector<std::vector<Rational>> m(d, std::vector<Rational>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m[j][i] = s.vertices[i + 1][j] - s.vertices[0][j];
    Rational jac = abs(detail::determinant(m));
    if (jac == 0)
        return 0;
    if (poly.is_constant())
        return poly.constant_term() * jac / factorial(static_cast<unsigned>(d));
    std::unordered_map<std::uint64_t, std::size_t> index;
    for (std::size_t j = 0; j < d; ++j)
        index[coordinates[j].id()] = j;
    // x_j = v0_j + Σ_i m[j][i] t_i and its powers, built on demand
    std::vector<std::vector<detail::DensePoly>> powers(d);
    auto power = [&](std::size_t j, unsigned e) -> const detail::DensePoly& {
        auto& ps = powers[j];
        if (ps.empty()) {
            detail::DensePoly one;
            one[detail::DenseMonomial(d, 0)] = 1;
            ps.push_back(one);
            detail::DensePoly lin;
            if (s.vertices[0][j] != 0)
                lin[detail::DenseMonomial(d, 0)] = s.vertices[0][j];
            for (std::size_t i = 0; i < d; ++i)
                if (m[j][i] != 0) {
                    detail::DenseMonomial mono(d, 0);
                    mono[i] = 1;
                    lin[mono] = m[j][i];
                }
            ps.push_back(lin);
        }
        while (ps.size() <= e)
            ps.push_back(detail::dense_multiply(ps.back(), ps[1]));
        return ps[e];
    };
    Rational total = 0;
    for (const auto& [mono, coef] : poly.terms()) {
        detail::DensePoly t;
        t[detail::DenseMonomial(d, 0)] = coef;
        for (const auto& [v, e] : mono) {
            auto it = index.find(v.id());
            if (it == index.end())
                throw Error("weight polynomial uses '" + v.name() + "', which is not an integration coordinate");
            t = detail::dense_multiply(t, power(it->second, e));
        }
        for (const auto& [b, c] : t) {
            unsigned sum = 0;
            Rational num = 1;
            for (auto bi : b) {
                sum += bi;
                num *= factorial(bi);
            }
            total += c * num / factorial(static_cast<unsigned>(d) + sum);
        }
    }
    return total * jac;
}

/** Exact ∫ poly over the closure of p; 0 for empty or lower-dimensional p. */
inline Rational integrate_polynomial(const Polynomial& poly, const Polytope& p, const BoxBounds* box_hint = nullptr)
{
    if (p.is_empty() || poly.is_zero())
        return 0;
    if (p.dimension() == 0)
        return poly.constant_term();
    if (!box_hint)
        bounding_box(p);
    Rational total = 0;
    for (const auto& s : triangulate(p, box_hint))
        total += integrate_over_simplex(poly, p.coordinates(), s);
    return total;
}

} // namespace wmipfv

#endif
