#pragma once

// Ranking algebra: selective commutative dioids. prefer picks one operand and
// induces the total order a <= b  <=>  prefer(a,b) == a; combine aggregates.
// Algorithms never divide weights, so has_inverse is informational only.

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace anyk {

enum class Monotonicity { SubsetMonotone, StrongSubsetMonotone };

// Shortest decimal form that parses back to the same bits.
inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

template <class D>
concept SelectiveDioid = requires(typename D::W a, typename D::W b) {
    { D::combine(a, b) } -> std::same_as<typename D::W>;
    { D::prefer(a, b) } -> std::same_as<typename D::W>;
    { D::zero() } -> std::same_as<typename D::W>;
    { D::one() } -> std::same_as<typename D::W>;
    { D::less(a, b) } -> std::same_as<bool>;
    { D::eq(a, b) } -> std::same_as<bool>;
    { D::text(a) } -> std::same_as<std::string>;
    { D::mono } -> std::convertible_to<Monotonicity>;
    { D::has_inverse } -> std::convertible_to<bool>;
};

// Sum-of-weights: (R u {inf}, min, +, inf, 0). Cancellative.
struct Tropical {
    using W = double;
    static constexpr const char* name = "sum";
    static constexpr Monotonicity mono = Monotonicity::StrongSubsetMonotone;
    static constexpr bool has_inverse = true;
    static W zero() { return std::numeric_limits<double>::infinity(); }
    static W one() { return 0.0; }
    static W combine(W a, W b) { return a + b; }
    static bool less(W a, W b) { return a < b; }
    static bool eq(W a, W b) { return a == b; }
    static W prefer(W a, W b) { return less(b, a) ? b : a; }
    static std::string text(W a) { return fmt_double(a); }
};

// Bottleneck: (R u {-inf, inf}, min, max, inf, -inf). A lattice.
struct MinMax {
    using W = double;
    static constexpr const char* name = "max";
    static constexpr Monotonicity mono = Monotonicity::StrongSubsetMonotone;
    static constexpr bool has_inverse = false;
    static W zero() { return std::numeric_limits<double>::infinity(); }
    static W one() { return -std::numeric_limits<double>::infinity(); }
    static W combine(W a, W b) { return a > b ? a : b; }
    static bool less(W a, W b) { return a < b; }
    static bool eq(W a, W b) { return a == b; }
    static W prefer(W a, W b) { return less(b, a) ? b : a; }
    static std::string text(W a) { return fmt_double(a); }
};

// Probability-style: ([0,1], min, *, 0, 1). Not cancellative (0 kills the
// cancellation argument), so only subset-monotone; part+ refuses it.
struct Product {
    using W = double;
    static constexpr const char* name = "prod";
    static constexpr Monotonicity mono = Monotonicity::SubsetMonotone;
    static constexpr bool has_inverse = false;
    static W zero() { return 0.0; }
    static W one() { return 1.0; }
    static W combine(W a, W b) { return a * b; }
    static bool less(W a, W b) { return a < b; }
    static bool eq(W a, W b) { return a == b; }
    static W prefer(W a, W b) { return less(b, a) ? b : a; }
    static std::string text(W a) { return fmt_double(a); }
};

// Fixed-length vectors under lexicographic min / componentwise +.
// n == 0 with inf unset is the empty vector: the + identity, zero-extended on
// demand. inf set is the absorbing all-infinity vector of any length.
inline constexpr int kLexMaxDim = 8;

struct LexVec {
    std::array<double, kLexMaxDim> v{};
    std::uint8_t n = 0;
    std::uint8_t inf = 0;
};

inline LexVec lex_of(std::initializer_list<double> xs) {
    LexVec r;
    for (double x : xs) r.v[r.n++] = x;
    return r;
}

struct Lex {
    using W = LexVec;
    static constexpr const char* name = "lex";
    static constexpr Monotonicity mono = Monotonicity::StrongSubsetMonotone;
    static constexpr bool has_inverse = true;
    static W zero() { W r; r.inf = 1; return r; }
    static W one() { return {}; }

    static int cmp(const W& a, const W& b) {
        if (a.inf || b.inf) return a.inf == b.inf ? 0 : (a.inf ? 1 : -1);
        int m = a.n > b.n ? a.n : b.n;
        for (int i = 0; i < m; ++i) {
            double x = i < a.n ? a.v[i] : 0.0;
            double y = i < b.n ? b.v[i] : 0.0;
            if (x < y) return -1;
            if (x > y) return 1;
        }
        return 0;
    }
    static W combine(const W& a, const W& b) {
        if (a.inf || b.inf) return zero();
        W r;
        r.n = a.n > b.n ? a.n : b.n;
        for (int i = 0; i < r.n; ++i)
            r.v[i] = (i < a.n ? a.v[i] : 0.0) + (i < b.n ? b.v[i] : 0.0);
        return r;
    }
    static bool less(const W& a, const W& b) { return cmp(a, b) < 0; }
    static bool eq(const W& a, const W& b) { return cmp(a, b) == 0; }
    static W prefer(const W& a, const W& b) { return less(b, a) ? b : a; }
    static std::string text(const W& a) {
        if (a.inf) return "inf";
        std::string s = "[";
        for (int i = 0; i < a.n; ++i) {
            if (i) s += ",";
            s += fmt_double(a.v[i]);
        }
        return s + "]";
    }
};

struct DioidLawReport {
    std::vector<std::string> violated;  // law names, first counterexample each
    std::vector<std::string> detail;
    bool ok() const { return violated.empty(); }
    bool has(const std::string& law) const {
        for (auto& l : violated)
            if (l == law) return true;
        return false;
    }
};

// Evaluates the dioid axioms on all pairs/triples from samples and the strong
// subset-monotonicity quadruple check when the dioid declares that class.
// Returns the violated laws (empty on pass); one entry per law.
template <SelectiveDioid D>
DioidLawReport check_dioid_laws(const std::vector<typename D::W>& samples) {
    using W = typename D::W;
    DioidLawReport rep;
    auto fail = [&](const char* law, const std::string& why) {
        if (!rep.has(law)) {
            rep.violated.push_back(law);
            rep.detail.push_back(why);
        }
    };
    auto leq = [](const W& a, const W& b) { return D::eq(D::prefer(a, b), a); };

    for (const W& a : samples) {
        if (!D::eq(D::combine(a, D::zero()), D::zero()))
            fail("absorption", "combine(" + D::text(a) + ", zero) != zero");
        if (!D::eq(D::combine(a, D::one()), a))
            fail("identity", "combine(" + D::text(a) + ", one) != " + D::text(a));
        if (!D::eq(D::prefer(a, a), a))
            fail("prefer-idempotency", "prefer(a,a) != a for a=" + D::text(a));
    }
    for (const W& a : samples)
        for (const W& b : samples) {
            W p = D::prefer(a, b);
            if (!D::eq(p, a) && !D::eq(p, b))
                fail("selectivity", "prefer(" + D::text(a) + "," + D::text(b) + ") = " + D::text(p));
            if (!D::eq(p, D::prefer(b, a)))
                fail("prefer-commutativity", "a=" + D::text(a) + " b=" + D::text(b));
            if (!D::eq(D::combine(a, b), D::combine(b, a)))
                fail("combine-commutativity", "a=" + D::text(a) + " b=" + D::text(b));
            if (leq(a, b) && leq(b, a) && !D::eq(a, b))
                fail("total-order", "antisymmetry: a=" + D::text(a) + " b=" + D::text(b));
        }
    for (const W& a : samples)
        for (const W& b : samples)
            for (const W& c : samples) {
                std::string abc =
                    "a=" + D::text(a) + " b=" + D::text(b) + " c=" + D::text(c);
                if (!D::eq(D::prefer(D::prefer(a, b), c), D::prefer(a, D::prefer(b, c))))
                    fail("prefer-associativity", abc);
                if (!D::eq(D::combine(D::combine(a, b), c), D::combine(a, D::combine(b, c))))
                    fail("combine-associativity", abc);
                if (!D::eq(D::combine(D::prefer(a, b), c),
                           D::prefer(D::combine(a, c), D::combine(b, c))))
                    fail("distributivity", abc);
                if (leq(a, b) && leq(b, c) && !leq(a, c))
                    fail("total-order", "transitivity: " + abc);
                if (leq(a, b) && !leq(D::combine(a, c), D::combine(b, c)))
                    fail("order-monotonicity", abc);
            }
    if (D::mono == Monotonicity::StrongSubsetMonotone) {
        // x1 <= x2 and x1*y1 <= x1*y2 must force x2*y1 <= x2*y2.
        for (const W& x1 : samples)
            for (const W& x2 : samples) {
                if (!leq(x1, x2)) continue;
                for (const W& y1 : samples)
                    for (const W& y2 : samples)
                        if (leq(D::combine(x1, y1), D::combine(x1, y2)) &&
                            !leq(D::combine(x2, y1), D::combine(x2, y2)))
                            fail("strong-monotonicity",
                                 "x1=" + D::text(x1) + " x2=" + D::text(x2) +
                                     " y1=" + D::text(y1) + " y2=" + D::text(y2));
            }
    }
    return rep;
}

// Positional lifting of raw tuple weights. Scalar structures ignore the
// slot; the lexicographic structure places the weight at the slot's
// component so earlier atoms dominate.
template <class D>
inline typename D::W lift_weight(double w, int, int) {
    return w;
}

template <>
inline LexVec lift_weight<Lex>(double w, int slot, int slots) {
    if (slots > int(kLexMaxDim)) throw std::length_error("too many components for lex ranking");
    LexVec r{};
    r.n = uint8_t(slots);
    r.v[size_t(slot)] = w;
    return r;
}

}  // namespace anyk
