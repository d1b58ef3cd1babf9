#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pinc/errors.hpp"

namespace pinc {

class Tape;

/// Reverse-mode scalar: either a node on a tape or a constant (tape == nullptr).
/// Constants never receive adjoints and never allocate tape storage.
struct Var {
    double val = 0.0;
    std::uint32_t idx = 0;
    Tape* tape = nullptr;

    Var() = default;
    Var(double v, std::uint32_t i, Tape* t) : val(v), idx(i), tape(t) {}
    bool is_const() const { return tape == nullptr; }
};

inline Var constant(double v) { return Var{v, 0, nullptr}; }

/// Gradient of a scalar with respect to the flat parameter vector, aligned
/// with the canonical parameter ordering.
using GradientVector = std::vector<double>;

/// Wengert list with variable-arity nodes. Node i's argument range is
/// [arg_start_[i], arg_start_[i+1]); arguments carry (parent, partial).
/// Arguments with zero partials or constant parents are never recorded,
/// so structurally-zero tangent chains vanish from the tape.
class Tape {
public:
    Var leaf(double v) {
        arg_start_.push_back(static_cast<std::uint32_t>(parents_.size()));
        return Var{v, static_cast<std::uint32_t>(arg_start_.size() - 1), this};
    }

    std::uint32_t mark() const { return static_cast<std::uint32_t>(parents_.size()); }

    void push_arg(const Var& p, double partial) {
        if (p.tape == nullptr || partial == 0.0) return;
        parents_.push_back(p.idx);
        partials_.push_back(partial);
    }

    /// Finishes a node whose arguments were pushed since `mark`.
    Var make_node(double value, std::uint32_t m) {
        arg_start_.push_back(m);
        return Var{value, static_cast<std::uint32_t>(arg_start_.size() - 1), this};
    }

    Var unary(double v, const Var& a, double da) {
        const std::uint32_t m = mark();
        push_arg(a, da);
        return make_node(v, m);
    }

    Var binary(double v, const Var& a, double da, const Var& b, double db) {
        const std::uint32_t m = mark();
        push_arg(a, da);
        push_arg(b, db);
        return make_node(v, m);
    }

    std::size_t size() const { return arg_start_.size(); }

    void clear() {
        arg_start_.clear();
        parents_.clear();
        partials_.clear();
    }

    /// Accumulates d(out)/d(node) for every node into `adjoint`
    /// (resized and zeroed here; adjoint[i] indexed by node id).
    void backward(const Var& out, std::vector<double>& adjoint) const {
        adjoint.assign(arg_start_.size(), 0.0);
        if (out.is_const()) return;
        adjoint[out.idx] = 1.0;
        const std::uint32_t n = static_cast<std::uint32_t>(arg_start_.size());
        for (std::uint32_t i = out.idx + 1; i-- > 0;) {
            const double a = adjoint[i];
            if (a == 0.0) continue;
            const std::uint32_t b = arg_start_[i];
            const std::uint32_t e = (i + 1 < n) ? arg_start_[i + 1]
                                                : static_cast<std::uint32_t>(parents_.size());
            for (std::uint32_t k = b; k < e; ++k) {
                adjoint[parents_[k]] += a * partials_[k];
            }
        }
    }

private:
    std::vector<std::uint32_t> arg_start_;
    std::vector<std::uint32_t> parents_;
    std::vector<double> partials_;
};

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape ? a.tape : b.tape; }
}

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    if (!t) return constant(a.val + b.val);
    if (a.is_const() && a.val == 0.0) return b;
    if (b.is_const() && b.val == 0.0) return a;
    return t->binary(a.val + b.val, a, 1.0, b, 1.0);
}

inline Var operator-(const Var& a) {
    if (a.is_const()) return constant(-a.val);
    return a.tape->unary(-a.val, a, -1.0);
}

inline Var operator-(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    if (!t) return constant(a.val - b.val);
    if (b.is_const() && b.val == 0.0) return a;
    if (a.is_const() && a.val == 0.0) return -b;
    return t->binary(a.val - b.val, a, 1.0, b, -1.0);
}

inline Var operator*(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    if (!t) return constant(a.val * b.val);
    if (a.is_const()) {
        if (a.val == 0.0) return constant(0.0);
        if (a.val == 1.0) return b;
        return t->unary(a.val * b.val, b, a.val);
    }
    if (b.is_const()) {
        if (b.val == 0.0) return constant(0.0);
        if (b.val == 1.0) return a;
        return t->unary(a.val * b.val, a, b.val);
    }
    return t->binary(a.val * b.val, a, b.val, b, a.val);
}

inline Var operator/(const Var& a, const Var& b) {
    Tape* t = detail::tape_of(a, b);
    if (!t) return constant(a.val / b.val);
    const double inv = 1.0 / b.val;
    if (b.is_const()) {
        if (a.is_const()) return constant(a.val * inv);
        return t->unary(a.val * inv, a, inv);
    }
    if (a.is_const() && a.val == 0.0) return constant(0.0);
    return t->binary(a.val * inv, a, inv, b, -a.val * inv * inv);
}

inline Var operator+(const Var& a, double b) { return a + constant(b); }
inline Var operator+(double a, const Var& b) { return constant(a) + b; }
inline Var operator-(const Var& a, double b) { return a - constant(b); }
inline Var operator-(double a, const Var& b) { return constant(a) - b; }
inline Var operator*(const Var& a, double b) { return a * constant(b); }
inline Var operator*(double a, const Var& b) { return constant(a) * b; }
inline Var operator/(const Var& a, double b) { return a / constant(b); }
inline Var operator/(double a, const Var& b) { return constant(a) / b; }

inline double softplus(double x) {
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Var sqrt(const Var& a) {
    const double s = std::sqrt(a.val);
    if (a.is_const()) return constant(s);
    return a.tape->unary(s, a, 0.5 / s);
}

inline Var tanh(const Var& a) {
    const double tv = std::tanh(a.val);
    if (a.is_const()) return constant(tv);
    return a.tape->unary(tv, a, 1.0 - tv * tv);
}

inline Var softplus(const Var& a) {
    const double v = softplus(a.val);
    if (a.is_const()) return constant(v);
    return a.tape->unary(v, a, sigmoid(a.val));
}

inline Var sigmoid(const Var& a) {
    const double s = sigmoid(a.val);
    if (a.is_const()) return constant(s);
    return a.tape->unary(s, a, s * (1.0 - s));
}

inline Var abs(const Var& a) {
    if (a.is_const()) return constant(std::abs(a.val));
    const double sgn = a.val > 0.0 ? 1.0 : (a.val < 0.0 ? -1.0 : 0.0);
    return a.tape->unary(std::abs(a.val), a, sgn);
}

inline Var square(const Var& a) {
    if (a.is_const()) return constant(a.val * a.val);
    return a.tape->unary(a.val * a.val, a, 2.0 * a.val);
}

inline double square(double a) { return a * a; }

/// Fused inner product plus bias: one tape node instead of 2n.
inline Var dot_affine(std::span<const Var> w, std::span<const Var> x, const Var& b) {
    double v = b.val;
    Tape* t = b.tape;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i].val * x[i].val;
        if (!t) t = w[i].tape;
        if (!t) t = x[i].tape;
    }
    if (!t) return constant(v);
    const std::uint32_t m = t->mark();
    t->push_arg(b, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        t->push_arg(w[i], x[i].val);
        t->push_arg(x[i], w[i].val);
    }
    return t->make_node(v, m);
}

inline double dot_affine(std::span<const double> w, std::span<const double> x, double b) {
    double v = b;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * x[i];
    return v;
}

/// Fused sum of a vector: one tape node with unit partials.
inline Var vsum(std::span<const Var> xs) {
    double v = 0.0;
    Tape* t = nullptr;
    for (const Var& x : xs) {
        v += x.val;
        if (!t) t = x.tape;
    }
    if (!t) return constant(v);
    const std::uint32_t m = t->mark();
    for (const Var& x : xs) t->push_arg(x, 1.0);
    return t->make_node(v, m);
}

inline double vsum(std::span<const double> xs) {
    double v = 0.0;
    for (double x : xs) v += x;
    return v;
}

} // namespace pinc
