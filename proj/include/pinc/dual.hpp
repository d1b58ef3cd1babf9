#pragma once

#include <cmath>

#include "pinc/tape.hpp"

namespace pinc {

/// Forward-mode number: value plus tangent. T is double for plain
/// time-derivatives and Var when the tangent computation itself must be
/// recorded on a tape (mixed second derivatives for the physics losses).
template <class T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(T value, T dot) : v(value), d(dot) {}
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
    return {-a.v, -a.d};
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.v * b.d + a.d * b.v};
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
}

// tangent-free operand variants
template <class T>
Dual<T> operator+(const Dual<T>& a, const T& b) { return {a.v + b, a.d}; }
template <class T>
Dual<T> operator+(const T& a, const Dual<T>& b) { return {a + b.v, b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, const T& b) { return {a.v - b, a.d}; }
template <class T>
Dual<T> operator-(const T& a, const Dual<T>& b) { return {a - b.v, -b.d}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const T& b) { return {a.v * b, a.d * b}; }
template <class T>
Dual<T> operator*(const T& a, const Dual<T>& b) { return {a * b.v, a * b.d}; }
template <class T>
Dual<T> operator/(const Dual<T>& a, const T& b) { return {a.v / b, a.d / b}; }

inline Dual<Var> operator+(const Dual<Var>& a, double b) { return {a.v + b, a.d}; }
inline Dual<Var> operator+(double a, const Dual<Var>& b) { return {a + b.v, b.d}; }
inline Dual<Var> operator-(const Dual<Var>& a, double b) { return {a.v - b, a.d}; }
inline Dual<Var> operator-(double a, const Dual<Var>& b) { return {a - b.v, -b.d}; }
inline Dual<Var> operator*(const Dual<Var>& a, double b) { return {a.v * b, a.d * b}; }
inline Dual<Var> operator*(double a, const Dual<Var>& b) { return {a * b.v, a * b.d}; }
inline Dual<Var> operator/(const Dual<Var>& a, double b) { return {a.v / b, a.d / b}; }

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
    using std::sqrt;
    T s = sqrt(a.v);
    return {s, a.d / (s * 2.0)};
}

template <class T>
Dual<T> tanh(const Dual<T>& a) {
    using std::tanh;
    T t = tanh(a.v);
    return {t, a.d * (1.0 - t * t)};
}

template <class T>
Dual<T> softplus(const Dual<T>& a) {
    return {softplus(a.v), a.d * sigmoid(a.v)};
}

template <class T>
double value_sign(const T& x);
template <>
inline double value_sign<double>(const double& x) {
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}
template <>
inline double value_sign<Var>(const Var& x) {
    return x.val > 0.0 ? 1.0 : (x.val < 0.0 ? -1.0 : 0.0);
}

template <class T>
Dual<T> abs(const Dual<T>& a) {
    using std::abs;
    return {abs(a.v), a.d * value_sign(a.v)};
}

template <class T>
Dual<T> square(const Dual<T>& a) {
    return {square(a.v), a.v * a.d * 2.0};
}

/// Scalar traits shared by the model/loss templates. S is one of
/// double, Var, Dual<double>, Dual<Var>.
template <class S>
struct ad_traits {
    static S make(double c) { return S(c); }
    static double value(const S& x) { return x; }
    using tangent_free = S;
};

template <>
struct ad_traits<Var> {
    static Var make(double c) { return constant(c); }
    static double value(const Var& x) { return x.val; }
    using tangent_free = Var;
};

template <class T>
struct ad_traits<Dual<T>> {
    static Dual<T> make(double c) { return {ad_traits<T>::make(c), ad_traits<T>::make(0.0)}; }
    static double value(const Dual<T>& x) { return ad_traits<T>::value(x.v); }
    using tangent_free = T;
};

template <class S>
S make_scalar(double c) { return ad_traits<S>::make(c); }

template <class S>
double scalar_value(const S& x) { return ad_traits<S>::value(x); }

/// Fused affine for dual activations with tangent-free weights: the value and
/// tangent inner products each become one tape node.
inline Dual<Var> dot_affine(std::span<const Var> w, std::span<const Dual<Var>> x,
                            const Var& b) {
    double v = b.val;
    double dv = 0.0;
    Tape* t = b.tape;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i].val * x[i].v.val;
        dv += w[i].val * x[i].d.val;
        if (!t) t = w[i].tape;
    }
    if (!t) {
        for (const auto& xi : x) {
            if (xi.v.tape) { t = xi.v.tape; break; }
            if (xi.d.tape) { t = xi.d.tape; break; }
        }
    }
    if (!t) return {constant(v), constant(dv)};
    std::uint32_t m = t->mark();
    t->push_arg(b, 1.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        t->push_arg(w[i], x[i].v.val);
        t->push_arg(x[i].v, w[i].val);
    }
    Var value = t->make_node(v, m);
    m = t->mark();
    for (std::size_t i = 0; i < w.size(); ++i) {
        t->push_arg(w[i], x[i].d.val);
        t->push_arg(x[i].d, w[i].val);
    }
    Var dot = t->make_node(dv, m);
    return {value, dot};
}

inline Dual<double> dot_affine(std::span<const double> w, std::span<const Dual<double>> x,
                               double b) {
    double v = b;
    double dv = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i] * x[i].v;
        dv += w[i] * x[i].d;
    }
    return {v, dv};
}

inline Dual<Var> vsum(std::span<const Dual<Var>> xs) {
    double v = 0.0;
    double dv = 0.0;
    Tape* t = nullptr;
    for (const auto& x : xs) {
        v += x.v.val;
        dv += x.d.val;
        if (!t) t = x.v.tape;
        if (!t) t = x.d.tape;
    }
    if (!t) return {constant(v), constant(dv)};
    std::uint32_t m = t->mark();
    for (const auto& x : xs) t->push_arg(x.v, 1.0);
    Var value = t->make_node(v, m);
    m = t->mark();
    for (const auto& x : xs) t->push_arg(x.d, 1.0);
    Var dot = t->make_node(dv, m);
    return {value, dot};
}

inline Dual<double> vsum(std::span<const Dual<double>> xs) {
    double v = 0.0;
    double dv = 0.0;
    for (const auto& x : xs) {
        v += x.v;
        dv += x.d;
    }
    return {v, dv};
}

} // namespace pinc
