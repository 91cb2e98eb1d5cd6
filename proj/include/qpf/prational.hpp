#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

// Exact arithmetic on p-rationals m/p^k, the additive character chi_p, and
// max-norms on vectors. Every lattice point, matrix entry and character
// argument in this library lives in this ring, which keeps {x}_p and
// chi_p(x) exact.

namespace qpf {

using i64 = long long;
using i128 = __int128;

static_assert(sizeof(i64) == 8 && sizeof(i128) == 16, "64-bit platform with __int128 required");

inline i64 checked_add(i64 a, i64 b) {
    i64 r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("integer overflow in add");
    return r;
}

inline i64 checked_mul(i64 a, i64 b) {
    i64 r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow in mul");
    return r;
}

// p^e for e >= 0, overflow-checked.
inline i64 checked_pow(i64 p, int e) {
    if (e < 0) throw std::invalid_argument("checked_pow: negative exponent");
    i64 r = 1;
    for (int i = 0; i < e; ++i) r = checked_mul(r, p);
    return r;
}

inline bool is_prime(i64 n) {
    if (n < 2) return false;
    for (i64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Multiplicity of p in n, n != 0.
inline int p_multiplicity(i64 n, i64 p) {
    if (n == 0) throw std::invalid_argument("p_multiplicity of zero");
    int v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

/// A scalar m / p^k with exact p-adic order, norm and fractional part.
/// Canonical form: gcd(num, p) = 1 whenever kexp > 0, and 0 is (0, 0).
struct PRational {
    i64 num = 0;
    int kexp = 0;
    int prime = 2;

    static constexpr int ORD_INF = std::numeric_limits<int>::max();

    PRational() = default;

    PRational(i64 n, int k, int p) : num(n), kexp(k), prime(p) {
        if (!is_prime(p)) throw std::invalid_argument("PRational: prime must be prime and >= 2");
        if (k < 0) throw std::invalid_argument("PRational: negative denominator exponent");
        canonicalize();
    }

    static PRational integer(i64 n, int p) { return PRational(n, 0, p); }
    static PRational zero(int p) { return PRational(0, 0, p); }

    bool is_zero() const { return num == 0; }

    /// ord_p(num) - kexp; order(0) is the ORD_INF sentinel, never a large integer.
    int order() const {
        if (num == 0) return ORD_INF;
        return p_multiplicity(num, prime) - kexp;
    }

    double to_double() const {
        return static_cast<double>(num) / static_cast<double>(checked_pow(prime, kexp));
    }

    bool operator==(const PRational& o) const {
        return num == o.num && kexp == o.kexp && prime == o.prime;
    }
    bool operator!=(const PRational& o) const { return !(*this == o); }

    PRational operator-() const {
        PRational r = *this;
        r.num = -r.num;
        return r;
    }

    PRational operator+(const PRational& o) const {
        require_same_prime(o);
        int k = std::max(kexp, o.kexp);
        i64 a = checked_mul(num, checked_pow(prime, k - kexp));
        i64 b = checked_mul(o.num, checked_pow(prime, k - o.kexp));
        return PRational(checked_add(a, b), k, prime);
    }

    PRational operator-(const PRational& o) const { return *this + (-o); }

    PRational operator*(const PRational& o) const {
        require_same_prime(o);
        return PRational(checked_mul(num, o.num), kexp + o.kexp, prime);
    }

    /// x * p^e for any integer e (exact).
    PRational scaled_by_p_power(int e) const {
        if (num == 0) return *this;
        if (e >= 0) {
            int cancel = std::min(e, kexp);
            return PRational(checked_mul(num, checked_pow(prime, e - cancel)), kexp - cancel, prime);
        }
        return PRational(num, kexp - e, prime);
    }

    std::string to_string() const {
        std::string s = std::to_string(num);
        if (kexp > 0) s += "/" + std::to_string(checked_pow(prime, kexp));
        return s;
    }

private:
    void require_same_prime(const PRational& o) const {
        if (prime != o.prime) throw std::invalid_argument("PRational: mixed primes");
    }

    void canonicalize() {
        if (num == 0) { kexp = 0; return; }
        while (kexp > 0 && num % prime == 0) { num /= prime; --kexp; }
    }
};

inline double padic_norm(const PRational& x) {
    if (x.is_zero()) return 0.0;
    return std::pow(static_cast<double>(x.prime), -static_cast<double>(x.order()));
}

/// Exponent e with |x|_p = p^e; throws on zero (order is the +inf sentinel there).
inline int padic_norm_exponent(const PRational& x) {
    if (x.is_zero()) throw std::domain_error("padic_norm_exponent of zero");
    return -x.order();
}

/// {x}_p: the principal part of the digit expansion, a rational in [0,1).
/// Satisfies ord(x - {x}_p) >= 0.
inline PRational fractional_part(const PRational& x) {
    if (x.is_zero() || x.order() >= 0) return PRational::zero(x.prime);
    i64 den = checked_pow(x.prime, x.kexp);
    i64 m = x.num % den;
    if (m < 0) m += den;
    return PRational(m, x.kexp, x.prime);
}

/// Point on the unit circle; |re^2 + im^2 - 1| <= 1e-12 enforced on construction.
struct UnitComplex {
    double re = 1.0;
    double im = 0.0;

    UnitComplex() = default;
    UnitComplex(double r, double i) : re(r), im(i) {
        if (std::abs(r * r + i * i - 1.0) > 1e-12)
            throw std::invalid_argument("UnitComplex: not on the unit circle");
    }

    UnitComplex operator*(const UnitComplex& o) const {
        return UnitComplex(re * o.re - im * o.im, re * o.im + im * o.re);
    }
    UnitComplex conj() const { return UnitComplex(re, -im); }
    std::complex<double> to_complex() const { return {re, im}; }
};

/// chi_p(x) = exp(2 pi i {x}_p). Exact in the argument: the fractional part is
/// computed in integer arithmetic before any floating point enters.
inline UnitComplex chi(const PRational& x) {
    PRational f = fractional_part(x);
    if (f.is_zero()) return UnitComplex(1.0, 0.0);
    double den = static_cast<double>(checked_pow(f.prime, f.kexp));
    double angle = 2.0 * M_PI * (static_cast<double>(f.num) / den);
    return UnitComplex(std::cos(angle), std::sin(angle));
}

/// Vector in Q_p^N with all coordinates sharing one prime.
struct PVector {
    int prime = 2;
    std::vector<PRational> coords;

    PVector() = default;
    PVector(int p, std::vector<PRational> c) : prime(p), coords(std::move(c)) {
        for (const auto& x : coords)
            if (x.prime != prime) throw std::invalid_argument("PVector: mixed primes");
    }

    static PVector zero(int p, int n) {
        return PVector(p, std::vector<PRational>(n, PRational::zero(p)));
    }

    int dim() const { return static_cast<int>(coords.size()); }

    bool is_zero() const {
        for (const auto& x : coords)
            if (!x.is_zero()) return false;
        return true;
    }

    /// ord(x) = min_i ord(x_i); ORD_INF for the zero vector.
    int order() const {
        int o = PRational::ORD_INF;
        for (const auto& x : coords)
            if (!x.is_zero()) o = std::min(o, x.order());
        return o;
    }
};

/// ||x||_p = max_i |x_i|_p.
inline double vector_norm(const PVector& x) {
    if (x.is_zero()) return 0.0;
    return std::pow(static_cast<double>(x.prime), -static_cast<double>(x.order()));
}

inline int vector_norm_exponent(const PVector& x) {
    if (x.is_zero()) throw std::domain_error("vector_norm_exponent of zero vector");
    return -x.order();
}

} // namespace qpf
