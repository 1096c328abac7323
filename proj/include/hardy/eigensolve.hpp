#ifndef HARDY_EIGENSOLVE_HPP
#define HARDY_EIGENSOLVE_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardy/assembly.hpp"
#include "hardy/errors.hpp"

namespace hardy {

/// Smallest generalized eigenpair of (K, M), vector normalized to unit M-norm.
struct EigenResult {
    double lambda_min = 0.0;
    std::vector<double> vector;
    double residual = 0.0;   // ||K v - lambda M v||_2 / ||K v||_2
    int iterations = 0;
    // Rounding floor of the residual above for this pencil/vector; the
    // achieved residual satisfies residual <= max(tol, residual_floor).
    double residual_floor = 0.0;
};

namespace detail {

// y = (K - sigma M) x pattern helpers on tridiagonal storage.
inline void mass_matvec(const SymTriPencil& p, const std::vector<double>& x,
                        std::vector<double>& y) {
    const std::size_t n = p.dof_count;
    for (std::size_t i = 0; i < n; ++i) {
        double s = p.M_diag[i] * x[i];
        if (i > 0) s += p.M_off[i - 1] * x[i - 1];
        if (i + 1 < n) s += p.M_off[i] * x[i + 1];
        y[i] = s;
    }
}

// Stiffness product in element (difference) form: row sums of K vanish except
// at the DOF adjacent to the dropped Dirichlet node, so forming
// ks_e (v_i - v_j) avoids the cancellation of K_diag v_i + K_off v_{i +- 1}.
inline void stiff_matvec(const SymTriPencil& p, const std::vector<double>& x,
                         std::vector<double>& y) {
    const std::size_t n = p.dof_count;
    const std::size_t E = p.elem_stiff.size();
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.0;
    for (std::size_t e = 0; e < E; ++e) {
        const double ks = p.elem_stiff[e];
        std::size_t left, right;
        if (p.bc == BoundaryCondition::LeftDirichlet) {
            left = (e == 0) ? static_cast<std::size_t>(-1) : e - 1;
            right = e;
        } else {
            left = e;
            right = (e + 1 < E) ? e + 1 : static_cast<std::size_t>(-1);
        }
        const double vl = (left == static_cast<std::size_t>(-1)) ? 0.0 : x[left];
        const double vr = (right == static_cast<std::size_t>(-1)) ? 0.0 : x[right];
        const double d = vr - vl;
        if (left != static_cast<std::size_t>(-1)) y[left] -= ks * d;
        if (right != static_cast<std::size_t>(-1)) y[right] += ks * d;
    }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Tridiagonal LU with partial pivoting (dgttrf-style). Pivoting introduces a
// second superdiagonal.
struct TriLU {
    std::vector<double> dl, d, du, du2;
    std::vector<int> piv;

    void factor(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper) {
        const std::size_t n = diag.size();
        dl = std::move(lower); d = std::move(diag); du = std::move(upper);
        du2.assign(n >= 2 ? n - 2 : 0, 0.0);
        piv.assign(n, 0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                piv[i] = 0;
                if (d[i] == 0.0) d[i] = std::numeric_limits<double>::min();
                const double m = dl[i] / d[i];
                dl[i] = m;
                d[i + 1] -= m * du[i];
            } else {
                piv[i] = 1;
                const double m = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = m;
                const double tmp = d[i + 1];
                d[i + 1] = du[i] - m * tmp;
                du[i] = tmp;
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du2[i];
                }
            }
        }
        if (d[n - 1] == 0.0) d[n - 1] = std::numeric_limits<double>::min();
    }

    void solve(std::vector<double>& x) const {
        const std::size_t n = d.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (piv[i] == 0) {
                x[i + 1] -= dl[i] * x[i];
            } else {
                const double t = x[i];
                x[i] = x[i + 1];
                x[i + 1] = t - dl[i] * x[i];
            }
        }
        x[n - 1] /= d[n - 1];
        if (n >= 2)
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        for (std::size_t k = n; k-- > 2;) {
            const std::size_t i = k - 2;
            x[i] = (x[i] - du[i] * x[i + 1] - (i + 2 < n ? du2[i] * x[i + 2] : 0.0)) / d[i];
        }
    }
};

} // namespace detail

/// Number of generalized eigenvalues of (K, M) strictly below sigma, by
/// Sylvester's law: count the negative pivots of LDL^T of K - sigma M.
/// Throws ZeroPivotError when a pivot vanishes exactly (sigma hits an
/// eigenvalue of a leading minor); the caller nudges sigma and retries.
inline int inertia(const SymTriPencil& p, double sigma) {
    const std::size_t n = p.dof_count;
    int neg = 0;
    double q = p.K_diag[0] - sigma * p.M_diag[0];
    if (q == 0.0)
        throw ZeroPivotError("inertia: zero pivot at row 0");
    if (q < 0.0) ++neg;
    for (std::size_t i = 1; i < n; ++i) {
        const double e = p.K_off[i - 1] - sigma * p.M_off[i - 1];
        const double qi = (p.K_diag[i] - sigma * p.M_diag[i]) - e * e / q;
        if (qi == 0.0)
            throw ZeroPivotError("inertia: zero pivot at row " + std::to_string(i));
        if (qi < 0.0) ++neg;
        q = qi;
    }
    return neg;
}

namespace detail {

inline int inertia_nudged(const SymTriPencil& p, double sigma) {
    for (int k = 0; k < 16; ++k) {
        const double nudge = static_cast<double>((k + 1) / 2) * 1e-14 * ((k % 2) ? -1.0 : 1.0);
        const double s = (sigma == 0.0) ? sigma + nudge : sigma * (1.0 + nudge);
        try {
            return inertia(p, s);
        } catch (const ZeroPivotError&) {
        }
    }
    throw ZeroPivotError("inertia: persistent zero pivot near sigma");
}

} // namespace detail

/// Quotient (v^T K v) / (v^T M v). The stiffness form is summed element by
/// element, which keeps it a sum of nonnegative terms.
inline double rayleigh(const SymTriPencil& p, const std::vector<double>& v) {
    if (v.size() != p.dof_count)
        throw std::invalid_argument("rayleigh: vector length != dof_count");
    bool nonzero = false;
    for (double c : v)
        if (c != 0.0) { nonzero = true; break; }
    if (!nonzero)
        throw std::invalid_argument("rayleigh: zero vector");
    const std::size_t E = p.elem_stiff.size();
    double num = 0.0;
    for (std::size_t e = 0; e < E; ++e) {
        double vl, vr;
        if (p.bc == BoundaryCondition::LeftDirichlet) {
            vl = (e == 0) ? 0.0 : v[e - 1];
            vr = v[e];
        } else {
            vl = v[e];
            vr = (e + 1 < E) ? v[e + 1] : 0.0;
        }
        const double d = vr - vl;
        num += p.elem_stiff[e] * d * d;
    }
    double den = 0.0;
    for (std::size_t i = 0; i < p.dof_count; ++i) {
        den += p.M_diag[i] * v[i] * v[i];
        if (i + 1 < p.dof_count) den += 2.0 * p.M_off[i] * v[i] * v[i + 1];
    }
    return num / den;
}

/// Smallest eigenpair by spectrum slicing (certified bracket from inertia
/// bisection) followed by inverse iteration at the lower bracket end.
/// `tol` is the relative bracket width on lambda_min.
inline EigenResult smallest_eigenpair(const SymTriPencil& p, double tol = 1e-12) {
    if (!(tol > 0.0))
        throw std::invalid_argument("smallest_eigenpair: tol must be positive");
    const std::size_t n = p.dof_count;
    if (n == 0)
        throw std::invalid_argument("smallest_eigenpair: empty pencil");

    // Initial bracket [0, max_i (K row absolute sum / M_diag_i)].
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rs = std::abs(p.K_diag[i]);
        if (i > 0) rs += std::abs(p.K_off[i - 1]);
        if (i + 1 < n) rs += std::abs(p.K_off[i]);
        hi = std::max(hi, rs / p.M_diag[i]);
    }
    double lo = 0.0;
    if (detail::inertia_nudged(p, lo) != 0)
        throw std::invalid_argument("smallest_eigenpair: K is not positive definite");
    int expand = 0;
    while (detail::inertia_nudged(p, hi) < 1) {
        hi *= 2.0;
        if (++expand > 64)
            throw ConvergenceError("smallest_eigenpair: no eigenvalue below Gershgorin bound", lo, hi);
    }
    int steps = 0;
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at roundoff resolution
        if (detail::inertia_nudged(p, mid) >= 1)
            hi = mid;
        else
            lo = mid;
        if (++steps > 4096)
            throw ConvergenceError("smallest_eigenpair: bisection stalled", lo, hi);
    }

    // Inverse iteration with the SPD shift sigma = lo.
    const double sigma = lo;
    std::vector<double> dl(n > 1 ? n - 1 : 0), dd(n), du(n > 1 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) dd[i] = p.K_diag[i] - sigma * p.M_diag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) dl[i] = du[i] = p.K_off[i] - sigma * p.M_off[i];
    detail::TriLU lu;
    lu.factor(dl, dd, du);

    std::vector<double> v(n, 1.0), w(n), kv(n), mv(n);
    auto m_normalize = [&](std::vector<double>& x) {
        detail::mass_matvec(p, x, w);
        const double nm = std::sqrt(std::abs(detail::dot(w, x)));
        for (double& c : x) c /= nm;
    };
    m_normalize(v);

    EigenResult best;
    best.lambda_min = 0.5 * (lo + hi);
    best.residual = std::numeric_limits<double>::infinity();
    const int max_sweeps = 50;
    int since_improved = 0;
    int it = 0;
    for (; it < max_sweeps; ++it) {
        detail::mass_matvec(p, v, w);
        lu.solve(w);
        v = w;
        m_normalize(v);
        detail::stiff_matvec(p, v, kv);
        detail::mass_matvec(p, v, mv);
        const double lam = detail::dot(kv, v) / detail::dot(mv, v);
        double rn2 = 0.0, kn2 = 0.0, sc2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = kv[i] - lam * mv[i];
            rn2 += r * r;
            kn2 += kv[i] * kv[i];
            double s = std::abs(p.K_diag[i] * v[i]);
            if (i > 0) s += std::abs(p.K_off[i - 1] * v[i - 1]);
            if (i + 1 < n) s += std::abs(p.K_off[i] * v[i + 1]);
            sc2 += s * s;
        }
        const double res = std::sqrt(rn2 / kn2);
        const double floor_est =
            8.0 * std::numeric_limits<double>::epsilon() * std::sqrt(sc2 / kn2);
        if (res < best.residual) {
            best.lambda_min = lam;
            best.vector = v;
            best.residual = res;
            best.residual_floor = floor_est;
            since_improved = 0;
        } else if (++since_improved >= 3) {
            break;
        }
        if (res <= std::max(tol, floor_est))
            break;
    }
    best.iterations = it + 1;
    if (best.vector.empty())
        throw ConvergenceError("smallest_eigenpair: inverse iteration produced no vector", lo, hi);
    // Keep the certified bracket authoritative if the quotient drifted out.
    if (best.lambda_min < lo || best.lambda_min > hi * (1.0 + 1e-12))
        best.lambda_min = 0.5 * (lo + hi);
    // Deterministic sign: first nonzero component positive.
    for (double c : best.vector) {
        if (c != 0.0) {
            if (c < 0.0)
                for (double& y : best.vector) y = -y;
            break;
        }
    }
    return best;
}

} // namespace hardy

#endif
