#ifndef HARDY_CALIBRATION_HPP
#define HARDY_CALIBRATION_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include "hardy/errors.hpp"

namespace hardy {

inline constexpr double kPoleGuard = 1e-10;
inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

// Guard a tangent argument against the poles at pi/2 + k pi.
inline void check_tan_argument(double arg, const char* where) {
    const double m = std::remainder(arg - kPi / 2.0, kPi);
    if (std::abs(m) < kPoleGuard)
        throw PoleError(std::string(where) + ": tangent argument within 1e-10 of a pole");
}

// Principal-branch guard: argument must lie strictly inside (-pi/2, pi/2).
inline void check_principal_branch(double arg, const char* where) {
    if (!(std::abs(arg) < kPi / 2.0 - kPoleGuard))
        throw PoleError(std::string(where) + ": tangent argument outside (-pi/2, pi/2)");
}

} // namespace detail

// ---------------------------------------------------------------------------
// One-dimensional calibration (weight x^{-2}, v(0) = 0)
// ---------------------------------------------------------------------------

/// Solution of the 1D calibration equation: the relaxed minimum over
/// functions linear on (0,h) equals lambda = 1/4 + delta^2.
struct Calibration1D {
    double h = 0.0;
    double delta = 0.0;
    double lambda = 0.0;   // 1/4 + delta^2
    double residual = 0.0; // defining equation evaluated at delta
};

/// 1/4 + delta tan(atan(1/(2 delta)) + delta log h) - delta^2.
/// Vanishes exactly at delta = delta_h.
inline double residual_1d(double delta, double h) {
    if (!(delta > 0.0))
        throw std::invalid_argument("residual_1d: delta must be positive");
    if (!(h > 0.0 && h < 1.0))
        throw std::invalid_argument("residual_1d: h must lie in (0,1)");
    const double arg = std::atan(1.0 / (2.0 * delta)) + delta * std::log(h);
    detail::check_principal_branch(arg, "residual_1d");
    return 0.25 + delta * std::tan(arg) - delta * delta;
}

namespace detail {

inline double residual_1d_derivative(double delta, double h) {
    const double arg = std::atan(1.0 / (2.0 * delta)) + delta * std::log(h);
    const double t = std::tan(arg);
    const double darg = std::log(h) - 2.0 / (1.0 + 4.0 * delta * delta);
    return t + delta * (1.0 + t * t) * darg - 2.0 * delta;
}

} // namespace detail

/// Root of residual_1d in (0, pi/|log h|): 4096-point bracket scan for the
/// first sign change, bisection to width 1e-14, then Newton polish.
inline Calibration1D solve_delta_1d(double h, double tol = 1e-13) {
    if (!(h > 0.0 && h < 1.0))
        throw std::invalid_argument("solve_delta_1d: h must lie in (0,1)");
    if (!(tol > 0.0))
        throw std::invalid_argument("solve_delta_1d: tol must be positive");
    const double L = -std::log(h);
    const double lo0 = 1e-6, hi0 = kPi / L;
    const int scan_points = 4096;

    double a = lo0, fa;
    try {
        fa = residual_1d(a, h);
    } catch (const PoleError&) {
        throw InfeasibleError("solve_delta_1d: h too large for calibration");
    }
    double b = a, fb = fa;
    bool bracketed = false;
    for (int i = 1; i <= scan_points; ++i) {
        b = lo0 + (hi0 - lo0) * static_cast<double>(i) / scan_points;
        try {
            fb = residual_1d(b, h);
        } catch (const PoleError&) {
            break;  // past the pole; any root lies before it
        }
        if (fa > 0.0 && fb <= 0.0) {
            bracketed = true;
            break;
        }
        a = b;
        fa = fb;
    }
    if (!bracketed)
        throw InfeasibleError("solve_delta_1d: h too large for calibration (no sign change)");

    while (b - a > 1e-14) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (residual_1d(mid, h) > 0.0)
            a = mid;
        else
            b = mid;
    }
    double delta = 0.5 * (a + b);
    double res = residual_1d(delta, h);
    for (int k = 0; k < 3 && std::abs(res) > 0.25 * tol; ++k) {
        const double dp = detail::residual_1d_derivative(delta, h);
        const double cand = delta - res / dp;
        if (!(cand > 0.0) || !(cand < hi0)) break;
        const double rc = residual_1d(cand, h);
        if (std::abs(rc) >= std::abs(res)) break;
        delta = cand;
        res = rc;
    }
    return {h, delta, 0.25 + delta * delta, res};
}

/// Calibration multiplier phi(x) = delta tan(atan(1/(2 delta)) + delta log x) - 1/2,
/// the solution of x phi' - phi - lambda = phi^2 with phi(1) = 0.
inline double phi_1d(double x, double delta) {
    if (!(x > 0.0 && x <= 1.0))
        throw std::invalid_argument("phi_1d: x must lie in (0,1]");
    if (!(delta > 0.0))
        throw std::invalid_argument("phi_1d: delta must be positive");
    const double arg = std::atan(1.0 / (2.0 * delta)) + delta * std::log(x);
    detail::check_principal_branch(arg, "phi_1d");
    return delta * std::tan(arg) - 0.5;
}

/// Exact minimizer over the relaxed space: linear on [0,h], then
/// sqrt(x) cos(atan(1/(2 delta)) + delta log x); normalized so u(1) = 1.
inline double near_u_1d(double x, const Calibration1D& cal) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("near_u_1d: x must lie in [0,1]");
    const double d = cal.delta;
    const double a0 = std::atan(1.0 / (2.0 * d));
    const double A = std::sqrt(1.0 + 4.0 * d * d) / (2.0 * d);  // 1/cos(a0)
    if (x <= cal.h)
        return A * (x / std::sqrt(cal.h)) * std::cos(a0 + d * std::log(cal.h));
    return A * std::sqrt(x) * std::cos(a0 + d * std::log(x));
}

inline double near_u_1d_deriv(double x, const Calibration1D& cal) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("near_u_1d_deriv: x must lie in [0,1]");
    const double d = cal.delta;
    const double a0 = std::atan(1.0 / (2.0 * d));
    const double A = std::sqrt(1.0 + 4.0 * d * d) / (2.0 * d);
    if (x <= cal.h)
        return A * std::cos(a0 + d * std::log(cal.h)) / std::sqrt(cal.h);
    const double t = a0 + d * std::log(x);
    return A * (0.5 * std::cos(t) - d * std::sin(t)) / std::sqrt(x);
}

// ---------------------------------------------------------------------------
// Radial calibration (weights r^{n-1}, r^{n-3}, v(1) = 0, n >= 3)
// ---------------------------------------------------------------------------

/// f_m(h) = (1/m) sum_{k=0}^{m-1} (1-h)^{2-n+k}.
inline double f_m(double h, int m, int n) {
    if (!(h >= 0.0 && h < 1.0))
        throw std::invalid_argument("f_m: h must lie in [0,1)");
    if (m < 1)
        throw std::invalid_argument("f_m: m must be a positive integer");
    const double q = 1.0 - h;
    double term = std::pow(q, 2 - n);
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        s += term;
        term *= q;
    }
    return s / static_cast<double>(m);
}

/// g_n(h) = f_n(h) - 2 f_{n-1}(h) + f_{n-2}(h), all with the same dimension n.
inline double g_n(double h, int n) {
    if (n < 3)
        throw std::invalid_argument("g_n: n must be at least 3");
    return f_m(h, n, n) - 2.0 * f_m(h, n - 1, n) + f_m(h, n - 2, n);
}

/// Solved radial calibration parameters. lambda = (n-2)^2/4 + delta^2.
///
/// gamma parameterizes phi(r) = (n-2)/2 + delta tan(gamma + delta log r);
/// the argument reaches within h*delta of the pole at r = 1-h, so the solver
/// also records pole_gap = pi/2 - (gamma + delta log(1-h)), through which
/// phi and the eigenfunction surrogate are evaluated accurately.
struct CalibrationRadial {
    int n = 3;
    double h = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;
    std::pair<double, double> residuals{0.0, 0.0};
    double pole_gap = 0.0;  // pi/2 - (gamma + delta log(1-h)), positive
};

/// The two defining equations of the radial calibration, evaluated as stated
/// (first: determinant condition at r = h; second: flux condition at r = 1-h).
/// Note the second equation scales like f_n(h)/h, so its best representable
/// magnitude grows as h decreases.
inline std::pair<double, double> residual_radial(double delta, double gamma, int n, double h) {
    if (n < 3)
        throw std::invalid_argument("residual_radial: n must be at least 3");
    if (!(h > 0.0 && h < 0.5))
        throw std::invalid_argument("residual_radial: h must lie in (0,1/2)");
    if (!(delta > 0.0))
        throw std::invalid_argument("residual_radial: delta must be positive");
    const double arg1 = gamma + delta * std::log(h);
    const double arg2 = gamma + delta * std::log1p(-h);
    detail::check_tan_argument(arg1, "residual_radial");
    detail::check_tan_argument(arg2, "residual_radial");
    const double nn = static_cast<double>(n);
    const double lam = (nn - 2.0) * (nn - 2.0) / 4.0 + delta * delta;
    const double r1 = ((nn * nn - 2.0 * nn) / 2.0 - 2.0 * delta * delta) *
                          (nn * nn / 4.0 - delta * delta + nn * delta * std::tan(arg1)) -
                      (nn - 2.0) / (nn - 1.0) * std::pow(nn * nn / 4.0 + delta * delta, 2);
    const double r2 = (nn - 2.0) / 2.0 + delta * std::tan(arg2) -
                      (f_m(h, n, n) - g_n(h, n) * lam) / h;
    return {r1, r2};
}

namespace detail {

// The radial system in (delta, beta) coordinates, beta = pi/2 - (gamma +
// delta log(1-h)). Both tangents become cotangents evaluated away from their
// worst conditioning, and all arithmetic runs in long double: the second
// equation's 1/h scale otherwise caps the attainable residual near
// eps * f_n(h)/h.
struct RadialSystem {
    int n;
    long double h;
    long double ell;  // log((1-h)/h)
    long double fn, gn, sn;

    RadialSystem(int n_, double h_) : n(n_), h(h_) {
        ell = std::log1p(-h) - std::log(h);
        const long double q = 1.0L - h;
        long double term = std::pow(q, static_cast<long double>(2 - n));
        long double s = 0.0L, sm1 = 0.0L, sm2 = 0.0L;
        for (int k = 0; k < n; ++k) {
            s += term;
            if (k < n - 1) sm1 += term;
            if (k < n - 2) sm2 += term;
            term *= q;
        }
        fn = s / n;
        gn = fn - 2.0L * (sm1 / (n - 1)) + sm2 / (n - 2);
        sn = static_cast<long double>(n - 2) * (n - 2) / 4.0L;
    }

    // Residuals (r1, h*r2): the second is scaled by h so both components sit
    // on an O(1) scale for the Newton iteration.
    std::array<long double, 2> value(long double d, long double b) const {
        const long double nn = n;
        const long double lam = sn + d * d;
        const long double T1 = 1.0L / std::tan(b + d * ell);  // tan(gamma + d log h)
        const long double C2 = 1.0L / std::tan(b);            // tan(gamma + d log(1-h))
        const long double r1 = ((nn * nn - 2.0L * nn) / 2.0L - 2.0L * d * d) *
                                   (nn * nn / 4.0L - d * d + nn * d * T1) -
                               (nn - 2.0L) / (nn - 1.0L) * (nn * nn / 4.0L + d * d) *
                                   (nn * nn / 4.0L + d * d);
        const long double r2s = h * (nn - 2.0L) / 2.0L + h * d * C2 - (fn - gn * lam);
        return {r1, r2s};
    }

    std::array<long double, 4> jacobian(long double d, long double b) const {
        const long double nn = n;
        const long double u1 = b + d * ell;
        const long double T1 = 1.0L / std::tan(u1);
        const long double s1 = 1.0L + T1 * T1;
        const long double C2 = 1.0L / std::tan(b);
        const long double s2 = 1.0L + C2 * C2;
        const long double A = (nn * nn - 2.0L * nn) / 2.0L - 2.0L * d * d;
        const long double B = nn * nn / 4.0L - d * d + nn * d * T1;
        const long double dr1_dd = -4.0L * d * B + A * (-2.0L * d + nn * T1 - nn * d * s1 * ell) -
                                   (nn - 2.0L) / (nn - 1.0L) * 4.0L * d * (nn * nn / 4.0L + d * d);
        const long double dr1_db = -A * nn * d * s1;
        const long double dr2_dd = h * C2 + gn * 2.0L * d;
        const long double dr2_db = -h * d * s2;
        return {dr1_dd, dr1_db, dr2_dd, dr2_db};
    }

    bool in_branch(long double d, long double b) const {
        return d > 0.0L && b > 0.0L && b + d * ell < static_cast<long double>(kPi);
    }

    // beta that solves the second equation exactly for a given delta.
    long double beta_of_delta(long double d) const {
        const long double lam = sn + d * d;
        const long double rhs = (fn - gn * lam) / h - static_cast<long double>(n - 2) / 2.0L;
        if (!(rhs > 0.0L)) return -1.0L;
        return std::atan(d / rhs);
    }
};

} // namespace detail

/// Solves the radial calibration system by damped Newton (analytic Jacobian)
/// from the asymptotic initial guess delta_0 = pi/(8(n-1)/(n(n-2)) + h + |log h|),
/// with iterates confined to the branch where phi is smooth on [h, 1-h].
/// Falls back to a bracketed scan of the delta-reduced scalar equation.
inline CalibrationRadial solve_radial(int n, double h, double tol = 1e-13) {
    if (n < 3)
        throw std::invalid_argument("solve_radial: n must be at least 3");
    if (!(h > 0.0 && h < 0.5))
        throw std::invalid_argument("solve_radial: h must lie in (0,1/2)");
    if (!(tol > 0.0))
        throw std::invalid_argument("solve_radial: tol must be positive");

    const detail::RadialSystem sys(n, h);
    const double nn = n;
    const double sig = 8.0 * (nn - 1.0) / (nn * (nn - 2.0));
    const double L = -std::log(h);

    long double d = kPi / (sig + h + L);
    long double b = sys.beta_of_delta(d);
    if (!(b > 0.0L))
        b = static_cast<long double>(h) * d;  // leading-order pole gap
    bool converged = false;
    auto norm = [](const std::array<long double, 2>& r) {
        return std::sqrt(r[0] * r[0] + r[1] * r[1]);
    };
    std::array<long double, 2> r = sys.value(d, b);
    for (int it = 0; it < 80 && !converged; ++it) {
        if (std::abs(static_cast<double>(r[0])) < tol &&
            std::abs(static_cast<double>(r[1])) < tol) {
            converged = true;
            break;
        }
        const auto J = sys.jacobian(d, b);
        const long double det = J[0] * J[3] - J[1] * J[2];
        if (det == 0.0L) break;
        const long double sd = (J[3] * r[0] - J[1] * r[1]) / det;
        const long double sb = (-J[2] * r[0] + J[0] * r[1]) / det;
        long double step = 1.0L;
        bool accepted = false;
        for (int cut = 0; cut < 70; ++cut) {
            const long double dc = d - step * sd;
            const long double bc = b - step * sb;
            if (sys.in_branch(dc, bc)) {
                const auto rc = sys.value(dc, bc);
                if (norm(rc) <= norm(r)) {
                    d = dc;
                    b = bc;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5L;
        }
        if (!accepted) break;
    }

    if (!converged) {
        // Last resort: eliminate beta through the second equation and bisect
        // the first over delta in (0, sqrt(n(n-2))/2).
        const long double dmax = std::sqrt(static_cast<long double>(n) * (n - 2)) / 2.0L;
        const int scan = 8192;
        long double pa = 0.0L, pfa = 0.0L;
        bool have_prev = false, bracketed = false;
        long double ba = 0.0L, bb = 0.0L;
        for (int i = 1; i < scan; ++i) {
            const long double dc = dmax * i / scan;
            const long double bc = sys.beta_of_delta(dc);
            if (!(bc > 0.0L) || !sys.in_branch(dc, bc)) {
                have_prev = false;
                continue;
            }
            const long double f = sys.value(dc, bc)[0];
            if (have_prev && ((pfa > 0.0L) != (f > 0.0L))) {
                ba = pa;
                bb = dc;
                bracketed = true;
                break;
            }
            pa = dc;
            pfa = f;
            have_prev = true;
        }
        if (!bracketed)
            throw ConvergenceError("solve_radial: no root bracket for the reduced equation",
                                   0.0, static_cast<double>(dmax));
        for (int k = 0; k < 160; ++k) {
            const long double mid = 0.5L * (ba + bb);
            const long double bm = sys.beta_of_delta(mid);
            const long double f = sys.value(mid, bm)[0];
            if ((f > 0.0L) == (sys.value(ba, sys.beta_of_delta(ba))[0] > 0.0L))
                ba = mid;
            else
                bb = mid;
        }
        d = 0.5L * (ba + bb);
        b = sys.beta_of_delta(d);
        r = sys.value(d, b);
    }

    CalibrationRadial cal;
    cal.n = n;
    cal.h = h;
    cal.delta = static_cast<double>(d);
    cal.pole_gap = static_cast<double>(b);
    cal.gamma = static_cast<double>(static_cast<long double>(kPi) / 2.0L - b -
                                    d * std::log1p(static_cast<long double>(-h)));
    cal.lambda = (nn - 2.0) * (nn - 2.0) / 4.0 + cal.delta * cal.delta;
    cal.residuals = {static_cast<double>(r[0]), static_cast<double>(r[1] / sys.h)};
    if (nn * (nn - 2.0) - 4.0 * cal.delta * cal.delta < 0.0)
        throw ConvergenceError("solve_radial: solution violates n(n-2) >= 4 delta^2",
                               cal.delta, cal.delta);
    return cal;
}

/// phi(r) = (n-2)/2 + delta tan(gamma + delta log r), evaluated through the
/// recorded pole gap so the value stays accurate arbitrarily close to r = 1-h.
inline double phi_radial(double r, const CalibrationRadial& cal) {
    if (!(r > 0.0 && r <= 1.0))
        throw std::invalid_argument("phi_radial: r must lie in (0,1]");
    // tan(gamma + delta log r) = cot(u), u = pole_gap + delta log((1-h)/r)
    const double u = cal.pole_gap + cal.delta * (std::log1p(-cal.h) - std::log(r));
    const double m = std::remainder(u, kPi);
    if (std::abs(m) < kPoleGuard)
        throw PoleError("phi_radial: tangent argument within 1e-10 of a pole");
    return (cal.n - 2.0) / 2.0 + cal.delta / std::tan(u);
}

struct CalibrationMatrix {
    double m00, m01, m11;
    double det() const { return m00 * m11 - m01 * m01; }
    double max_abs() const {
        return std::max({std::abs(m00), std::abs(m01), std::abs(m11)});
    }
};

/// 2x2 matrix whose positive semidefiniteness certifies the lower bound;
/// rank one exactly at the calibrated solution.
inline CalibrationMatrix matrix_M(int n, double h, const CalibrationRadial& cal) {
    if (n != cal.n)
        throw std::invalid_argument("matrix_M: dimension mismatch with calibration");
    const double nn = n;
    const double lam = cal.lambda;
    const double ph = phi_radial(h, cal);
    return {(nn - 1.0) * (nn - 2.0) - 2.0 * lam,
            (nn - 2.0) * (1.0 - nn - lam),
            (nn - 1.0) * (nn - 2.0) * (1.0 - lam + nn * ph)};
}

namespace detail {

// Psi(r) = r^{-(n-2)/2} cos(gamma + delta log r) via the pole gap:
// cos(gamma + delta log r) = sin(u) with u as in phi_radial.
inline double psi_radial(double r, const CalibrationRadial& cal) {
    const double u = cal.pole_gap + cal.delta * (std::log1p(-cal.h) - std::log(r));
    return std::pow(r, -(cal.n - 2.0) / 2.0) * std::sin(u);
}

inline double psi_radial_deriv(double r, const CalibrationRadial& cal) {
    const double u = cal.pole_gap + cal.delta * (std::log1p(-cal.h) - std::log(r));
    return std::pow(r, -cal.n / 2.0) *
           (-(cal.n - 2.0) / 2.0 * std::sin(u) - cal.delta * std::cos(u));
}

// v(0)/v(h) = -(n-2)(1-n-lambda)/((n-1)(n-2)-2 lambda).
inline double corner_ratio(const CalibrationRadial& cal) {
    const double nn = cal.n;
    return (nn - 2.0) * (1.0 - nn - cal.lambda) /
           ((nn - 1.0) * (nn - 2.0) - 2.0 * cal.lambda);
}

} // namespace detail

/// Exact minimizer over the relaxed radial space: linear near both endpoints,
/// Psi in between; normalized so v(0) = 1, with v(1) = 0.
inline double near_v_radial(double r, const CalibrationRadial& cal) {
    if (!(r >= 0.0 && r <= 1.0))
        throw std::invalid_argument("near_v_radial: r must lie in [0,1]");
    const double h = cal.h;
    const double cr = detail::corner_ratio(cal);
    const double A = 1.0 / (-cr * detail::psi_radial(h, cal));  // v(0) = 1
    if (r <= h)
        return A * (r - cr * (h - r)) / h * detail::psi_radial(h, cal);
    if (r >= 1.0 - h)
        return A * (1.0 - r) / h * detail::psi_radial(1.0 - h, cal);
    return A * detail::psi_radial(r, cal);
}

inline double near_v_radial_deriv(double r, const CalibrationRadial& cal) {
    if (!(r >= 0.0 && r <= 1.0))
        throw std::invalid_argument("near_v_radial_deriv: r must lie in [0,1]");
    const double h = cal.h;
    const double cr = detail::corner_ratio(cal);
    const double A = 1.0 / (-cr * detail::psi_radial(h, cal));
    if (r <= h)
        return A * (1.0 + cr) / h * detail::psi_radial(h, cal);
    if (r >= 1.0 - h)
        return -A / h * detail::psi_radial(1.0 - h, cal);
    return A * detail::psi_radial_deriv(r, cal);
}

/// Certified lower bound on the discrete Hardy constant:
/// mu_h = 1/4 + delta_h^2 (n = 1) or mu_h^n = (n-2)^2/4 + delta_h^2 (n >= 3).
inline double mu_lower_bound(int n, double h) {
    if (n == 1)
        return solve_delta_1d(h).lambda;
    if (n >= 3)
        return solve_radial(n, h).lambda;
    throw std::invalid_argument("mu_lower_bound: n must be 1 or >= 3");
}

} // namespace hardy

#endif
