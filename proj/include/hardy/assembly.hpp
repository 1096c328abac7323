#ifndef HARDY_ASSEMBLY_HPP
#define HARDY_ASSEMBLY_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardy/errors.hpp"
#include "hardy/mesh.hpp"

namespace hardy {

/// Which endpoint carries the homogeneous Dirichlet condition.
enum class BoundaryCondition {
    LeftDirichlet,   // v(0) = 0, weight x^{-2} (dimension tag n = 1)
    RightDirichlet,  // v(1) = 0, radial weights r^{n-1}, r^{n-3} (n >= 3)
};

/// Symmetric 2x2 element block.
struct SymMat2 {
    double a00, a01, a11;
};

/// Element block of the weighted mass form. For the x^{-2} weight on an
/// element touching x = 0 only the (increasing, increasing) entry is finite;
/// the singular entries are left empty and must never be summed into a
/// global matrix (the v(0)=0 condition removes them).
struct WeightedMassBlock {
    std::optional<double> dec_dec;  // phi_a * phi_a (hat decreasing on [a,b])
    std::optional<double> cross;    // phi_a * phi_b
    std::optional<double> inc_inc;  // phi_b * phi_b

    double entry(int i, int j) const {
        const std::optional<double>& e = (i == j) ? (i == 0 ? dec_dec : inc_inc) : cross;
        if (!e)
            throw std::domain_error("WeightedMassBlock: entry is singular (unused-singular)");
        return *e;
    }
    bool singular(int i, int j) const {
        return !((i == j) ? (i == 0 ? dec_dec : inc_inc) : cross).has_value();
    }
};

namespace detail {

inline void check_element_bounds(double a, double b) {
    if (!(0.0 <= a) || !(a < b) || !(b <= 1.0))
        throw std::invalid_argument("element integral: need 0 <= a < b <= 1");
}

inline void check_dimension(int n) {
    if (n == 2)
        throw std::invalid_argument("dimension n = 2 is not supported (logarithmic Hardy weight)");
    if (n < 1 || n > 64)
        throw std::invalid_argument("dimension n must be 1 or 3..64");
}

inline double binom(int n, int k) {
    double r = 1.0;
    for (int j = 1; j <= k; ++j)
        r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
    return r;
}

// int_a^b x^{-2} phi_i phi_j dx on [a,b] with a > 0, d = b - a.
// Antiderivatives give
//   inc*inc:   (1 + a/b)/d - (2a/d^2) log(b/a)
//   dec*dec:   (b + a)/(a d) - (2b/d^2) log(b/a)
//   dec*inc:   ((a + b)/d^2) log(b/a) - 2/d
// These cancel catastrophically when d << a, so for t = d/a <= 1/2 we use the
// alternating series (in t) of the same integrals:
//   inc*inc:  (1/d) sum_{k>=2} (-t)^k (k-1)/(k+1)
//   dec*dec:  (1/d) sum_{k>=2} (-t)^k 2/(k(k+1))
//   dec*inc:  (1/d) sum_{k>=2} (-t)^k (k-1)/(k(k+1))
struct SingularMassEntries {
    double dec, cross, inc;
};

inline SingularMassEntries singular_mass_positive(double a, double b) {
    const double d = b - a;
    const double t = d / a;
    if (t <= 0.5) {
        double inc = 0.0, dec = 0.0, cro = 0.0;
        double tk = t * t;  // t^k starting at k = 2
        double sign = 1.0;
        for (int k = 2; k <= 96; ++k) {
            const double kk = static_cast<double>(k);
            inc += sign * tk * (kk - 1.0) / (kk + 1.0);
            dec += sign * tk * 2.0 / (kk * (kk + 1.0));
            cro += sign * tk * (kk - 1.0) / (kk * (kk + 1.0));
            tk *= t;
            sign = -sign;
            if (tk < 1e-19 * inc)
                break;
        }
        return {dec / d, cro / d, inc / d};
    }
    const double lg = std::log1p(t);  // log(b/a)
    const double inc = (1.0 + a / b) / d - 2.0 * a * lg / (d * d);
    const double dec = (b + a) / (a * d) - 2.0 * b * lg / (d * d);
    const double cro = (a + b) * lg / (d * d) - 2.0 / d;
    return {dec, cro, inc};
}

// int_a^b r^{n-3} phi_i phi_j dr for n >= 3: substitute r = a + s d and expand
// (a + s d)^{n-3} binomially; every term is nonnegative, so the sums are exact
// up to roundoff with no cancellation.
inline SingularMassEntries polynomial_mass(double a, double b, int n) {
    const double d = b - a;
    const int p = n - 3;
    double inc = 0.0, dec = 0.0, cro = 0.0;
    for (int j = 0; j <= p; ++j) {
        const double c = binom(p, j) * std::pow(a, p - j) * std::pow(d, j);
        const double J = static_cast<double>(j);
        inc += c / (J + 3.0);
        dec += c * 2.0 / ((J + 1.0) * (J + 2.0) * (J + 3.0));
        cro += c / ((J + 2.0) * (J + 3.0));
    }
    return {d * dec, d * cro, d * inc};
}

// (int_a^b r^{n-1} dr) / (b-a)^2, the scalar in front of [[1,-1],[-1,1]].
inline double stiffness_coefficient(double a, double b, int n) {
    const double d = b - a;
    const int q = n - 1;
    double s = 0.0;
    for (int j = 0; j <= q; ++j)
        s += binom(q, j) * std::pow(a, q - j) * std::pow(d, j) / (static_cast<double>(j) + 1.0);
    return s / d;
}

} // namespace detail

/// Exact integrals int_a^b r^{n-1} phi_i' phi_j' dr for the two local hats.
/// The gradients are constant, so the block is a scalar times [[1,-1],[-1,1]].
inline SymMat2 element_stiffness(double a, double b, int n) {
    detail::check_element_bounds(a, b);
    detail::check_dimension(n);
    const double s = detail::stiffness_coefficient(a, b, n);
    return {s, -s, s};
}

/// Exact integrals int_a^b r^{n-3} phi_i phi_j dr (weight x^{-2} when n = 1).
inline WeightedMassBlock element_weighted_mass(double a, double b, int n) {
    detail::check_element_bounds(a, b);
    detail::check_dimension(n);
    if (n >= 3) {
        const auto e = detail::polynomial_mass(a, b, n);
        return {e.dec, e.cross, e.inc};
    }
    if (a == 0.0) {
        // int_0^b (x/b)^2 x^{-2} dx = 1/b; the other entries diverge.
        return {std::nullopt, std::nullopt, 1.0 / b};
    }
    const auto e = detail::singular_mass_positive(a, b);
    return {e.dec, e.cross, e.inc};
}

/// Assembled symmetric tridiagonal stiffness/mass pair for the discrete Hardy
/// quotient. The Dirichlet node is removed: for n = 1 the DOFs are nodes
/// x_1..x_N, for n >= 3 they are x_0..x_{N-1}.
struct SymTriPencil {
    std::size_t dof_count = 0;
    std::vector<double> K_diag, K_off;
    std::vector<double> M_diag, M_off;
    int dim_n = 1;
    BoundaryCondition bc = BoundaryCondition::LeftDirichlet;

    // Per-element stiffness coefficients, kept so quadratic forms and
    // matrix-vector products can be evaluated in difference form (no
    // cancellation between the large diagonal and off-diagonal entries).
    std::vector<double> elem_stiff;

    // v(node) for a DOF vector, honoring the dropped Dirichlet node:
    // node i maps to DOF i-1 (LeftDirichlet) or DOF i (RightDirichlet).
    double node_value(const std::vector<double>& v, std::size_t node) const {
        if (bc == BoundaryCondition::LeftDirichlet)
            return node == 0 ? 0.0 : v[node - 1];
        return node == dof_count ? 0.0 : v[node];
    }
};

inline SymTriPencil assemble_pencil(const Mesh1D& mesh, int n) {
    detail::check_dimension(n);
    const auto& x = mesh.nodes();
    const std::size_t N = mesh.element_count();
    SymTriPencil p;
    p.dof_count = N;
    p.dim_n = n;
    p.bc = (n == 1) ? BoundaryCondition::LeftDirichlet : BoundaryCondition::RightDirichlet;
    p.K_diag.assign(N, 0.0);
    p.K_off.assign(N - 1, 0.0);
    p.M_diag.assign(N, 0.0);
    p.M_off.assign(N - 1, 0.0);
    p.elem_stiff.resize(N);

    for (std::size_t e = 0; e < N; ++e) {
        const double a = x[e], b = x[e + 1];
        const double ks = detail::stiffness_coefficient(a, b, n);
        p.elem_stiff[e] = ks;
        const WeightedMassBlock mb = element_weighted_mass(a, b, n);
        // Global DOF of the element's left node; SIZE_MAX marks a dropped node.
        std::size_t left;
        if (n == 1)
            left = (e == 0) ? static_cast<std::size_t>(-1) : e - 1;
        else
            left = e;
        const std::size_t right = (n == 1) ? e : (e + 1 < N ? e + 1 : static_cast<std::size_t>(-1));
        const bool has_left = left != static_cast<std::size_t>(-1);
        const bool has_right = right != static_cast<std::size_t>(-1);
        if (has_left) {
            p.K_diag[left] += ks;
            p.M_diag[left] += mb.entry(0, 0);
        }
        if (has_right) {
            p.K_diag[right] += ks;
            p.M_diag[right] += mb.entry(1, 1);
        }
        if (has_left && has_right) {
            p.K_off[left] += -ks;
            p.M_off[left] += mb.entry(0, 1);
        }
    }
    for (double v : p.K_diag)
        if (!std::isfinite(v)) throw std::runtime_error("assemble_pencil: non-finite stiffness entry");
    for (double v : p.M_diag)
        if (!std::isfinite(v)) throw std::runtime_error("assemble_pencil: non-finite mass entry");
    return p;
}

inline SymTriPencil assemble_pencil(std::size_t N, int n) {
    return assemble_pencil(uniform_mesh(N), n);
}

} // namespace hardy

#endif
