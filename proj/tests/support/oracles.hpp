#pragma once

// Independent reference computations for tests: adaptive Gauss-Kronrod
// quadrature and a few closed forms that do not go through the library.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace oracle {

using Fn = std::function<double(double)>;

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double value;
    double error;
};

inline Panel gk15(const Fn& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kWgk[7];
    double g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        k += kWgk[j] * s;
        if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    return {k * h, std::fabs((k - g) * h)};
}

inline double adapt(const Fn& f, double a, double b, Panel whole, double tol, int depth) {
    if (whole.error <= tol || whole.error <= 1e-14 * std::fabs(whole.value) || depth == 0) {
        if (depth == 0 && whole.error > 100 * tol) throw std::runtime_error("oracle::integrate: no convergence");
        return whole.value;
    }
    const double m = 0.5 * (a + b);
    const Panel l = gk15(f, a, m);
    const Panel r = gk15(f, m, b);
    return adapt(f, a, m, l, 0.5 * tol, depth - 1) + adapt(f, m, b, r, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Integral of f over [a, b] to absolute tolerance tol.
inline double integrate(const Fn& f, double a, double b, double tol = 1e-13) {
    if (a == b) return 0.0;
    return detail::adapt(f, a, b, detail::gk15(f, a, b), tol, 50);
}

/// Integral over [a, inf) with x = a + s/(1-s).
inline double integrate_to_inf(const Fn& f, double a, double tol = 1e-13) {
    return integrate(
        [&](double s) {
            if (s >= 1.0) return 0.0;
            const double d = 1.0 - s;
            return f(a + s / d) / (d * d);
        },
        0.0, 1.0, tol);
}

/// Integral over (-inf, b].
inline double integrate_from_neg_inf(const Fn& f, double b, double tol = 1e-13) {
    return integrate_to_inf([&](double y) { return f(-y); }, -b, tol);
}

/// Integral over [a, inf), a > 0, of f decaying like y^(-alpha), alpha > 1.
/// y = a v^(-p) turns the tail into a smooth polynomial-order vanishing at v = 0.
inline double integrate_power_tail(const Fn& f, double a, double alpha, double tol = 1e-13) {
    const double p = 8.0 / (alpha - 1.0);
    return integrate(
        [&](double v) {
            if (v <= 0.0) return 0.0;
            const double y = a * std::pow(v, -p);
            return f(y) * p * y / v;
        },
        0.0, 1.0, tol);
}

/// Lower incomplete Beta integral normalized by a quadrature of the complete
/// integral. Each half uses t = u^4 from its endpoint, so shapes that are
/// multiples of 1/4 leave a polynomial endpoint factor.
inline double inc_beta(double m, double n, double z) {
    const auto from_zero = [](double a, double b, double upper) {
        // int_0^upper t^(a-1) (1-t)^(b-1) dt
        return integrate(
            [&](double u) {
                if (u <= 0.0) return a == 0.25 ? 4.0 : 0.0;
                const double u4 = u * u * u * u;
                return 4.0 * std::pow(u, 4.0 * a - 1.0) * std::pow(1.0 - u4, b - 1.0);
            },
            0.0, std::pow(upper, 0.25), 1e-15);
    };
    const auto head = [&](double upper) { return from_zero(m, n, upper); };
    const auto tail = [&](double lower) { return from_zero(n, m, 1.0 - lower); };
    const double total = head(0.5) + tail(0.5);
    const double part = z <= 0.5 ? head(z) : total - tail(z);
    return part / total;
}

/// Standard normal CDF by quadrature of the density.
inline double normal_cdf(double z) {
    const auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
    if (z <= 0.0) return integrate_from_neg_inf(phi, z, 1e-16);
    return 1.0 - integrate_to_inf(phi, z, 1e-16);
}

/// I_z(3/2, 1/2) through sin^2(theta) = z: (theta - sin(2 theta)/2) / (pi/2).
inline double ibeta_three_halves_half(double z) {
    const double th = std::asin(std::sqrt(z));
    return (th - 0.5 * std::sin(2.0 * th)) / (0.5 * std::numbers::pi);
}

}  // namespace oracle
