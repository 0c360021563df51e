#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

namespace vhj {

using cplx = std::complex<double>;

/** Periodic grid on the torus [-1/2, 1/2)^d with n points per dimension.
 *  Coordinates are x_j = -1/2 + j/n, so spacing * n == 1 exactly. */
struct Grid {
    int dim = 1;
    int n = 4;

    double spacing() const { return 1.0 / n; }

    std::size_t size() const {
        std::size_t s = 1;
        for (int k = 0; k < dim; ++k) s *= static_cast<std::size_t>(n);
        return s;
    }

    // row-major multi-index <-> flat index
    std::size_t flat(const std::array<int, 3>& mi) const {
        std::size_t idx = 0;
        for (int k = 0; k < dim; ++k) {
            int j = mi[k] % n;
            if (j < 0) j += n;
            idx = idx * n + static_cast<std::size_t>(j);
        }
        return idx;
    }

    std::array<int, 3> unflat(std::size_t idx) const {
        std::array<int, 3> mi{0, 0, 0};
        for (int k = dim - 1; k >= 0; --k) {
            mi[k] = static_cast<int>(idx % n);
            idx /= n;
        }
        return mi;
    }

    double coord(int j) const { return -0.5 + static_cast<double>(j) / n; }

    std::array<double, 3> point(std::size_t idx) const {
        auto mi = unflat(idx);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k) x[k] = coord(mi[k]);
        return x;
    }

    /** Signed Fourier mode of one index component, in {-n/2, ..., n/2-1}. */
    int mode(int j) const { return j <= n / 2 - 1 ? j : j - n; }

    /** Signed offset coordinate of index component j, in [-1/2, 1/2). */
    double offset(int j) const { return mode(j) * spacing(); }

    bool operator==(const Grid& o) const { return dim == o.dim && n == o.n; }
};

inline Grid make_grid(int d, int n) {
    if (d < 1 || d > 3) throw std::invalid_argument("make_grid: dimension must be 1, 2 or 3");
    if (n < 4) throw std::invalid_argument("make_grid: need at least 4 points per dimension");
    if (n % 2 != 0) throw std::invalid_argument("make_grid: point count must be even (symmetric Fourier modes)");
    return Grid{d, n};
}

/** Scalar field sampled on a Grid, row-major multi-index order. */
template <class T>
struct FieldT {
    Grid grid;
    std::vector<T> values;

    FieldT() = default;
    explicit FieldT(const Grid& g, T fill = T{}) : grid(g), values(g.size(), fill) {}
    FieldT(const Grid& g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw std::invalid_argument("Field: value count does not match grid");
    }

    std::size_t size() const { return values.size(); }
    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
};

using Field = FieldT<double>;
using ComplexField = FieldT<cplx>;

inline Field sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& f) {
    Field out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(g.point(i));
    return out;
}

inline ComplexField to_complex(const Field& f) {
    ComplexField out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    return out;
}

inline Field real_part(const ComplexField& f) {
    Field out(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real();
    return out;
}

/** Unweighted root-sum-square norm (the statevector convention). */
template <class T>
double norm_l2(const FieldT<T>& f) {
    double s = 0.0;
    for (const auto& v : f.values) s += std::norm(cplx(v));
    return std::sqrt(s);
}

/** Volume-weighted norm, norm_l2 * dx^{d/2}; comparable to continuum L2 integrals. */
template <class T>
double norm_l2_weighted(const FieldT<T>& f) {
    return norm_l2(f) * std::pow(f.grid.spacing(), 0.5 * f.grid.dim);
}

template <class T>
double max_abs(const FieldT<T>& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(cplx(v)));
    return m;
}

template <class T>
double max_abs_diff(const FieldT<T>& a, const FieldT<T>& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("max_abs_diff: grid mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(cplx(a[i]) - cplx(b[i])));
    return m;
}

template <class T>
double rel_l2_diff(const FieldT<T>& a, const FieldT<T>& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("rel_l2_diff: grid mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(cplx(a[i]) - cplx(b[i]));
        den += std::norm(cplx(b[i]));
    }
    return std::sqrt(num) / std::sqrt(den);
}

/** Periodic shift by one index step along axis k: out(x) = f(x + step*dx*e_k). */
template <class T>
FieldT<T> shift(const FieldT<T>& f, int axis, int step) {
    const Grid& g = f.grid;
    if (axis < 0 || axis >= g.dim) throw std::invalid_argument("shift: axis out of range");
    FieldT<T> out(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto mi = g.unflat(i);
        mi[axis] += step;
        out[i] = f[g.flat(mi)];
    }
    return out;
}

/** Central difference along axis k with periodic wrap: (f(x+dx e_k) - f(x-dx e_k)) / (2 dx). */
template <class T>
FieldT<T> apply_derivative(const FieldT<T>& f, int axis) {
    const Grid& g = f.grid;
    if (axis < 0 || axis >= g.dim) throw std::invalid_argument("apply_derivative: axis out of range");
    FieldT<T> out(g);
    const double inv2dx = 0.5 / g.spacing();
    FieldT<T> fp = shift(f, axis, +1);
    FieldT<T> fm = shift(f, axis, -1);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = (fp[i] - fm[i]) * inv2dx;
    return out;
}

/** Standard 3-point second difference along one axis. */
template <class T>
FieldT<T> second_difference(const FieldT<T>& f, int axis) {
    const Grid& g = f.grid;
    FieldT<T> out(g);
    const double invdx2 = 1.0 / (g.spacing() * g.spacing());
    FieldT<T> fp = shift(f, axis, +1);
    FieldT<T> fm = shift(f, axis, -1);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = (fp[i] - 2.0 * f[i] + fm[i]) * invdx2;
    return out;
}

/** Discrete Laplacian: sum of 3-point second differences over all axes. */
template <class T>
FieldT<T> laplacian(const FieldT<T>& f) {
    FieldT<T> out(f.grid, T{});
    for (int k = 0; k < f.grid.dim; ++k) {
        FieldT<T> d2 = second_difference(f, k);
        for (std::size_t i = 0; i < f.size(); ++i) out[i] += d2[i];
    }
    return out;
}

// ---- FFT machinery (FFTW, complex-to-complex, unnormalised forward) ----

inline void fft_inplace(const Grid& g, std::vector<cplx>& v, int sign) {
    int dims[3] = {g.n, g.n, g.n};
    fftw_plan plan = fftw_plan_dft(g.dim, dims,
                                   reinterpret_cast<fftw_complex*>(v.data()),
                                   reinterpret_cast<fftw_complex*>(v.data()),
                                   sign, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
}

inline ComplexField fft(const ComplexField& f) {
    ComplexField out = f;
    fft_inplace(f.grid, out.values, FFTW_FORWARD);
    return out;
}

inline ComplexField ifft(const ComplexField& f) {
    ComplexField out = f;
    fft_inplace(f.grid, out.values, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(f.size());
    for (auto& v : out.values) v *= inv;
    return out;
}

/** Signed Fourier mode vector of a flat spectral index. */
inline std::array<int, 3> mode_vector(const Grid& g, std::size_t idx) {
    auto mi = g.unflat(idx);
    std::array<int, 3> m{0, 0, 0};
    for (int k = 0; k < g.dim; ++k) m[k] = g.mode(mi[k]);
    return m;
}

/** Apply a per-mode multiplier in Fourier space: ifft(m(k) .* fft(f)). */
inline ComplexField fft_multiplier(const ComplexField& f,
                                   const std::function<cplx(const std::array<int, 3>&)>& mult) {
    ComplexField hat = fft(f);
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= mult(mode_vector(f.grid, i));
    return ifft(hat);
}

inline Field fft_multiplier(const Field& f,
                            const std::function<cplx(const std::array<int, 3>&)>& mult) {
    return real_part(fft_multiplier(to_complex(f), mult));
}

/** Circular correlation with a stencil of offset weights: out(x_i) = sum_m w_m f(x_{i+m}).
 *  The mean is split off and carried through directly, so constant fields map to
 *  constant * sum(w) without FFT rounding (unit-sum kernels fix constants exactly). */
template <class T>
FieldT<T> correlate(const FieldT<T>& f, const std::vector<double>& weights) {
    const Grid& g = f.grid;
    if (weights.size() != g.size()) throw std::invalid_argument("correlate: weight count mismatch");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    T mean{};
    for (const auto& v : f.values) mean += v;
    mean = mean * (1.0 / static_cast<double>(f.size()));

    std::vector<cplx> what(weights.begin(), weights.end());
    fft_inplace(g, what, FFTW_FORWARD);
    std::vector<cplx> fh(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fh[i] = cplx(f[i]) - cplx(mean);
    fft_inplace(g, fh, FFTW_FORWARD);
    for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= std::conj(what[i]);
    fft_inplace(g, fh, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(f.size());
    FieldT<T> out(g);
    if constexpr (std::is_same_v<T, double>) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean * wsum + fh[i].real() * inv;
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean * wsum + fh[i] * inv;
    }
    return out;
}

/** Evaluate a field at an arbitrary point by trigonometric interpolation.
 *  Exact for band-limited data; O(n^d) per point. */
inline double interp_trig(const Field& f, const std::array<double, 3>& x) {
    ComplexField hat = fft(to_complex(f));
    const double invN = 1.0 / static_cast<double>(f.size());
    cplx acc = 0.0;
    for (std::size_t i = 0; i < hat.size(); ++i) {
        auto m = mode_vector(f.grid, i);
        double phase = 0.0;
        for (int k = 0; k < f.grid.dim; ++k) phase += m[k] * (x[k] + 0.5);
        acc += hat[i] * std::polar(1.0, 2.0 * M_PI * phase);
    }
    return acc.real() * invN;
}

// ---- dense operator matrices on the grid (used by the statevector emulation) ----

/** Apply a field-to-field map to every unit vector; returns the dense matrix. */
template <class Fn>
std::vector<std::vector<double>> operator_matrix(const Grid& g, Fn&& apply) {
    const std::size_t N = g.size();
    std::vector<std::vector<double>> M(N, std::vector<double>(N, 0.0));
    Field e(g, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        e[j] = 1.0;
        Field col = apply(e);
        for (std::size_t i = 0; i < N; ++i) M[i][j] = col[i];
        e[j] = 0.0;
    }
    return M;
}

/** Per-dimension shift, derivative, position and Laplacian matrices.
 *  The momentum P_k = -i * (central difference) is Hermitian; its real
 *  antisymmetric derivative representation is what is stored here. */
struct DiscreteOperators {
    Grid grid;
    std::vector<std::vector<std::vector<double>>> shift_plus;   // per axis
    std::vector<std::vector<std::vector<double>>> shift_minus;  // per axis
    std::vector<std::vector<std::vector<double>>> derivative;   // per axis, antisymmetric
    std::vector<std::vector<double>> position_diag;             // per axis, diagonal entries
    std::vector<std::vector<double>> laplacian_matrix;

    static DiscreteOperators build(const Grid& g) {
        DiscreteOperators ops;
        ops.grid = g;
        for (int k = 0; k < g.dim; ++k) {
            ops.shift_plus.push_back(operator_matrix(g, [&](const Field& f) { return shift(f, k, +1); }));
            ops.shift_minus.push_back(operator_matrix(g, [&](const Field& f) { return shift(f, k, -1); }));
            ops.derivative.push_back(operator_matrix(g, [&](const Field& f) { return apply_derivative(f, k); }));
            std::vector<double> diag(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) diag[i] = g.point(i)[k];
            ops.position_diag.push_back(std::move(diag));
        }
        ops.laplacian_matrix = operator_matrix(g, [&](const Field& f) { return laplacian(f); });
        return ops;
    }
};

/** Precomputed spectral form for repeated trig interpolation of one field. */
struct TrigInterpolant {
    Grid grid;
    std::vector<cplx> hat;

    explicit TrigInterpolant(const Field& f) : grid(f.grid) {
        ComplexField h = fft(to_complex(f));
        hat = std::move(h.values);
    }

    double operator()(const std::array<double, 3>& x) const {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < hat.size(); ++i) {
            auto m = mode_vector(grid, i);
            double phase = 0.0;
            for (int k = 0; k < grid.dim; ++k) phase += m[k] * (x[k] + 0.5);
            acc += hat[i] * std::polar(1.0, 2.0 * M_PI * phase);
        }
        return acc.real() / static_cast<double>(grid.size());
    }
};

}  // namespace vhj
