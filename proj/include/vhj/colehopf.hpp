#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace vhj {

/** Configuration of the log transform u = e^{-S/(2 nu)} / N0. */
struct TransformConfig {
    double nu = 0.1;
    bool use_normalisation = false;  // N0 = 1 by default
    double floor = 1e-280;           // |u| below this is clamped before logs

    TransformConfig() = default;
    explicit TransformConfig(double nu_, bool norm = false, double floor_ = 1e-280)
        : nu(nu_), use_normalisation(norm), floor(floor_) {
        if (nu <= 0.0) throw std::invalid_argument("TransformConfig: nu must be positive");
        if (floor <= 0.0 || floor > 1e-100)
            throw std::invalid_argument("TransformConfig: floor must lie in (0, 1e-100]");
    }
};

/** u = e^{-S/(2 nu)} / N0 with N0^2 = sum_j e^{-S_j/nu} (unweighted) when enabled. */
inline Field colehopf_forward(const Field& S, const TransformConfig& cfg) {
    Field u(S.grid);
    for (std::size_t i = 0; i < S.size(); ++i) {
        double e = -S[i] / (2.0 * cfg.nu);
        if (e > 700.0)
            throw std::overflow_error("colehopf_forward: e^{-S/(2 nu)} overflows at index " +
                                      std::to_string(i));
        u[i] = std::exp(e);
    }
    if (cfg.use_normalisation) {
        double n0sq = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) n0sq += std::exp(-S[i] / cfg.nu);
        const double n0 = std::sqrt(n0sq);
        for (auto& v : u.values) v /= n0;
    }
    return u;
}

/** Result of the inverse transform; points clamped at the floor are flagged. */
struct InverseResult {
    Field S;
    std::vector<std::size_t> clamped;
};

namespace detail {

template <class T>
InverseResult colehopf_inverse_impl(const FieldT<T>& u, const TransformConfig& cfg) {
    InverseResult out{Field(u.grid), {}};
    for (std::size_t i = 0; i < u.size(); ++i) {
        double mag = std::abs(cplx(u[i]));
        if (mag < cfg.floor) {
            mag = cfg.floor;
            out.clamped.push_back(i);
        }
        out.S[i] = -2.0 * cfg.nu * std::log(mag);
    }
    if (out.clamped.size() == u.size())
        throw std::runtime_error("colehopf_inverse: every point fell below the floor");
    return out;
}

}  // namespace detail

/** S = -2 nu ln |u|; magnitude is used so spurious phases do not corrupt S. */
inline InverseResult colehopf_inverse(const Field& u, const TransformConfig& cfg) {
    return detail::colehopf_inverse_impl(u, cfg);
}

inline InverseResult colehopf_inverse(const ComplexField& u, const TransformConfig& cfg) {
    return detail::colehopf_inverse_impl(u, cfg);
}

/** Gradient recovery along axis k: -2 nu (D_k u) / u with the central difference.
 *  Complex inputs yield the magnitude signed by the real part of the ratio. */
struct GradientResult {
    Field grad;
    std::vector<std::size_t> near_floor;
};

inline GradientResult gradient_from_u(const Field& u, int axis, const TransformConfig& cfg) {
    Field du = apply_derivative(u, axis);
    GradientResult out{Field(u.grid), {}};
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) < cfg.floor) {
            out.near_floor.push_back(i);
            out.grad[i] = 0.0;
            continue;
        }
        out.grad[i] = -2.0 * cfg.nu * du[i] / u[i];
    }
    return out;
}

inline GradientResult gradient_from_u(const ComplexField& u, int axis, const TransformConfig& cfg) {
    ComplexField du = apply_derivative(u, axis);
    GradientResult out{Field(u.grid), {}};
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) < cfg.floor) {
            out.near_floor.push_back(i);
            out.grad[i] = 0.0;
            continue;
        }
        cplx g = -2.0 * cfg.nu * du[i] / u[i];
        out.grad[i] = std::copysign(std::abs(g), g.real());
    }
    return out;
}

}  // namespace vhj
