#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curvcrit/errors.hpp"

namespace curvcrit {

/// Hard cap on the spatial dimension; keeps index buffers on the stack.
inline constexpr int kMaxDim = 8;

/// Axis-aligned box (0,L_1) x ... x (0,L_N) with n interior nodes per axis.
///
/// Node i_k ranges over 1..n along axis k at coordinate x_k = i_k h_k with
/// h_k = L_k/(n+1); the planes i_k = 0 and i_k = n+1 carry the implicit
/// homogeneous Dirichlet boundary values.
struct DomainSpec {
    int N = 3;
    std::vector<double> lengths;
    int n = 17;

    double spacing(int axis) const { return lengths[axis] / (n + 1); }

    double measure() const {
        double m = 1.0;
        for (double L : lengths) m *= L;
        return m;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int k = 0; k < N; ++k) v *= spacing(k);
        return v;
    }

    std::size_t node_count() const {
        std::size_t c = 1;
        for (int k = 0; k < N; ++k) c *= static_cast<std::size_t>(n);
        return c;
    }

    bool operator==(const DomainSpec& o) const {
        return N == o.N && n == o.n && lengths == o.lengths;
    }
};

/// Validates and assembles a domain description.
inline DomainSpec make_domain(int N, std::vector<double> lengths, int n) {
    if (N < 3) throw ConfigError("dimension must be at least 3, got " + std::to_string(N));
    if (N > kMaxDim) throw ConfigError("dimension exceeds supported maximum " + std::to_string(kMaxDim));
    if (static_cast<int>(lengths.size()) != N)
        throw ConfigError("expected " + std::to_string(N) + " side lengths, got " +
                          std::to_string(lengths.size()));
    for (double L : lengths)
        if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("side lengths must be positive and finite");
    if (n < 3) throw ConfigError("interior resolution n must be >= 3");
    double count = 1.0;
    for (int k = 0; k < N; ++k) count *= n;
    if (count > 1e8) throw ConfigError("grid too large: n^N exceeds 1e8 nodes");
    return DomainSpec{N, std::move(lengths), n};
}

/// Scalar grid function on the interior nodes, row-major with the last axis
/// fastest. Zero boundary values are implicit and never stored.
struct Field {
    std::vector<double> values;
    DomainSpec spec;
};

/// Zero field on the given domain.
inline Field zero_field(const DomainSpec& d) {
    return Field{std::vector<double>(d.node_count(), 0.0), d};
}

namespace detail {

inline void fill_strides(const DomainSpec& d, std::array<std::int64_t, kMaxDim>& stride) {
    stride[d.N - 1] = 1;
    for (int k = d.N - 2; k >= 0; --k) stride[k] = stride[k + 1] * d.n;
}

/// Value at multi-index idx (components in 0..n+1); out-of-interior reads are 0.
inline double value_or_zero(const std::vector<double>& v,
                            const std::array<int, kMaxDim>& idx,
                            const std::array<std::int64_t, kMaxDim>& stride,
                            int N, int n) {
    std::int64_t flat = 0;
    for (int k = 0; k < N; ++k) {
        const int i = idx[k];
        if (i < 1 || i > n) return 0.0;
        flat += static_cast<std::int64_t>(i - 1) * stride[k];
    }
    return v[static_cast<std::size_t>(flat)];
}

/// Sweeps every face of every axis in a fixed deterministic order and calls
/// fn(d, left_idx, g) with the full reconstructed N-component face gradient.
///
/// Faces of axis d sit between nodes i_d = f and i_d = f+1 for f = 0..n (the
/// outermost two touch the boundary planes). The normal component is the
/// first difference across the face; each tangential component averages the
/// centered differences at the two adjacent nodes.
template <class Fn>
inline void sweep_faces(const Field& u, Fn&& fn) {
    const DomainSpec& d = u.spec;
    const int N = d.N;
    const int n = d.n;
    std::array<std::int64_t, kMaxDim> stride{};
    fill_strides(d, stride);
    std::array<double, kMaxDim> h{};
    for (int k = 0; k < N; ++k) h[k] = d.spacing(k);

    std::array<int, kMaxDim> c{};
    std::array<int, kMaxDim> idx{};
    double g[kMaxDim];

    for (int axis = 0; axis < N; ++axis) {
        for (int k = 0; k < N; ++k) c[k] = (k == axis) ? 0 : 1;
        while (true) {
            // left node: i = c with i_axis = f; right node: i_axis = f + 1
            idx = c;
            const double uL = value_or_zero(u.values, idx, stride, N, n);
            idx[axis] = c[axis] + 1;
            const double uR = value_or_zero(u.values, idx, stride, N, n);
            g[axis] = (uR - uL) / h[axis];
            for (int e = 0; e < N; ++e) {
                if (e == axis) continue;
                idx = c;
                idx[e] = c[e] + 1;
                const double Lp = value_or_zero(u.values, idx, stride, N, n);
                idx[e] = c[e] - 1;
                const double Lm = value_or_zero(u.values, idx, stride, N, n);
                idx[axis] = c[axis] + 1;
                idx[e] = c[e] + 1;
                const double Rp = value_or_zero(u.values, idx, stride, N, n);
                idx[e] = c[e] - 1;
                const double Rm = value_or_zero(u.values, idx, stride, N, n);
                // paired sum: bitwise invariant under every axis reflection
                g[e] = ((Lp - Lm) + (Rp - Rm)) / (4.0 * h[e]);
            }
            fn(axis, c, g);

            int k = N - 1;
            for (; k >= 0; --k) {
                // axis coordinate runs 0..n (faces), the others 1..n (nodes)
                if (c[k] < n) { ++c[k]; break; }
                c[k] = (k == axis) ? 0 : 1;
            }
            if (k < 0) break;
        }
    }
}

} // namespace detail

/// Accumulates sum over all faces of face_value(|g_f|^2) times the face
/// quadrature weight w = cell_volume / N.
template <class Fn>
inline double sum_over_faces(const Field& u, Fn&& face_value) {
    const double w = u.spec.cell_volume() / u.spec.N;
    const int N = u.spec.N;
    double acc = 0.0;
    detail::sweep_faces(u, [&](int, const std::array<int, kMaxDim>&, const double* g) {
        double t = 0.0;
        for (int k = 0; k < N; ++k) t += g[k] * g[k];
        acc += face_value(t);
    });
    return acc * w;
}

/// Discrete H^1_0 seminorm squared: sum of |g_f|^2 w over all faces.
inline double h1_norm_sq(const Field& u) {
    return sum_over_faces(u, [](double t) { return t; });
}

/// Largest face gradient magnitude.
inline double sup_grad(const Field& u) {
    const int N = u.spec.N;
    double worst = 0.0;
    detail::sweep_faces(u, [&](int, const std::array<int, kMaxDim>&, const double* g) {
        double t = 0.0;
        for (int k = 0; k < N; ++k) t += g[k] * g[k];
        worst = std::max(worst, t);
    });
    return std::sqrt(worst);
}

/// Adds c * alpha(|g_f|^2) (g_f . dg_f/du_i) w / h^N to out at every node the
/// face touches. With alpha = a and c = 1 this is the L^2-density gradient of
/// the diffusion energy (1/2) sum w A(|g_f|^2); with alpha = 1 and c = 1 it is
/// half the density gradient of h1_norm_sq.
///
/// Accumulation is node-gathered with a reduction order invariant under every
/// axis reflection: paired sums combine the two members that a reflection
/// swaps, so a field with exact mirror (anti)symmetry gets a gradient with the
/// same exact symmetry. Descent trajectories then stay inside symmetry
/// classes instead of leaking ulp-level asymmetry near saddle points.
template <class Alpha>
inline void add_divergence_form(const Field& u, Alpha&& alpha, double c, Field& out) {
    const DomainSpec& d = u.spec;
    const int N = d.N;
    const int n = d.n;
    std::array<double, kMaxDim> h{};
    for (int k = 0; k < N; ++k) h[k] = d.spacing(k);
    const double w_over_hN = 1.0 / N; // face weight h^N/N over density factor h^N

    // per-axis face arrays: weighted coefficient gam = alpha(t_f) and the N
    // gradient components, in face sweep order (row-major per axis)
    std::array<std::vector<double>, kMaxDim> gam;
    std::array<std::vector<double>, kMaxDim> gcomp;
    std::array<std::array<std::int64_t, kMaxDim>, kMaxDim> fstride{};
    for (int a = 0; a < N; ++a) {
        std::int64_t s = 1;
        for (int k = N - 1; k >= 0; --k) {
            fstride[a][k] = s;
            s *= (k == a) ? (n + 1) : n;
        }
        gam[a].reserve(static_cast<std::size_t>(s));
        gcomp[a].reserve(static_cast<std::size_t>(s) * N);
    }
    detail::sweep_faces(u, [&](int axis, const std::array<int, kMaxDim>&, const double* g) {
        double t = 0.0;
        for (int k = 0; k < N; ++k) t += g[k] * g[k];
        gam[axis].push_back(alpha(t));
        for (int k = 0; k < N; ++k) gcomp[axis].push_back(g[k]);
    });

    // face flat index for axis a at node coords j, with the a-coordinate
    // replaced by fa (0..n) and optionally the e-coordinate replaced by fe
    const auto face_flat = [&](int a, const std::array<int, kMaxDim>& j, int fa, int e,
                               int fe) -> std::int64_t {
        std::int64_t flat = static_cast<std::int64_t>(fa) * fstride[a][a];
        for (int k = 0; k < N; ++k) {
            if (k == a) continue;
            const int ck = (k == e) ? fe : j[k];
            flat += static_cast<std::int64_t>(ck - 1) * fstride[a][k];
        }
        return flat;
    };

    std::array<int, kMaxDim> j{};
    for (int k = 0; k < N; ++k) j[k] = 1;
    std::size_t flat_node = 0;
    while (true) {
        double acc = 0.0;
        for (int a = 0; a < N; ++a) {
            // normal pair: face below (dg/du = +1/h) and face above (-1/h)
            const std::int64_t fb = face_flat(a, j, j[a] - 1, -1, 0);
            const std::int64_t fa_ = face_flat(a, j, j[a], -1, 0);
            const double nb = gam[a][static_cast<std::size_t>(fb)] *
                              gcomp[a][static_cast<std::size_t>(fb) * N + a];
            const double na = gam[a][static_cast<std::size_t>(fa_)] *
                              gcomp[a][static_cast<std::size_t>(fa_) * N + a];
            acc += (nb - na) * (w_over_hN / h[a]);
            // tangential quadruple: faces on both sides (a-coordinate j_a and
            // j_a - 1) shifted by -+1 along e; du coefficients +-1/(4 h_e)
            for (int e = 0; e < N; ++e) {
                if (e == a) continue;
                const auto tang = [&](int fa2, int fe, double sign) -> double {
                    if (fe < 1 || fe > n) return 0.0;
                    const std::int64_t f = face_flat(a, j, fa2, e, fe);
                    return sign * (gam[a][static_cast<std::size_t>(f)] *
                                   gcomp[a][static_cast<std::size_t>(f) * N + e]);
                };
                const double cl = tang(j[a], j[e] - 1, 1.0) + tang(j[a], j[e] + 1, -1.0);
                const double cr = tang(j[a] - 1, j[e] - 1, 1.0) + tang(j[a] - 1, j[e] + 1, -1.0);
                acc += (cl + cr) * (w_over_hN / (4.0 * h[e]));
            }
        }
        out.values[flat_node] += c * acc;

        ++flat_node;
        int k = N - 1;
        for (; k >= 0; --k) {
            if (j[k] < n) { ++j[k]; break; }
            j[k] = 1;
        }
        if (k < 0) break;
    }
}

/// Per-axis arrays of reconstructed face gradients, N components per face,
/// faces enumerated in the same row-major order used by the face sweep.
struct FaceGradient {
    DomainSpec spec;
    std::vector<std::vector<double>> comps;

    std::size_t face_count(int axis) const {
        std::size_t c = static_cast<std::size_t>(spec.n) + 1;
        for (int k = 0; k < spec.N; ++k)
            if (k != axis) c *= static_cast<std::size_t>(spec.n);
        return c;
    }
};

/// Materializes the face gradient of u.
inline FaceGradient face_gradient(const Field& u) {
    FaceGradient fg;
    fg.spec = u.spec;
    fg.comps.assign(u.spec.N, {});
    for (int d = 0; d < u.spec.N; ++d) fg.comps[d].reserve(fg.face_count(d) * u.spec.N);
    detail::sweep_faces(u, [&](int axis, const std::array<int, kMaxDim>&, const double* g) {
        for (int k = 0; k < u.spec.N; ++k) fg.comps[axis].push_back(g[k]);
    });
    return fg;
}

/// Discrete L^p norm (sum |u_i|^p h^N)^(1/p), p >= 1.
inline double lp_norm(const Field& u, double p) {
    if (!(p >= 1.0)) throw ConfigError("lp_norm requires p >= 1");
    double acc = 0.0;
    if (p == 2.0) {
        for (double x : u.values) acc += x * x;
    } else {
        for (double x : u.values) acc += std::pow(std::abs(x), p);
    }
    return std::pow(acc * u.spec.cell_volume(), 1.0 / p);
}

/// Max norm over the nodes.
inline double linf_norm(const Field& u) {
    double m = 0.0;
    for (double x : u.values) m = std::max(m, std::abs(x));
    return m;
}

/// Discrete L^2 inner product sum u_i v_i h^N.
inline double l2_inner(const Field& a, const Field& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
    return acc * a.spec.cell_volume();
}

inline double l2_norm(const Field& u) { return std::sqrt(l2_inner(u, u)); }

/// L^2 distance min(|a-b|, |a+b|), identifying a field with its negative.
inline double l2_distance_mod_sign(const Field& a, const Field& b) {
    double dm = 0.0, dp = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double m = a.values[i] - b.values[i];
        const double p = a.values[i] + b.values[i];
        dm += m * m;
        dp += p * p;
    }
    const double hN = a.spec.cell_volume();
    return std::sqrt(std::min(dm, dp) * hN);
}

/// Elementwise u + c g on a shared domain.
[[nodiscard]] inline Field axpy(const Field& u, double c, const Field& g) {
    Field out = u;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * g.values[i];
    return out;
}

inline void scale_field(Field& u, double c) {
    for (double& x : u.values) x *= c;
}

inline Field negated(const Field& u) {
    Field out = u;
    for (double& x : out.values) x = -x;
    return out;
}

/// Dirichlet sine mode: product over axes of sin(m_k pi x_k / L_k) sampled at
/// the interior nodes.
///
/// Per-axis tables enforce sin(m pi (n+1-i)/(n+1)) = (-1)^(m+1) sin(m pi i/(n+1))
/// bitwise, so each mode is exactly (anti)symmetric under every axis
/// reflection; descent from a pure mode then stays in its symmetry class.
inline Field eigenfield(const DomainSpec& d, const std::vector<int>& modes) {
    if (static_cast<int>(modes.size()) != d.N) throw ConfigError("mode vector size mismatch");
    const int n = d.n;
    const double pi = 3.14159265358979323846;
    std::vector<std::vector<double>> tab(static_cast<std::size_t>(d.N),
                                         std::vector<double>(static_cast<std::size_t>(n) + 1));
    for (int k = 0; k < d.N; ++k) {
        const int m = modes[k];
        for (int i = 1; 2 * i <= n + 1; ++i) {
            const int j = n + 1 - i;
            if (j == i && m % 2 == 0) {
                tab[k][i] = 0.0; // sin of an integer multiple of pi
                continue;
            }
            const double v = std::sin(m * pi * i / (n + 1.0));
            tab[k][i] = v;
            tab[k][j] = (m % 2 == 0) ? -v : v;
        }
    }
    Field f = zero_field(d);
    std::array<int, kMaxDim> c{};
    for (int k = 0; k < d.N; ++k) c[k] = 1;
    std::size_t flat = 0;
    while (true) {
        double v = 1.0;
        for (int k = 0; k < d.N; ++k) v *= tab[static_cast<std::size_t>(k)][c[k]];
        f.values[flat++] = v;
        int k = d.N - 1;
        for (; k >= 0; --k) {
            if (c[k] < d.n) { ++c[k]; break; }
            c[k] = 1;
        }
        if (k < 0) break;
    }
    return f;
}

/// Continuum Dirichlet eigenvalue sum (m_k pi / L_k)^2 of the sine mode.
inline double eigenvalue(const DomainSpec& d, const std::vector<int>& modes) {
    const double pi = 3.14159265358979323846;
    double s = 0.0;
    for (int k = 0; k < d.N; ++k) {
        const double r = modes[k] * pi / d.lengths[k];
        s += r * r;
    }
    return s;
}

/// The k mode vectors of lowest continuum eigenvalue, ties broken
/// lexicographically.
inline std::vector<std::vector<int>> lowest_modes(const DomainSpec& d, int k) {
    if (k < 1) throw ConfigError("need at least one mode");
    const int M = k + 1;
    std::vector<std::vector<int>> all;
    std::vector<int> m(d.N, 1);
    while (true) {
        all.push_back(m);
        int j = d.N - 1;
        for (; j >= 0; --j) {
            if (m[j] < M) { ++m[j]; break; }
            m[j] = 1;
        }
        if (j < 0) break;
    }
    std::sort(all.begin(), all.end(), [&](const std::vector<int>& a, const std::vector<int>& b) {
        const double ea = eigenvalue(d, a), eb = eigenvalue(d, b);
        if (ea != eb) return ea < eb;
        return a < b;
    });
    all.resize(static_cast<std::size_t>(k));
    return all;
}

/// Writes a field as a plain text file: header line "N n L1 ... LN", then one
/// node value per line in row-major order, 17 significant digits.
inline void write_field(const std::string& path, const Field& u) {
    std::ofstream os(path);
    if (!os) throw IOError("cannot open for writing: " + path);
    char buf[64];
    os << u.spec.N << " " << u.spec.n;
    for (double L : u.spec.lengths) {
        std::snprintf(buf, sizeof buf, "%.17g", L);
        os << " " << buf;
    }
    os << "\n";
    for (double v : u.values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << "\n";
    }
    if (!os) throw IOError("write failed: " + path);
}

/// Reads a field written by write_field, validating shape and finiteness.
inline Field read_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IOError("cannot open for reading: " + path);
    std::string header;
    if (!std::getline(is, header)) throw IOError("missing header: " + path);
    std::istringstream hs(header);
    int N = 0, n = 0;
    if (!(hs >> N >> n)) throw IOError("malformed header: " + path);
    std::vector<double> lengths;
    double L;
    while (hs >> L) lengths.push_back(L);
    DomainSpec spec;
    try {
        spec = make_domain(N, std::move(lengths), n);
    } catch (const ConfigError& e) {
        throw IOError("invalid header in " + path + ": " + e.what());
    }
    Field f = zero_field(spec);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (!(is >> f.values[i])) throw IOError("truncated field data: " + path);
        if (!std::isfinite(f.values[i])) throw IOError("non-finite value in " + path);
    }
    double extra;
    if (is >> extra) throw IOError("trailing data: " + path);
    return f;
}

} // namespace curvcrit
