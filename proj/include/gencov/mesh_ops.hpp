#pragma once

#include <gencov/mesh.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>

namespace gencov {

/// Pointwise metric volume factor sqrt(det g).
inline ScalarField volume_factor(const MetricField& g) {
    ScalarField out(g.mesh);
    double m[3][3];
    for (std::size_t id = 0; id < g.mesh.nodes(); ++id) {
        g.load(id, m);
        out.at(id) = std::sqrt(detail::det_sym(m, g.mesh.dim));
    }
    return out;
}

/// Equation-of-motion density for the free scalar: the d^n x coefficient of
/// (Laplace-Beltrami phi) vol_g, computed in divergence form so that the
/// grid sum telescopes exactly and the operator is self-adjoint under the
/// plain grid pairing.
inline DensityField bv_differential(const MetricField& g, const ScalarField& phi) {
    if (!(g.mesh == phi.mesh)) throw std::invalid_argument("mesh mismatch");
    g.require_spd();
    const TorusMesh& mesh = g.mesh;
    const int n = mesh.dim;

    std::array<std::vector<double>, 3> dphi;
    for (int a = 0; a < n; ++a) dphi[a] = centered_derivative(phi, 0, a);

    // flux F^mu = sqrt(det g) g^{mu nu} d_nu phi
    GridData flux(mesh, n);
    double m[3][3], inv[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        g.load(id, m);
        detail::inverse_sym(m, n, inv);
        double sq = std::sqrt(detail::det_sym(m, n));
        for (int mu = 0; mu < n; ++mu) {
            double s = 0;
            for (int nu = 0; nu < n; ++nu) s += inv[mu][nu] * dphi[nu][id];
            flux.at(id, mu) = sq * s;
        }
    }
    DensityField out(mesh);
    for (int mu = 0; mu < n; ++mu) {
        auto div = centered_derivative(flux, mu, mu);
        for (std::size_t id = 0; id < mesh.nodes(); ++id) out.at(id) += div[id];
    }
    return out;
}

inline ScalarField laplace_beltrami(const MetricField& g, const ScalarField& phi) {
    DensityField q = bv_differential(g, phi);
    ScalarField sq = volume_factor(g);
    ScalarField out(g.mesh);
    for (std::size_t id = 0; id < g.mesh.nodes(); ++id) out.at(id) = q.at(id) / sq.at(id);
    return out;
}

/// (L_V g)_{mu nu} = V^rho d_rho g_{mu nu} + g_{rho nu} d_mu V^rho
///                 + g_{mu rho} d_nu V^rho, by centered differences.
inline SymTensorField lie_derivative_metric(const MeshVectorField& V, const MetricField& g) {
    if (!(V.mesh == g.mesh)) throw std::invalid_argument("mesh mismatch");
    const TorusMesh& mesh = g.mesh;
    const int n = mesh.dim;
    std::array<std::array<std::vector<double>, 3>, 3> dV;  // dV[rho][mu] = d_mu V^rho
    for (int r = 0; r < n; ++r)
        for (int a = 0; a < n; ++a) dV[r][a] = centered_derivative(V, r, a);
    SymTensorField out(mesh);
    for (int mu = 0; mu < n; ++mu)
        for (int nu = mu; nu < n; ++nu) {
            int sc = sym_index(n, mu, nu);
            std::array<std::vector<double>, 3> dgc;
            for (int a = 0; a < n; ++a) dgc[a] = centered_derivative(g, sc, a);
            for (std::size_t id = 0; id < mesh.nodes(); ++id) {
                double s = 0;
                for (int r = 0; r < n; ++r) {
                    s += V.at(id, r) * dgc[r][id];
                    s += g.at_sym(id, r, nu) * dV[r][mu][id];
                    s += g.at_sym(id, mu, r) * dV[r][nu][id];
                }
                out.at(id, sc) = s;
            }
        }
    return out;
}

/// L_V phi = V^mu d_mu phi.
inline ScalarField lie_derivative_scalar(const MeshVectorField& V, const ScalarField& phi) {
    if (!(V.mesh == phi.mesh)) throw std::invalid_argument("mesh mismatch");
    ScalarField out(phi.mesh);
    for (int a = 0; a < phi.mesh.dim; ++a) {
        auto d = centered_derivative(phi, 0, a);
        for (std::size_t id = 0; id < phi.mesh.nodes(); ++id) out.at(id) += V.at(id, a) * d[id];
    }
    return out;
}

/// Precomputed per-node image points and Jacobians of a diffeomorphism,
/// shared by the pullback operations.
struct DiffeoTable {
    TorusMesh mesh;
    std::vector<std::array<double, 3>> y;
    std::vector<std::array<std::array<double, 3>, 3>> J;
    std::vector<double> det;

    DiffeoTable(const Diffeomorphism& f, const TorusMesh& m) : mesh(m) {
        y.resize(m.nodes());
        J.resize(m.nodes());
        det.resize(m.nodes());
        for (std::size_t id = 0; id < m.nodes(); ++id) {
            auto x = m.point(id);
            y[id] = f.apply(x);
            double jj[3][3];
            f.jacobian(x, jj);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) J[id][r][c] = jj[r][c];
            if (m.dim == 1)
                det[id] = jj[0][0];
            else if (m.dim == 2)
                det[id] = jj[0][0] * jj[1][1] - jj[0][1] * jj[1][0];
            else
                det[id] = jj[0][0] * (jj[1][1] * jj[2][2] - jj[1][2] * jj[2][1]) -
                          jj[0][1] * (jj[1][0] * jj[2][2] - jj[1][2] * jj[2][0]) +
                          jj[0][2] * (jj[1][0] * jj[2][1] - jj[1][1] * jj[2][0]);
        }
    }
};

inline ScalarField pullback_scalar(const DiffeoTable& t, const ScalarField& phi) {
    SpectralInterpolant interp(phi.mesh, phi.v);
    ScalarField out(t.mesh);
    for (std::size_t id = 0; id < t.mesh.nodes(); ++id) out.at(id) = interp.value(t.y[id]);
    return out;
}

inline DensityField pullback_density(const DiffeoTable& t, const DensityField& q) {
    SpectralInterpolant interp(q.mesh, q.v);
    DensityField out(t.mesh);
    for (std::size_t id = 0; id < t.mesh.nodes(); ++id)
        out.at(id) = interp.value(t.y[id]) * t.det[id];
    return out;
}

inline MetricField pullback_metric(const DiffeoTable& t, const MetricField& g) {
    const int n = t.mesh.dim;
    std::vector<SpectralInterpolant> interp;
    for (int c = 0; c < sym_size(n); ++c) {
        std::vector<double> comp(g.mesh.nodes());
        for (std::size_t id = 0; id < g.mesh.nodes(); ++id) comp[id] = g.at(id, c);
        interp.push_back(SpectralInterpolant(g.mesh, comp));
    }
    MetricField out(t.mesh);
    for (std::size_t id = 0; id < t.mesh.nodes(); ++id) {
        double gy[3][3];
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu)
                gy[mu][nu] = gy[nu][mu] = interp[sym_index(n, mu, nu)].value(t.y[id]);
        for (int mu = 0; mu < n; ++mu)
            for (int nu = mu; nu < n; ++nu) {
                double s = 0;
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c) s += t.J[id][r][mu] * t.J[id][c][nu] * gy[r][c];
                out.at_sym(id, mu, nu) = s;
            }
    }
    return out;
}

inline MeshVectorField pullback_vector(const DiffeoTable& t, const MeshVectorField& V) {
    const int n = t.mesh.dim;
    std::vector<SpectralInterpolant> interp;
    for (int c = 0; c < n; ++c) {
        std::vector<double> comp(V.mesh.nodes());
        for (std::size_t id = 0; id < V.mesh.nodes(); ++id) comp[id] = V.at(id, c);
        interp.push_back(SpectralInterpolant(V.mesh, comp));
    }
    MeshVectorField out(t.mesh);
    for (std::size_t id = 0; id < t.mesh.nodes(); ++id) {
        double vy[3];
        for (int c = 0; c < n; ++c) vy[c] = interp[c].value(t.y[id]);
        // (f* V)(x) = (df_x)^{-1} V(f(x))
        double jinv[3][3];
        const auto& J = t.J[id];
        if (n == 1) {
            jinv[0][0] = 1.0 / J[0][0];
        } else if (n == 2) {
            double d = t.det[id];
            jinv[0][0] = J[1][1] / d;
            jinv[1][1] = J[0][0] / d;
            jinv[0][1] = -J[0][1] / d;
            jinv[1][0] = -J[1][0] / d;
        } else {
            double d = t.det[id];
            jinv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / d;
            jinv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / d;
            jinv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / d;
            jinv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / d;
            jinv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / d;
            jinv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / d;
            jinv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / d;
            jinv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / d;
            jinv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / d;
        }
        for (int r = 0; r < n; ++r) {
            double s = 0;
            for (int c = 0; c < n; ++c) s += jinv[r][c] * vy[c];
            out.at(id, r) = s;
        }
    }
    return out;
}

inline ScalarField pullback_scalar(const Diffeomorphism& f, const ScalarField& phi) {
    return pullback_scalar(DiffeoTable(f, phi.mesh), phi);
}
inline DensityField pullback_density(const Diffeomorphism& f, const DensityField& q) {
    return pullback_density(DiffeoTable(f, q.mesh), q);
}
inline MetricField pullback_metric(const Diffeomorphism& f, const MetricField& g) {
    return pullback_metric(DiffeoTable(f, g.mesh), g);
}
inline MeshVectorField pullback_vector(const Diffeomorphism& f, const MeshVectorField& V) {
    return pullback_vector(DiffeoTable(f, V.mesh), V);
}

/// Approximate inverse map, found per node by fixed-point iteration on
/// z = x - displacement(z) and returned as a new displacement grid.
inline Diffeomorphism inverse(const Diffeomorphism& f) {
    const TorusMesh& mesh = f.mesh();
    MeshVectorField disp(mesh);
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        auto x = mesh.point(id);
        std::array<double, 3> z = x;
        for (int it = 0; it < 60; ++it) {
            auto fz = f.apply(z);
            std::array<double, 3> nz = z;
            double step = 0;
            for (int c = 0; c < mesh.dim; ++c) {
                double diff = fz[c] - x[c];
                diff -= std::round(diff);  // shortest representative on the circle
                nz[c] = z[c] - diff;
                step = std::max(step, std::abs(diff));
            }
            z = nz;
            if (step < 1e-14) break;
        }
        for (int c = 0; c < mesh.dim; ++c) {
            double d = z[c] - x[c];
            disp.at(id, c) = d - std::round(d);
        }
    }
    return Diffeomorphism(mesh, disp);
}

/// Time-t flow of a vector field: classical fourth-order integration of the
/// node trajectories, returned as a displacement map.
inline Diffeomorphism flow(const MeshVectorField& V, double t, int steps = 32,
                           double amplitude_bound = 0.3) {
    const TorusMesh& mesh = V.mesh;
    if (std::abs(t) * V.max_abs() > amplitude_bound)
        throw std::domain_error("flow displacement would exceed the amplitude bound");
    std::vector<SpectralInterpolant> vi;
    for (int c = 0; c < mesh.dim; ++c) {
        std::vector<double> comp(mesh.nodes());
        for (std::size_t id = 0; id < mesh.nodes(); ++id) comp[id] = V.at(id, c);
        vi.push_back(SpectralInterpolant(mesh, comp));
    }
    auto vel = [&](const std::array<double, 3>& p, double* out) {
        std::array<double, 3> q = p;
        for (int c = 0; c < mesh.dim; ++c) q[c] -= std::floor(q[c]);
        for (int c = 0; c < mesh.dim; ++c) out[c] = vi[c].value(q);
    };
    MeshVectorField disp(mesh);
    const double dt = t / steps;
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        std::array<double, 3> z = mesh.point(id);
        for (int s = 0; s < steps; ++s) {
            double k1[3], k2[3], k3[3], k4[3];
            std::array<double, 3> tmp;
            vel(z, k1);
            for (int c = 0; c < mesh.dim; ++c) tmp[c] = z[c] + 0.5 * dt * k1[c];
            vel(tmp, k2);
            for (int c = 0; c < mesh.dim; ++c) tmp[c] = z[c] + 0.5 * dt * k2[c];
            vel(tmp, k3);
            for (int c = 0; c < mesh.dim; ++c) tmp[c] = z[c] + dt * k3[c];
            vel(tmp, k4);
            for (int c = 0; c < mesh.dim; ++c)
                z[c] += dt / 6.0 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
        }
        auto x = mesh.point(id);
        for (int c = 0; c < mesh.dim; ++c) disp.at(id, c) = z[c] - x[c];
    }
    return Diffeomorphism(mesh, disp);
}

// -------------------------------------------------------------------------
// Seeded smooth test data. Fields are low-order trigonometric polynomials
// held as analytic closures, so a convergence study can sample the same
// continuum datum on every grid.

struct AnalyticScalar {
    struct Term {
        double amp;
        int k[3];
        double phase;
    };
    double constant = 0;
    std::vector<Term> terms;

    double operator()(const std::array<double, 3>& x) const {
        double s = constant;
        for (const auto& t : terms)
            s += t.amp * std::cos(2 * M_PI * (t.k[0] * x[0] + t.k[1] * x[1] + t.k[2] * x[2]) + t.phase);
        return s;
    }
    double derivative(const std::array<double, 3>& x, int axis) const {
        double s = 0;
        for (const auto& t : terms)
            s -= t.amp * 2 * M_PI * t.k[axis] *
                 std::sin(2 * M_PI * (t.k[0] * x[0] + t.k[1] * x[1] + t.k[2] * x[2]) + t.phase);
        return s;
    }
};

struct AnalyticVector {
    std::vector<AnalyticScalar> comp;
};

struct AnalyticMetric {
    int dim = 2;
    std::vector<AnalyticScalar> comp;  // sym_size(dim) entries, perturbation around flat

    void value(const std::array<double, 3>& x, double g[3][3]) const {
        for (int mu = 0; mu < dim; ++mu)
            for (int nu = mu; nu < dim; ++nu) {
                double val = comp[sym_index(dim, mu, nu)](x) + (mu == nu ? 1.0 : 0.0);
                g[mu][nu] = g[nu][mu] = val;
            }
    }
};

/// Symmetric tensor datum with no flat background (metric perturbations).
struct AnalyticSymTensor {
    int dim = 2;
    std::vector<AnalyticScalar> comp;  // sym_size(dim) entries

    void value(const std::array<double, 3>& x, double t[3][3]) const {
        for (int mu = 0; mu < dim; ++mu)
            for (int nu = mu; nu < dim; ++nu)
                t[mu][nu] = t[nu][mu] = comp[sym_index(dim, mu, nu)](x);
    }
};

namespace detail {

/// Deterministic uniform in [0,1): fixed bit recipe, independent of any
/// library distribution implementation, so reports are byte-stable.
inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(unit_uniform(rng) * (hi - lo + 1));
}

inline AnalyticScalar random_trig(std::mt19937_64& rng, int dim, double amp, int max_freq,
                                  int nterms) {
    AnalyticScalar f;
    for (int t = 0; t < nterms; ++t) {
        AnalyticScalar::Term term{};
        term.amp = amp * (2 * unit_uniform(rng) - 1);
        bool nonzero = false;
        for (int a = 0; a < dim; ++a) {
            term.k[a] = uniform_int(rng, -max_freq, max_freq);
            nonzero = nonzero || term.k[a] != 0;
        }
        if (!nonzero) term.k[0] = 1;
        term.phase = 2 * M_PI * unit_uniform(rng);
        f.terms.push_back(term);
    }
    return f;
}

}  // namespace detail

inline AnalyticScalar random_scalar(std::uint64_t seed, int dim, double amp = 1.0,
                                    int max_freq = 2, int nterms = 3) {
    std::mt19937_64 rng(seed);
    return detail::random_trig(rng, dim, amp, max_freq, nterms);
}

inline AnalyticVector random_vector(std::uint64_t seed, int dim, double amp = 1.0,
                                    int max_freq = 2, int nterms = 3) {
    std::mt19937_64 rng(seed);
    AnalyticVector v;
    for (int c = 0; c < dim; ++c) v.comp.push_back(detail::random_trig(rng, dim, amp, max_freq, nterms));
    return v;
}

/// Flat metric plus a small smooth symmetric perturbation; positivity is
/// guaranteed by the amplitude budget and re-checked on sampling.
inline AnalyticMetric random_metric(std::uint64_t seed, int dim, double amp = 0.15,
                                    int max_freq = 2, int nterms = 2) {
    std::mt19937_64 rng(seed);
    AnalyticMetric g;
    g.dim = dim;
    for (int c = 0; c < sym_size(dim); ++c)
        g.comp.push_back(detail::random_trig(rng, dim, amp / dim, max_freq, nterms));
    return g;
}

inline AnalyticSymTensor random_sym_tensor(std::uint64_t seed, int dim, double amp = 0.5,
                                           int max_freq = 2, int nterms = 2) {
    std::mt19937_64 rng(seed);
    AnalyticSymTensor t;
    t.dim = dim;
    for (int c = 0; c < sym_size(dim); ++c)
        t.comp.push_back(detail::random_trig(rng, dim, amp, max_freq, nterms));
    return t;
}

inline ScalarField sample_scalar(const TorusMesh& mesh, const AnalyticScalar& f) {
    ScalarField out(mesh);
    for (std::size_t id = 0; id < mesh.nodes(); ++id) out.at(id) = f(mesh.point(id));
    return out;
}

inline MeshVectorField sample_vector(const TorusMesh& mesh, const AnalyticVector& f) {
    MeshVectorField out(mesh);
    for (std::size_t id = 0; id < mesh.nodes(); ++id)
        for (int c = 0; c < mesh.dim; ++c) out.at(id, c) = f.comp[c](mesh.point(id));
    return out;
}

inline SymTensorField sample_sym_tensor(const TorusMesh& mesh, const AnalyticSymTensor& f) {
    if (f.dim != mesh.dim) throw std::invalid_argument("tensor dimension mismatch");
    SymTensorField out(mesh);
    double t[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        f.value(mesh.point(id), t);
        for (int mu = 0; mu < mesh.dim; ++mu)
            for (int nu = mu; nu < mesh.dim; ++nu) out.at_sym(id, mu, nu) = t[mu][nu];
    }
    return out;
}

inline MetricField sample_metric(const TorusMesh& mesh, const AnalyticMetric& f) {
    if (f.dim != mesh.dim) throw std::invalid_argument("metric dimension mismatch");
    MetricField out(mesh);
    double g[3][3];
    for (std::size_t id = 0; id < mesh.nodes(); ++id) {
        f.value(mesh.point(id), g);
        for (int mu = 0; mu < mesh.dim; ++mu)
            for (int nu = mu; nu < mesh.dim; ++nu) out.at_sym(id, mu, nu) = g[mu][nu];
    }
    out.require_spd();
    return out;
}

/// Displacement-built diffeomorphism from an analytic vector amplitude; the
/// caller keeps the closure to rebuild the same map on finer grids.
inline Diffeomorphism make_diffeomorphism(const TorusMesh& mesh, const AnalyticVector& disp) {
    return Diffeomorphism(mesh, sample_vector(mesh, disp));
}

// -------------------------------------------------------------------------
// Integration and serialization.

inline double integrate_density(const DensityField& q) {
    double s = 0;
    for (std::size_t id = 0; id < q.mesh.nodes(); ++id) s += q.at(id);
    return s * std::pow(q.mesh.h(), q.mesh.dim);
}

/// Plain grid pairing between a density and a scalar: sum q phi h^n.
inline double pair_density_scalar(const DensityField& q, const ScalarField& phi) {
    if (!(q.mesh == phi.mesh)) throw std::invalid_argument("mesh mismatch");
    double s = 0;
    for (std::size_t id = 0; id < q.mesh.nodes(); ++id) s += q.at(id) * phi.at(id);
    return s * std::pow(q.mesh.h(), q.mesh.dim);
}

inline void write_csv(const GridData& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    for (std::size_t id = 0; id < f.mesh.nodes(); ++id) {
        auto I = f.mesh.coords(id);
        for (int a = 0; a < f.mesh.dim; ++a) os << I[a] << ",";
        for (int c = 0; c < f.ncomp; ++c) os << f.at(id, c) << (c + 1 < f.ncomp ? "," : "\n");
    }
}

/// Compact layout: magic "GCFB", then uint32 dim, N, ncomp, then row-major
/// little-endian float64 node data.
inline void write_binary(const GridData& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write("GCFB", 4);
    std::uint32_t hdr[3] = {static_cast<std::uint32_t>(f.mesh.dim),
                            static_cast<std::uint32_t>(f.mesh.N),
                            static_cast<std::uint32_t>(f.ncomp)};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    os.write(reinterpret_cast<const char*>(f.v.data()),
             static_cast<std::streamsize>(f.v.size() * sizeof(double)));
}

inline GridData read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "GCFB", 4) != 0) throw std::runtime_error("bad field file magic");
    std::uint32_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    GridData f(TorusMesh(static_cast<int>(hdr[0]), static_cast<int>(hdr[1])),
               static_cast<int>(hdr[2]));
    is.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated field file");
    return f;
}

}  // namespace gencov
