#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gencov {

/// Structured periodic grid on the unit n-torus, n in {1,2,3}, N nodes per
/// axis, spacing 1/N. All index arithmetic wraps modulo N.
struct TorusMesh {
    int dim = 2;
    int N = 8;

    TorusMesh() = default;
    TorusMesh(int dim_, int N_) : dim(dim_), N(N_) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("mesh dimension must be 1, 2 or 3");
        if (N < 8) throw std::invalid_argument("need at least 8 nodes per axis");
    }

    double h() const { return 1.0 / N; }
    std::size_t nodes() const {
        std::size_t t = 1;
        for (int a = 0; a < dim; ++a) t *= static_cast<std::size_t>(N);
        return t;
    }
    std::size_t idx(const std::array<int, 3>& I) const {
        std::size_t t = 0;
        for (int a = 0; a < dim; ++a) {
            int i = ((I[a] % N) + N) % N;
            t = t * N + static_cast<std::size_t>(i);
        }
        return t;
    }
    std::array<int, 3> coords(std::size_t id) const {
        std::array<int, 3> I{0, 0, 0};
        for (int a = dim - 1; a >= 0; --a) {
            I[a] = static_cast<int>(id % N);
            id /= N;
        }
        return I;
    }
    std::array<double, 3> point(std::size_t id) const {
        auto I = coords(id);
        return {I[0] * h(), I[1] * h(), I[2] * h()};
    }
    bool operator==(const TorusMesh&) const = default;
};

/// Packed index into the upper triangle of a symmetric dim x dim matrix.
inline int sym_index(int dim, int mu, int nu) {
    if (mu > nu) std::swap(mu, nu);
    return mu * dim - mu * (mu - 1) / 2 + (nu - mu);
}
inline int sym_size(int dim) { return dim * (dim + 1) / 2; }

/// Flat node-major storage shared by all field kinds.
struct GridData {
    TorusMesh mesh;
    int ncomp = 1;
    std::vector<double> v;

    GridData() = default;
    GridData(const TorusMesh& m, int nc) : mesh(m), ncomp(nc), v(m.nodes() * nc, 0.0) {}

    double& at(std::size_t node, int c = 0) { return v[node * ncomp + c]; }
    double at(std::size_t node, int c = 0) const { return v[node * ncomp + c]; }

    double max_abs() const {
        double m = 0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

struct ScalarField : GridData {
    ScalarField() = default;
    explicit ScalarField(const TorusMesh& m) : GridData(m, 1) {}
};

/// Value convention: the coefficient of d^n x, so densities produced by the
/// equation-of-motion map already contain the metric volume factor.
struct DensityField : GridData {
    DensityField() = default;
    explicit DensityField(const TorusMesh& m) : GridData(m, 1) {}
};

struct MeshVectorField : GridData {
    MeshVectorField() = default;
    explicit MeshVectorField(const TorusMesh& m) : GridData(m, m.dim) {}
};

struct SymTensorField : GridData {
    SymTensorField() = default;
    explicit SymTensorField(const TorusMesh& m) : GridData(m, sym_size(m.dim)) {}
    double& at_sym(std::size_t node, int mu, int nu) {
        return at(node, sym_index(mesh.dim, mu, nu));
    }
    double at_sym(std::size_t node, int mu, int nu) const {
        return at(node, sym_index(mesh.dim, mu, nu));
    }
};

namespace detail {

/// Cholesky test for a symmetric dim x dim matrix (dim <= 3).
inline bool spd(const double m[3][3], int dim) {
    double l[3][3] = {};
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return true;
}

inline double det_sym(const double m[3][3], int dim) {
    if (dim == 1) return m[0][0];
    if (dim == 2) return m[0][0] * m[1][1] - m[0][1] * m[0][1];
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2]) -
           m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2]) +
           m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]);
}

inline void inverse_sym(const double m[3][3], int dim, double inv[3][3]) {
    double d = det_sym(m, dim);
    if (dim == 1) {
        inv[0][0] = 1.0 / m[0][0];
    } else if (dim == 2) {
        inv[0][0] = m[1][1] / d;
        inv[1][1] = m[0][0] / d;
        inv[0][1] = inv[1][0] = -m[0][1] / d;
    } else {
        inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[1][2]) / d;
        inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[0][2]) / d;
        inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[0][1]) / d;
        inv[0][1] = inv[1][0] = (m[0][2] * m[1][2] - m[0][1] * m[2][2]) / d;
        inv[0][2] = inv[2][0] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
        inv[1][2] = inv[2][1] = (m[0][1] * m[0][2] - m[0][0] * m[1][2]) / d;
    }
}

}  // namespace detail

struct MetricField : SymTensorField {
    MetricField() = default;
    explicit MetricField(const TorusMesh& m) : SymTensorField(m) {
        for (std::size_t id = 0; id < mesh.nodes(); ++id)
            for (int mu = 0; mu < mesh.dim; ++mu) at_sym(id, mu, mu) = 1.0;
    }

    void load(std::size_t node, double m[3][3]) const {
        for (int mu = 0; mu < mesh.dim; ++mu)
            for (int nu = 0; nu < mesh.dim; ++nu) m[mu][nu] = at_sym(node, mu, nu);
    }

    void require_spd() const {
        double m[3][3];
        for (std::size_t id = 0; id < mesh.nodes(); ++id) {
            load(id, m);
            if (!detail::spd(m, mesh.dim))
                throw std::domain_error("metric is not positive definite at some node");
        }
    }
};

/// Second-order centered difference of one component along one axis.
inline std::vector<double> centered_derivative(const GridData& f, int comp, int axis) {
    const TorusMesh& m = f.mesh;
    std::vector<double> out(m.nodes());
    const double inv2h = 0.5 * m.N;
    for (std::size_t id = 0; id < m.nodes(); ++id) {
        auto I = m.coords(id);
        auto Ip = I, Im = I;
        Ip[axis] += 1;
        Im[axis] -= 1;
        out[id] = (f.at(m.idx(Ip), comp) - f.at(m.idx(Im), comp)) * inv2h;
    }
    return out;
}

/// Trigonometric interpolation of one periodic grid component: exact on
/// band-limited data, evaluable (with first derivatives) at arbitrary
/// points. Coefficients come from separable naive DFTs; fine at desk scale.
class SpectralInterpolant {
public:
    SpectralInterpolant() = default;
    SpectralInterpolant(const TorusMesh& mesh, const std::vector<double>& values)
        : mesh_(mesh), coef_(values.begin(), values.end()) {
        if (values.size() != mesh.nodes()) throw std::invalid_argument("grid size mismatch");
        const int N = mesh_.N;
        std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(N) * N);
        for (int k = 0; k < N; ++k)
            for (int j = 0; j < N; ++j)
                twiddle[static_cast<std::size_t>(k) * N + j] =
                    std::polar(1.0 / N, -2.0 * M_PI * k * j / N);
        // transform along each axis in turn
        std::vector<std::complex<double>> tmp(coef_.size());
        for (int axis = mesh_.dim - 1; axis >= 0; --axis) {
            std::size_t stride = 1;
            for (int a = axis + 1; a < mesh_.dim; ++a) stride *= N;
            const std::size_t nlines = coef_.size() / N;
            for (std::size_t line = 0; line < nlines; ++line) {
                // base index of this 1-d line through the chosen axis
                std::size_t block = line / stride, within = line % stride;
                std::size_t base = block * stride * N + within;
                for (int k = 0; k < N; ++k) {
                    std::complex<double> s = 0;
                    const std::complex<double>* tw = &twiddle[static_cast<std::size_t>(k) * N];
                    for (int j = 0; j < N; ++j) s += coef_[base + j * stride] * tw[j];
                    tmp[base + k * stride] = s;
                }
            }
            std::swap(coef_, tmp);
        }
    }

    double value(const std::array<double, 3>& p) const { return eval(p, -1); }
    double derivative(const std::array<double, 3>& p, int axis) const { return eval(p, axis); }

private:
    double eval(const std::array<double, 3>& p, int deriv_axis) const {
        const int N = mesh_.N;
        std::array<std::vector<std::complex<double>>, 3> w;
        for (int a = 0; a < mesh_.dim; ++a) {
            w[a].resize(N);
            for (int k = 0; k < N; ++k) {
                int kk = (k <= N / 2) ? k : k - N;
                std::complex<double> ph = std::polar(1.0, 2.0 * M_PI * kk * p[a]);
                if (a == deriv_axis)
                    // the lone Nyquist mode has no odd derivative partner; drop it
                    ph *= (2 * k == N) ? 0.0 : std::complex<double>(0.0, 2.0 * M_PI * kk);
                w[a][k] = ph;
            }
        }
        std::complex<double> s = 0;
        if (mesh_.dim == 1) {
            for (int k = 0; k < N; ++k) s += coef_[k] * w[0][k];
        } else if (mesh_.dim == 2) {
            for (int k0 = 0; k0 < N; ++k0) {
                const std::complex<double>* row = &coef_[static_cast<std::size_t>(k0) * N];
                std::complex<double> inner = 0;
                for (int k1 = 0; k1 < N; ++k1) inner += row[k1] * w[1][k1];
                s += w[0][k0] * inner;
            }
        } else {
            for (int k0 = 0; k0 < N; ++k0) {
                std::complex<double> mid = 0;
                for (int k1 = 0; k1 < N; ++k1) {
                    const std::complex<double>* row =
                        &coef_[(static_cast<std::size_t>(k0) * N + k1) * N];
                    std::complex<double> inner = 0;
                    for (int k2 = 0; k2 < N; ++k2) inner += row[k2] * w[2][k2];
                    mid += w[1][k1] * inner;
                }
                s += w[0][k0] * mid;
            }
        }
        return s.real();
    }

    TorusMesh mesh_;
    std::vector<std::complex<double>> coef_;
};

/// Identity plus a periodic displacement, stored as interpolants so the map
/// and its Jacobian are available at arbitrary points.
class Diffeomorphism {
public:
    Diffeomorphism() = default;
    Diffeomorphism(const TorusMesh& mesh, const MeshVectorField& displacement)
        : mesh_(mesh) {
        if (!(displacement.mesh == mesh)) throw std::invalid_argument("displacement mesh mismatch");
        for (int c = 0; c < mesh.dim; ++c) {
            std::vector<double> comp(mesh.nodes());
            for (std::size_t id = 0; id < mesh.nodes(); ++id) comp[id] = displacement.at(id, c);
            disp_.push_back(SpectralInterpolant(mesh, comp));
        }
        for (std::size_t id = 0; id < mesh.nodes(); ++id) {
            double J[3][3];
            jacobian(mesh.point(id), J);
            double det = J[0][0];
            if (mesh.dim == 2) det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
            if (mesh.dim == 3)
                det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                      J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                      J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
            if (det <= 0) throw std::domain_error("displacement too large: Jacobian not orientation-preserving");
        }
    }

    static Diffeomorphism identity(const TorusMesh& mesh) {
        return Diffeomorphism(mesh, MeshVectorField(mesh));
    }

    const TorusMesh& mesh() const { return mesh_; }
    bool is_identity() const { return disp_.empty(); }

    std::array<double, 3> apply(const std::array<double, 3>& x) const {
        std::array<double, 3> y = x;
        for (int c = 0; c < mesh_.dim; ++c) {
            y[c] = x[c] + disp_[c].value(x);
            y[c] -= std::floor(y[c]);
        }
        return y;
    }

    /// J^rho_mu = d f^rho / d x^mu at x.
    void jacobian(const std::array<double, 3>& x, double J[3][3]) const {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) J[r][c] = (r == c) ? 1.0 : 0.0;
        for (int r = 0; r < mesh_.dim; ++r)
            for (int c = 0; c < mesh_.dim; ++c) J[r][c] += disp_[r].derivative(x, c);
    }

private:
    TorusMesh mesh_;
    std::vector<SpectralInterpolant> disp_;
};

}  // namespace gencov
