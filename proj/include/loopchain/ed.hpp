#pragma once

// Dense exact diagonalization of the singlet-projector chain.
//
// Local basis: digit m in [0, q) is the S3 eigenvalue S - m. A chain state is the
// base-q number whose most significant digit is site index 0.
// S2 is imaginary in this basis, so chain operators use the real matrix
// A = i S2 = (S+ - S-) / 2 and S2 (x) S2 = -A (x) A.

#include "chain.hpp"
#include "error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace loopchain {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

struct SpinMatrices {
    CMatrix S1, S2, S3;
    Matrix R1, A, R3;  // S1, i S2, S3 as real matrices
};

inline SpinMatrices spin_matrices(SpinWeight w) {
    const int q = w.q();
    const double S = w.spin();
    Matrix plus = Matrix::Zero(q, q);
    Matrix s3 = Matrix::Zero(q, q);
    for (int m = 0; m < q; ++m) {
        const double s = S - m;
        s3(m, m) = s;
        // S+ |s> = sqrt(S(S+1) - s(s+1)) |s+1>, and s+1 has digit m-1
        if (m > 0) plus(m - 1, m) = std::sqrt(S * (S + 1.0) - s * (s + 1.0));
    }
    const Matrix minus = plus.transpose();
    SpinMatrices out;
    out.R1 = 0.5 * (plus + minus);
    out.A = 0.5 * (plus - minus);
    out.R3 = s3;
    out.S1 = out.R1.cast<std::complex<double>>();
    out.S2 = (std::complex<double>(0.0, -1.0) * out.A.cast<std::complex<double>>());
    out.S3 = out.R3.cast<std::complex<double>>();
    return out;
}

/// Two-site singlet projector, dimension q^2, index a*q + c.
inline Matrix singlet_projector(int q) {
    if (q < 2) throw Error(ErrorKind::invalid_parameter, "q must be >= 2");
    Matrix P = Matrix::Zero(q * q, q * q);
    for (int ma = 0; ma < q; ++ma) {
        for (int mb = 0; mb < q; ++mb) {
            const double sign = ((mb - ma) % 2 == 0) ? 1.0 : -1.0;
            P(ma * q + (q - 1 - ma), mb * q + (q - 1 - mb)) = sign / q;
        }
    }
    return P;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i) {
        for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
    return out;
}

/// Two-site S_x . S_y (real).
inline Matrix spin_dot(SpinWeight w) {
    const auto s = spin_matrices(w);
    return kron(s.R1, s.R1) - kron(s.A, s.A) + kron(s.R3, s.R3);
}

struct IdentityCheck {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed() const { return residual <= tolerance; }
};

/// Polynomial in S.S that equals the singlet projector for 2S in {1, 2, 3}.
inline Matrix projector_polynomial(SpinWeight w) {
    const Matrix X = spin_dot(w);
    const Matrix I = Matrix::Identity(X.rows(), X.cols());
    switch (w.twice_s()) {
        case 1: return -X + 0.25 * I;
        case 2: return (X * X) / 3.0 - I / 3.0;
        case 3: {
            const Matrix X2 = X * X;
            return -(X2 * X) / 18.0 - 5.0 / 72.0 * X2 + 31.0 / 96.0 * X + 33.0 / 128.0 * I;
        }
        default: throw Error(ErrorKind::invalid_parameter, "polynomial identity known only for S in {1/2, 1, 3/2}");
    }
}

inline std::string spin_label(SpinWeight w) {
    return w.twice_s() % 2 == 0 ? std::to_string(w.twice_s() / 2) : std::to_string(w.twice_s()) + "/2";
}

/// Max-norm residual of P = polynomial(S.S), optionally against a caller-supplied projector.
inline IdentityCheck polynomial_identity(SpinWeight w, const Matrix* projector = nullptr) {
    const Matrix P = projector ? *projector : singlet_projector(w.q());
    IdentityCheck c;
    c.name = "polynomial-identity-S=" + spin_label(w);
    c.tolerance = 1e-10;
    c.residual = (P - projector_polynomial(w)).cwiseAbs().maxCoeff();
    return c;
}

inline std::vector<IdentityCheck> verify_polynomial_identities() {
    std::vector<IdentityCheck> out;
    for (int t : {1, 2, 3}) out.push_back(polynomial_identity(SpinWeight(t)));
    return out;
}

/// [S1,S2] = i S3 (and cyclic) and the Casimir identity.
inline std::vector<IdentityCheck> verify_spin_algebra(SpinWeight w) {
    const auto s = spin_matrices(w);
    const std::complex<double> I(0.0, 1.0);
    auto comm = [](const CMatrix& a, const CMatrix& b) -> CMatrix { return a * b - b * a; };
    const std::string tag = "S=" + spin_label(w);
    std::vector<IdentityCheck> out;
    out.push_back({"commutator-12-" + tag, (comm(s.S1, s.S2) - I * s.S3).cwiseAbs().maxCoeff(), 1e-12});
    out.push_back({"commutator-23-" + tag, (comm(s.S2, s.S3) - I * s.S1).cwiseAbs().maxCoeff(), 1e-12});
    out.push_back({"commutator-31-" + tag, (comm(s.S3, s.S1) - I * s.S2).cwiseAbs().maxCoeff(), 1e-12});
    const CMatrix cas = s.S1 * s.S1 + s.S2 * s.S2 + s.S3 * s.S3;
    const CMatrix target = w.casimir() * CMatrix::Identity(w.q(), w.q());
    out.push_back({"casimir-" + tag, (cas - target).cwiseAbs().maxCoeff(), 1e-12});
    return out;
}

/// Dimension q^(2 ell), or too-large-instance beyond `budget`.
inline long chain_dimension(int ell, int q, long budget = 4096) {
    long dim = 1;
    for (int i = 0; i < 2 * ell; ++i) {
        dim *= q;
        if (dim > budget) throw Error(ErrorKind::too_large_instance, "chain Hilbert space exceeds the dense budget");
    }
    return dim;
}

/// Embeds a one-site operator at `site` of an m-site chain.
inline Matrix embed_site(const Matrix& op, int site, int num_sites) {
    const long q = op.rows();
    long left = 1, right = 1;
    for (int i = 0; i < site; ++i) left *= q;
    for (int i = site + 1; i < num_sites; ++i) right *= q;
    const long dim = left * q * right;
    Matrix out = Matrix::Zero(dim, dim);
    for (long l = 0; l < left; ++l) {
        for (long a = 0; a < q; ++a) {
            for (long b = 0; b < q; ++b) {
                const double v = op(a, b);
                if (v == 0.0) continue;
                for (long r = 0; r < right; ++r) out((l * q + a) * right + r, (l * q + b) * right + r) = v;
            }
        }
    }
    return out;
}

/// Embeds a two-site operator on sites (site, site + 1).
inline Matrix embed_bond(const Matrix& op, int site, int num_sites) {
    const long q = std::lround(std::sqrt(static_cast<double>(op.rows())));
    long left = 1, right = 1;
    for (int i = 0; i < site; ++i) left *= q;
    for (int i = site + 2; i < num_sites; ++i) right *= q;
    const long d2 = q * q;
    const long dim = left * d2 * right;
    Matrix out = Matrix::Zero(dim, dim);
    for (long l = 0; l < left; ++l) {
        for (long a = 0; a < d2; ++a) {
            for (long b = 0; b < d2; ++b) {
                const double v = op(a, b);
                if (v == 0.0) continue;
                for (long r = 0; r < right; ++r) out((l * d2 + a) * right + r, (l * d2 + b) * right + r) = v;
            }
        }
    }
    return out;
}

/// P0 on edge `edge` (edge index) of the chain.
inline Matrix bond_projector(int ell, int q, int edge, long budget = 4096) {
    chain_dimension(ell, q, budget);
    return embed_bond(singlet_projector(q), edge, 2 * ell);
}

/// H = -sum_e P0_e.
inline Matrix build_hamiltonian(int ell, int q, long budget = 4096) {
    const long dim = chain_dimension(ell, q, budget);
    ChainGeometry geo(ell);
    const Matrix P = singlet_projector(q);
    Matrix H = Matrix::Zero(dim, dim);
    for (int e = 0; e < geo.num_edges(); ++e) H -= embed_bond(P, e, geo.num_sites());
    return H;
}

/// Total spin component i (0, 1, 2 for S1, A = iS2, S3) as a real chain operator.
inline Matrix total_spin_real(int ell, SpinWeight w, int component) {
    const auto s = spin_matrices(w);
    const Matrix& op = component == 0 ? s.R1 : component == 1 ? s.A : s.R3;
    const int m = 2 * ell;
    Matrix out = embed_site(op, 0, m);
    for (int x = 1; x < m; ++x) out += embed_site(op, x, m);
    return out;
}

inline void require_hermitian(const Matrix& H) {
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::non_hermitian, "operator is not symmetric");
    }
}

/// Full eigendecomposition with Gibbs expectations at any inverse temperature.
class Spectrum {
public:
    explicit Spectrum(const Matrix& H) {
        require_hermitian(H);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(H);
        if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical, "eigensolver failed");
        values_ = solver.eigenvalues();
        vectors_ = solver.eigenvectors();
        residual_ = 0.0;
        for (long k = 0; k < values_.size(); ++k) {
            const double r = (H * vectors_.col(k) - values_(k) * vectors_.col(k)).norm();
            residual_ = std::max(residual_, r);
        }
    }

    const Vector& eigenvalues() const noexcept { return values_; }
    const Matrix& eigenvectors() const noexcept { return vectors_; }
    double max_residual() const noexcept { return residual_; }
    double ground_energy() const { return values_(0); }

    int ground_degeneracy(double tol = 1e-9) const {
        int d = 0;
        while (d < values_.size() && values_(d) - values_(0) <= tol) ++d;
        return d;
    }

    /// Boltzmann weights e^{-beta (E_k - E_0)} / Z.
    Vector weights(double beta_q) const {
        if (beta_q < 0.0) throw Error(ErrorKind::invalid_parameter, "beta_q must be nonnegative");
        Vector w(values_.size());
        for (long k = 0; k < w.size(); ++k) w(k) = std::exp(-beta_q * (values_(k) - values_(0)));
        return w / w.sum();
    }

    Matrix density_matrix(double beta_q) const {
        const Vector w = weights(beta_q);
        return vectors_ * w.asDiagonal() * vectors_.transpose();
    }

    double expectation(const Matrix& observable, double beta_q) const {
        return (density_matrix(beta_q).cwiseProduct(observable.transpose())).sum();
    }

    /// Tr e^{-beta H}.
    double partition_function(double beta_q) const { return (-beta_q * values_.array()).exp().sum(); }

    /// Tr (1 - H/n)^N with N = 2 beta n - 1: the discrete-time partition function.
    double trotter_trace(int beta, int n) const {
        const int N = 2 * beta * n - 1;
        double z = 0.0;
        for (long k = 0; k < values_.size(); ++k) z += std::pow(1.0 - values_(k) / n, N);
        return z;
    }

    /// Tr[O (1 - H/n)^N] / Tr[(1 - H/n)^N].
    double trotter_expectation(const Matrix& observable, int beta, int n) const {
        const int N = 2 * beta * n - 1;
        Vector w(values_.size());
        for (long k = 0; k < w.size(); ++k) w(k) = std::pow(1.0 - values_(k) / n, N);
        const Matrix rho = vectors_ * (w / w.sum()).asDiagonal() * vectors_.transpose();
        return rho.cwiseProduct(observable.transpose()).sum();
    }

private:
    Vector values_;
    Matrix vectors_;
    double residual_ = 0.0;
};

inline double gibbs_expectation(const Matrix& H, const Matrix& observable, double beta_q) {
    return Spectrum(H).expectation(observable, beta_q);
}

/// <S^i_x S^j_y> at inverse temperature beta_q; i, j in {1, 2, 3}; x, y site coordinates.
inline std::complex<double> spin_correlation(const Spectrum& spectrum, int ell, SpinWeight w, int x, int y, int i,
                                             int j, double beta_q) {
    ChainGeometry geo(ell);
    if (!geo.has_site_coord(x) || !geo.has_site_coord(y)) throw Error(ErrorKind::invalid_parameter, "site outside chain");
    if (i < 1 || i > 3 || j < 1 || j > 3) throw Error(ErrorKind::invalid_parameter, "spin component must be 1, 2 or 3");
    const auto s = spin_matrices(w);
    auto real_part = [&](int c) -> const Matrix& { return c == 1 ? s.R1 : c == 2 ? s.A : s.R3; };
    const int m = geo.num_sites();
    const Matrix O = embed_site(real_part(i), geo.site_index(x), m) * embed_site(real_part(j), geo.site_index(y), m);
    // S2 = -i A for each factor
    std::complex<double> phase(1.0, 0.0);
    if (i == 2) phase *= std::complex<double>(0.0, -1.0);
    if (j == 2) phase *= std::complex<double>(0.0, -1.0);
    return phase * spectrum.expectation(O, beta_q);
}

inline std::complex<double> spin_correlation_ed(int ell, int q, int x, int y, int i, int j, double beta_q,
                                                long budget = 4096) {
    const Spectrum spectrum(build_hamiltonian(ell, q, budget));
    return spin_correlation(spectrum, ell, SpinWeight::from_q(q), x, y, i, j, beta_q);
}

}  // namespace loopchain
