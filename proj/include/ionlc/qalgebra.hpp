// qalgebra.hpp: operators and states on truncated tensor-product spaces.
//
// Subsystems are ordered; the first mode of a layout is the most significant
// digit of the composite index (Kronecker convention, kron(A, B) acts as A on
// mode 0 and B on mode 1).

#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ionlc/core.hpp"
#include "ionlc/expm.hpp"

namespace ionlc {

// Conventional slot labels used by the Hamiltonian builders and protocols.
inline constexpr std::string_view kSpin = "spin";
inline constexpr std::string_view kLc = "lc";
inline constexpr std::string_view kMotion = "motion";

struct Mode {
    std::string label;
    std::size_t dim;

    bool operator==(const Mode&) const = default;
};

class ModeLayout {
public:
    ModeLayout() = default;
    ModeLayout(std::initializer_list<Mode> modes) : ModeLayout(std::vector<Mode>(modes)) {}
    explicit ModeLayout(std::vector<Mode> modes) : modes_(std::move(modes)) {
        std::set<std::string> seen;
        for (const auto& m : modes_) {
            require(m.dim >= 1, "ModeLayout: dimension of '" + m.label + "' must be >= 1");
            require(seen.insert(m.label).second, "ModeLayout: duplicate label '" + m.label + "'");
        }
    }

    static ModeLayout single(std::size_t dim, std::string label = "mode") {
        return ModeLayout({Mode{std::move(label), dim}});
    }

    const std::vector<Mode>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }

    std::size_t total_dim() const {
        return std::accumulate(modes_.begin(), modes_.end(), std::size_t{1},
                               [](std::size_t acc, const Mode& m) { return acc * m.dim; });
    }

    bool contains(std::string_view label) const {
        return std::any_of(modes_.begin(), modes_.end(),
                           [&](const Mode& m) { return m.label == label; });
    }

    std::size_t index(std::string_view label) const {
        for (std::size_t k = 0; k < modes_.size(); ++k)
            if (modes_[k].label == label) return k;
        throw InvalidArgument("ModeLayout: no slot labelled '" + std::string(label) + "'");
    }

    std::size_t dim(std::string_view label) const { return modes_[index(label)].dim; }

    // Product of the dimensions of all slots after `slot`.
    std::size_t stride(std::size_t slot) const {
        std::size_t s = 1;
        for (std::size_t k = slot + 1; k < modes_.size(); ++k) s *= modes_[k].dim;
        return s;
    }

    // Composite index of a per-slot digit list.
    std::size_t flat_index(const std::vector<std::size_t>& digits) const {
        require(digits.size() == modes_.size(), "ModeLayout: digit count mismatch");
        std::size_t idx = 0;
        for (std::size_t k = 0; k < modes_.size(); ++k) {
            require(digits[k] < modes_[k].dim, "ModeLayout: digit out of range");
            idx = idx * modes_[k].dim + digits[k];
        }
        return idx;
    }

    std::vector<std::size_t> digits(std::size_t flat) const {
        std::vector<std::size_t> d(modes_.size());
        for (std::size_t k = modes_.size(); k-- > 0;) {
            d[k] = flat % modes_[k].dim;
            flat /= modes_[k].dim;
        }
        return d;
    }

    // Layout restricted to the given labels, in this layout's order.
    ModeLayout subset(const std::vector<std::string>& labels) const {
        std::vector<Mode> kept;
        for (const auto& m : modes_)
            if (std::find(labels.begin(), labels.end(), m.label) != labels.end()) kept.push_back(m);
        require(kept.size() == labels.size(), "ModeLayout::subset: unknown label requested");
        return ModeLayout(std::move(kept));
    }

    bool operator==(const ModeLayout&) const = default;

private:
    std::vector<Mode> modes_;
};

inline std::string describe(const ModeLayout& layout) {
    std::string out = "[";
    for (std::size_t k = 0; k < layout.size(); ++k) {
        if (k) out += ", ";
        out += layout.modes()[k].label + ":" + std::to_string(layout.modes()[k].dim);
    }
    return out + "]";
}

class QOperator {
public:
    QOperator() = default;
    QOperator(ModeLayout layout, Matrix matrix) : layout_(std::move(layout)), matrix_(std::move(matrix)) {
        const auto n = static_cast<Eigen::Index>(layout_.total_dim());
        require(matrix_.rows() == n && matrix_.cols() == n,
                "QOperator: matrix side must equal layout total dimension " + std::to_string(n));
    }

    static QOperator identity(const ModeLayout& layout) {
        const auto n = static_cast<Eigen::Index>(layout.total_dim());
        return {layout, Matrix::Identity(n, n)};
    }
    static QOperator zero(const ModeLayout& layout) {
        const auto n = static_cast<Eigen::Index>(layout.total_dim());
        return {layout, Matrix::Zero(n, n)};
    }

    const ModeLayout& layout() const { return layout_; }
    const Matrix& matrix() const { return matrix_; }
    std::size_t dim() const { return layout_.total_dim(); }

    QOperator adjoint() const { return {layout_, matrix_.adjoint()}; }
    cplx trace() const { return matrix_.trace(); }
    double hermiticity_residual() const { return max_abs(matrix_ - matrix_.adjoint()); }
    double unitarity_residual() const {
        return max_abs(matrix_.adjoint() * matrix_ - Matrix::Identity(matrix_.rows(), matrix_.cols()));
    }

    QOperator& operator+=(const QOperator& o) {
        check_same(o);
        matrix_ += o.matrix_;
        return *this;
    }
    QOperator& operator-=(const QOperator& o) {
        check_same(o);
        matrix_ -= o.matrix_;
        return *this;
    }
    QOperator& operator*=(cplx s) {
        matrix_ *= s;
        return *this;
    }

    friend QOperator operator+(QOperator a, const QOperator& b) { return a += b; }
    friend QOperator operator-(QOperator a, const QOperator& b) { return a -= b; }
    friend QOperator operator*(QOperator a, cplx s) { return a *= s; }
    friend QOperator operator*(cplx s, QOperator a) { return a *= s; }
    friend QOperator operator*(const QOperator& a, const QOperator& b) {
        a.check_same(b);
        return {a.layout_, a.matrix_ * b.matrix_};
    }

private:
    void check_same(const QOperator& o) const {
        if (!(layout_ == o.layout_))
            throw LayoutMismatch("QOperator: layouts differ " + describe(layout_) + " vs " +
                                 describe(o.layout_));
    }

    ModeLayout layout_;
    Matrix matrix_;
};

inline QOperator commutator(const QOperator& a, const QOperator& b) { return a * b - b * a; }

inline QOperator exp(const QOperator& generator) {
    return {generator.layout(), expm(generator.matrix())};
}

// ---------------------------------------------------------------------------
// Single-mode building blocks
// ---------------------------------------------------------------------------

inline QOperator annihilation(std::size_t dim) {
    if (dim < 2) throw InvalidArgument("annihilation: dimension must be >= 2, got " + std::to_string(dim));
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return {ModeLayout::single(dim), a};
}

inline QOperator creation(std::size_t dim) { return annihilation(dim).adjoint(); }

inline QOperator number(std::size_t dim) {
    if (dim < 1) throw InvalidArgument("number: dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return {ModeLayout::single(dim), m};
}

enum class Axis { x, y, z };

inline QOperator pauli(Axis axis) {
    Matrix m(2, 2);
    switch (axis) {
        case Axis::x: m << 0, 1, 1, 0; break;
        case Axis::y: m << 0, -kI, kI, 0; break;
        case Axis::z: m << 1, 0, 0, -1; break;
    }
    return {ModeLayout::single(2), m};
}

// Spin basis: index 0 is |up> (sigma_z = +1), index 1 is |down>.
inline QOperator sigma_plus() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return {ModeLayout::single(2), m};
}
inline QOperator sigma_minus() { return sigma_plus().adjoint(); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

// Lift a single-subsystem operator to `layout`, acting as identity elsewhere.
inline QOperator embed(const QOperator& op, const ModeLayout& layout, std::string_view slot) {
    require(op.layout().size() == 1, "embed: operator must act on a single subsystem");
    const std::size_t k = layout.index(slot);
    if (layout.modes()[k].dim != op.dim())
        throw LayoutMismatch("embed: operator dimension " + std::to_string(op.dim()) +
                             " does not match slot '" + std::string(slot) + "' of dimension " +
                             std::to_string(layout.modes()[k].dim));
    std::size_t before = 1;
    for (std::size_t j = 0; j < k; ++j) before *= layout.modes()[j].dim;
    const std::size_t after = layout.stride(k);
    const auto nb = static_cast<Eigen::Index>(before);
    const auto na = static_cast<Eigen::Index>(after);
    Matrix m = kron(kron(Matrix::Identity(nb, nb), op.matrix()), Matrix::Identity(na, na));
    return {layout, std::move(m)};
}

// Mode operators of `slot` lifted to the composite layout.
inline QOperator lowering(const ModeLayout& layout, std::string_view slot) {
    return embed(annihilation(layout.dim(slot)), layout, slot);
}
inline QOperator number_op(const ModeLayout& layout, std::string_view slot) {
    return embed(number(layout.dim(slot)), layout, slot);
}
inline QOperator pauli_op(Axis axis, const ModeLayout& layout, std::string_view slot = kSpin) {
    return embed(pauli(axis), layout, slot);
}

inline bool displacement_truncated(cplx alpha, std::size_t dim) {
    return std::norm(alpha) > static_cast<double>(dim) / 4.0;
}

inline std::string truncation_warning(cplx alpha, std::size_t dim) {
    return "truncation: |alpha|^2 = " + std::to_string(std::norm(alpha)) + " exceeds dim/4 = " +
           std::to_string(static_cast<double>(dim) / 4.0);
}

// D(alpha) = exp(alpha a^dagger - alpha^* a). Exactly unitary in the truncated
// space because the generator stays anti-Hermitian after truncation.
inline Checked<QOperator> displacement(cplx alpha, std::size_t dim) {
    const QOperator a = annihilation(dim);
    const Matrix gen = alpha * a.matrix().adjoint() - std::conj(alpha) * a.matrix();
    Checked<QOperator> out{QOperator(a.layout(), expm(gen)), {}};
    if (displacement_truncated(alpha, dim)) out.warnings.push_back(truncation_warning(alpha, dim));
    return out;
}

struct Quadratures {
    QOperator x;  // (b + b^dagger)/sqrt2, motion convention
    QOperator p;  // -i (b - b^dagger)/sqrt2
    QOperator q;  // (a + a^dagger)/sqrt2, dimensionless charge
};

inline Quadratures quadratures(std::size_t dim) {
    const Matrix a = annihilation(dim).matrix();
    const Matrix ad = a.adjoint();
    const double s = 1.0 / std::sqrt(2.0);
    const auto layout = ModeLayout::single(dim);
    Matrix x = s * (a + ad);
    Matrix p = -kI * s * (a - ad);
    return {QOperator(layout, x), QOperator(layout, p), QOperator(layout, x)};
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

enum class StateKind { pure, mixed };

class QState {
public:
    QState() = default;

    static QState pure(ModeLayout layout, Vector psi) {
        require(static_cast<std::size_t>(psi.size()) == layout.total_dim(),
                "QState: vector length must equal layout total dimension");
        return QState(std::move(layout), std::move(psi));
    }
    static QState mixed(ModeLayout layout, Matrix rho) {
        const auto n = static_cast<Eigen::Index>(layout.total_dim());
        require(rho.rows() == n && rho.cols() == n, "QState: density side must equal layout dimension");
        return QState(std::move(layout), std::move(rho));
    }

    StateKind kind() const { return std::holds_alternative<Vector>(data_) ? StateKind::pure : StateKind::mixed; }
    bool is_pure() const { return kind() == StateKind::pure; }
    const ModeLayout& layout() const { return layout_; }
    std::size_t dim() const { return layout_.total_dim(); }

    const Vector& vector() const {
        if (!is_pure()) throw InvalidArgument("QState::vector: state is mixed");
        return std::get<Vector>(data_);
    }
    Matrix density() const {
        if (is_pure()) {
            const auto& v = std::get<Vector>(data_);
            return v * v.adjoint();
        }
        return std::get<Matrix>(data_);
    }
    const Matrix& density_ref() const {
        if (is_pure()) throw InvalidArgument("QState::density_ref: state is pure");
        return std::get<Matrix>(data_);
    }

    QState as_mixed() const { return mixed(layout_, density()); }

    // Returns human-readable violations of the state invariants, empty if valid.
    std::vector<std::string> validate(double norm_tol = 1e-9, double herm_tol = 1e-12,
                                      double eig_floor = -1e-10) const {
        std::vector<std::string> issues;
        if (is_pure()) {
            const double n = vector().norm();
            if (std::abs(n - 1.0) > norm_tol) issues.push_back("norm " + std::to_string(n));
            return issues;
        }
        const Matrix& rho = density_ref();
        const double tr_err = std::abs(rho.trace() - 1.0);
        if (tr_err > norm_tol) issues.push_back("trace error " + std::to_string(tr_err));
        const double herm = max_abs(rho - rho.adjoint());
        if (herm > herm_tol) issues.push_back("hermiticity residual " + std::to_string(herm));
        const double lmin = min_eigenvalue();
        if (lmin < eig_floor) issues.push_back("min eigenvalue " + std::to_string(lmin));
        return issues;
    }

    double min_eigenvalue() const {
        if (is_pure()) return 0.0;
        const Matrix& rho = density_ref();
        const Matrix h = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

private:
    QState(ModeLayout layout, Vector v) : layout_(std::move(layout)), data_(std::move(v)) {}
    QState(ModeLayout layout, Matrix m) : layout_(std::move(layout)), data_(std::move(m)) {}

    ModeLayout layout_;
    std::variant<Vector, Matrix> data_;
};

inline Vector basis_vector(std::size_t dim, std::size_t k) {
    require(k < dim, "basis_vector: index out of range");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return v;
}

inline QState fock_state(std::size_t n, std::size_t dim) {
    require(dim >= 1, "fock_state: dimension must be >= 1");
    require(n < dim, "fock_state: level " + std::to_string(n) + " outside truncation " + std::to_string(dim));
    return QState::pure(ModeLayout::single(dim), basis_vector(dim, n));
}

// Truncated coherent-state series, renormalized; the discarded tail weight is
// reported as a warning when it exceeds 1e-9.
inline Checked<QState> coherent_state(cplx alpha, std::size_t dim) {
    require(dim >= 1, "coherent_state: dimension must be >= 1");
    Vector v(static_cast<Eigen::Index>(dim));
    cplx c = std::exp(-0.5 * std::norm(alpha));
    for (std::size_t n = 0; n < dim; ++n) {
        v(static_cast<Eigen::Index>(n)) = c;
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    const double kept = v.squaredNorm();
    Checked<QState> out{QState::pure(ModeLayout::single(dim), v / std::sqrt(kept)), {}};
    if (1.0 - kept > 1e-9 || displacement_truncated(alpha, dim))
        out.warnings.push_back("truncation: coherent tail weight " + std::to_string(1.0 - kept));
    return out;
}

// N (|alpha> + e^{i phi} |-alpha>)
inline Checked<QState> cat_state(cplx alpha, double phi, std::size_t dim) {
    auto plus = coherent_state(alpha, dim);
    auto minus = coherent_state(-alpha, dim);
    Vector v = plus.value.vector() + std::exp(kI * phi) * minus.value.vector();
    const double n = v.norm();
    if (n < 1e-300) throw InvalidArgument("cat_state: superposition vanishes for these parameters");
    Checked<QState> out{QState::pure(ModeLayout::single(dim), v / n), plus.warnings};
    return out;
}

// Product of per-slot pure factors, in layout order.
inline QState product_state(const ModeLayout& layout, const std::vector<Vector>& factors) {
    require(factors.size() == layout.size(), "product_state: one factor per slot required");
    Vector v = Vector::Ones(1);
    for (std::size_t k = 0; k < factors.size(); ++k) {
        require(static_cast<std::size_t>(factors[k].size()) == layout.modes()[k].dim,
                "product_state: factor dimension mismatch at slot '" + layout.modes()[k].label + "'");
        v = kron(v, factors[k]);
    }
    return QState::pure(layout, v);
}

inline cplx expectation(const QOperator& op, const QState& state) {
    if (!(op.layout() == state.layout())) throw LayoutMismatch("expectation: layout mismatch");
    if (state.is_pure()) return state.vector().dot(op.matrix() * state.vector());
    return (op.matrix() * state.density_ref()).trace();
}

// Reduced density matrix on `keep` (labels, any order; result uses layout order).
inline QState partial_trace(const QState& state, const std::vector<std::string>& keep) {
    const ModeLayout& layout = state.layout();
    const ModeLayout kept = layout.subset(keep);
    const std::size_t n = layout.total_dim();
    std::vector<bool> is_kept(layout.size());
    for (std::size_t k = 0; k < layout.size(); ++k)
        is_kept[k] = std::find(keep.begin(), keep.end(), layout.modes()[k].label) != keep.end();

    std::vector<std::size_t> kidx(n), tidx(n);
    std::size_t traced_dim = 1;
    for (std::size_t k = 0; k < layout.size(); ++k)
        if (!is_kept[k]) traced_dim *= layout.modes()[k].dim;
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = layout.digits(i);
        std::size_t ki = 0, ti = 0;
        for (std::size_t k = 0; k < layout.size(); ++k) {
            if (is_kept[k])
                ki = ki * layout.modes()[k].dim + d[k];
            else
                ti = ti * layout.modes()[k].dim + d[k];
        }
        kidx[i] = ki;
        tidx[i] = ti;
    }
    const auto kd = static_cast<Eigen::Index>(kept.total_dim());
    if (state.is_pure()) {
        Matrix psi = Matrix::Zero(kd, static_cast<Eigen::Index>(traced_dim));
        const Vector& v = state.vector();
        for (std::size_t i = 0; i < n; ++i)
            psi(static_cast<Eigen::Index>(kidx[i]), static_cast<Eigen::Index>(tidx[i])) = v(static_cast<Eigen::Index>(i));
        return QState::mixed(kept, psi * psi.adjoint());
    }
    const Matrix& rho = state.density_ref();
    Matrix red = Matrix::Zero(kd, kd);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (tidx[i] == tidx[j])
                red(static_cast<Eigen::Index>(kidx[i]), static_cast<Eigen::Index>(kidx[j])) +=
                    rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return QState::mixed(kept, red);
}

inline double purity(const QState& state) {
    if (state.is_pure()) return state.vector().squaredNorm() * state.vector().squaredNorm();
    const Matrix& rho = state.density_ref();
    return (rho * rho).trace().real();
}

}  // namespace ionlc
