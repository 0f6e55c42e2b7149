// hamiltonians.hpp: lab, interaction-frame, RWA, MS and JC Hamiltonians,
// frame unitary, and the classical / quasienergy machinery of the driven LC.
//
// Units: whatever DeviceParams carries (SI or scaled); all phases are
// dimensionless products of those.
//
// Lab frame: the capacitance modulation C = C0 (1 + eps sin nu t), eps = 2 eta/3,
// lowers the LC frequency and raises the coupling:
//   H = w_lc (1 - eps sin nu t) A†A + w_i B†B + g0 (1 + eps sin nu t)(A + A†)(B + B†).
// The frame unitary U(t) = exp[i w_lc (t + eps cos(nu t)/nu) A†A + i w_i t B†B]
// maps it exactly onto
//   H_I = g0 [e^{-i w_lc t} kappa(t) a + h.c.](b e^{-i w_i t} + h.c.),
//   kappa(t) = (1 + eps sin nu t) exp(-i beta cos nu t),  beta = eps w_lc / nu,
// whose first-order expansion is 1 + eps (sin nu t - i (w_lc/nu) cos nu t).

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "ionlc/device.hpp"
#include "ionlc/qalgebra.hpp"

namespace ionlc {

enum class Frame { lab, interaction, rotating };

inline const char* frame_name(Frame f) {
    switch (f) {
        case Frame::lab: return "lab";
        case Frame::interaction: return "interaction";
        case Frame::rotating: return "rotating";
    }
    return "?";
}

using Envelope = std::function<cplx(double)>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

inline SparseMatrix to_sparse(const Matrix& m) { return m.sparseView(cplx(0.0), 0.0); }

struct HamiltonianTerm {
    QOperator op;
    Envelope envelope;  // empty means constant 1
    std::string name;
    SparseMatrix sparse;  // same matrix, for products with states
    bool use_sparse = false;
};

class TimeDependentHamiltonian {
public:
    TimeDependentHamiltonian() = default;
    TimeDependentHamiltonian(ModeLayout layout, Frame frame) : layout_(std::move(layout)), frame_(frame) {}

    static TimeDependentHamiltonian constant(const QOperator& h, Frame frame = Frame::rotating,
                                             std::string name = "H") {
        TimeDependentHamiltonian out(h.layout(), frame);
        out.add(h, {}, std::move(name));
        return out;
    }

    void add(QOperator op, Envelope envelope = {}, std::string name = {}) {
        if (!(op.layout() == layout_))
            throw LayoutMismatch("TimeDependentHamiltonian: term layout " + describe(op.layout()) +
                                 " differs from " + describe(layout_));
        SparseMatrix sp = to_sparse(op.matrix());
        const bool thin = static_cast<double>(sp.nonZeros()) < 0.3 * static_cast<double>(op.matrix().size());
        terms_.push_back({std::move(op), std::move(envelope), std::move(name), std::move(sp), thin});
    }

    // Adds f X + conj(f) X† so the sum stays Hermitian.
    void add_hermitian_pair(const QOperator& op, const Envelope& envelope, const std::string& name) {
        add(op, envelope, name);
        Envelope conj_env;
        if (envelope) conj_env = [envelope](double t) { return std::conj(envelope(t)); };
        add(op.adjoint(), conj_env, name + "^dag");
    }

    void warn(std::string message) { warnings_.push_back(std::move(message)); }

    const ModeLayout& layout() const { return layout_; }
    Frame frame() const { return frame_; }
    const std::vector<HamiltonianTerm>& terms() const { return terms_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    std::size_t dim() const { return layout_.total_dim(); }

    bool is_static() const {
        for (const auto& t : terms_)
            if (t.envelope) return false;
        return true;
    }

    Matrix at(double t) const {
        const auto n = static_cast<Eigen::Index>(dim());
        Matrix h = Matrix::Zero(n, n);
        for (const auto& term : terms_) {
            if (term.envelope)
                h.noalias() += term.envelope(t) * term.op.matrix();
            else
                h += term.op.matrix();
        }
        return h;
    }

    QOperator operator()(double t) const { return {layout_, at(t)}; }

    // H(t) x without assembling H(t).
    Matrix apply(double t, const Matrix& x) const {
        Matrix out = Matrix::Zero(x.rows(), x.cols());
        for (const auto& term : terms_) {
            const cplx f = term.envelope ? term.envelope(t) : cplx(1.0);
            if (term.use_sparse)
                out.noalias() += f * (term.sparse * x);
            else
                out.noalias() += f * term.op.matrix() * x;
        }
        return out;
    }

    double hermiticity_residual(double t) const { return max_abs(at(t) - at(t).adjoint()); }

private:
    ModeLayout layout_;
    Frame frame_ = Frame::rotating;
    std::vector<HamiltonianTerm> terms_;
    std::vector<std::string> warnings_;
};

namespace detail {
inline void require_slots(const ModeLayout& layout, std::initializer_list<std::string_view> slots,
                          const char* who) {
    for (auto s : slots)
        if (!layout.contains(s))
            throw InvalidArgument(std::string(who) + ": layout " + describe(layout) + " lacks slot '" +
                                  std::string(s) + "'");
}
}  // namespace detail

inline double modulation_depth(double eta) { return 2.0 * eta / 3.0; }

// kappa(t) of the interaction frame; `exact` selects the closed form, otherwise
// the O(eta) expansion.
inline cplx kappa(const DeviceParams& p, double t, bool exact = true) {
    const double eps = modulation_depth(p.eta);
    const double s = std::sin(p.nu * t), c = std::cos(p.nu * t);
    if (exact) return (1.0 + eps * s) * std::exp(-kI * (eps * p.omega_lc / p.nu) * c);
    return 1.0 + eps * (s - kI * (p.omega_lc / p.nu) * c);
}

inline TimeDependentHamiltonian lab_frame_hamiltonian(const DeviceParams& p, const ModeLayout& layout) {
    detail::require_slots(layout, {kLc, kMotion}, "lab_frame_hamiltonian");
    const double eps = modulation_depth(p.eta);
    const QOperator A = lowering(layout, kLc);
    const QOperator B = lowering(layout, kMotion);
    const double nu = p.nu;
    TimeDependentHamiltonian h(layout, Frame::lab);
    h.add(p.omega_lc * number_op(layout, kLc), [eps, nu](double t) { return cplx(1.0 - eps * std::sin(nu * t)); },
          "w_lc A†A");
    h.add(p.omega_i * number_op(layout, kMotion), {}, "w_i B†B");
    h.add(p.g0 * ((A + A.adjoint()) * (B + B.adjoint())),
          [eps, nu](double t) { return cplx(1.0 + eps * std::sin(nu * t)); }, "g0 (A+A†)(B+B†)");
    return h;
}

// Exact image of the lab frame under frame_unitary.
inline TimeDependentHamiltonian interaction_frame_hamiltonian(const DeviceParams& p, const ModeLayout& layout,
                                                              bool exact_kappa = true) {
    detail::require_slots(layout, {kLc, kMotion}, "interaction_frame_hamiltonian");
    const QOperator a = lowering(layout, kLc);
    const QOperator b = lowering(layout, kMotion);
    const DeviceParams q = p;
    auto drive = [q, exact_kappa](double t) { return q.g0 * std::exp(-kI * q.omega_lc * t) * kappa(q, t, exact_kappa); };
    const double wi = p.omega_i;
    TimeDependentHamiltonian h(layout, Frame::interaction);
    h.add_hermitian_pair(a * b.adjoint(), [drive, wi](double t) { return drive(t) * std::exp(kI * wi * t); }, "a b†");
    h.add_hermitian_pair(a * b, [drive, wi](double t) { return drive(t) * std::exp(-kI * wi * t); }, "a b");
    return h;
}

// U(t) taking lab-frame states to interaction-frame states.
inline QOperator frame_unitary(const DeviceParams& p, double t, const ModeLayout& layout) {
    detail::require_slots(layout, {kLc, kMotion}, "frame_unitary");
    const double eps = modulation_depth(p.eta);
    const double theta_lc = p.omega_lc * (t + eps / p.nu * std::cos(p.nu * t));
    const double theta_i = p.omega_i * t;
    const std::size_t n = layout.total_dim();
    const std::size_t k_lc = layout.index(kLc), k_m = layout.index(kMotion);
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = layout.digits(i);
        const double phase = theta_lc * static_cast<double>(d[k_lc]) + theta_i * static_cast<double>(d[k_m]);
        u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::exp(kI * phase);
    }
    return {layout, u};
}

// Interaction-frame propagator from a lab-frame one: U(t) U_lab(t, 0) U(0)†.
inline QOperator to_interaction_frame(const DeviceParams& p, const QOperator& u_lab, double t) {
    return frame_unitary(p, t, u_lab.layout()) * u_lab * frame_unitary(p, 0.0, u_lab.layout()).adjoint();
}

// H = g (e^{i phase} e^{-i Delta t} a b† + h.c.). phase = 0 is the real-positive
// convention; the interaction frame's resonant term corresponds to phase = -pi/2.
inline TimeDependentHamiltonian rwa_hamiltonian(double g, double Delta, const ModeLayout& layout,
                                                double phase = 0.0) {
    detail::require_slots(layout, {kLc, kMotion}, "rwa_hamiltonian");
    const QOperator abd = lowering(layout, kLc) * lowering(layout, kMotion).adjoint();
    TimeDependentHamiltonian h(layout, Frame::rotating);
    if (Delta == 0.0) {
        const cplx c = g * std::exp(kI * phase);
        h.add(c * abd + std::conj(c) * abd.adjoint(), {}, "g a b† + h.c.");
        return h;
    }
    h.add_hermitian_pair(g * abd, [phase, Delta](double t) { return std::exp(kI * (phase - Delta * t)); }, "g a b†");
    return h;
}

// Coupling operator of the MS scheme: M = g q + (Omega0/4) sigma_x.
inline QOperator ms_coupling_operator(const DeviceParams& p, const ModeLayout& layout) {
    detail::require_slots(layout, {kSpin, kLc, kMotion}, "ms_coupling_operator");
    const QOperator a = lowering(layout, kLc);
    const QOperator q = (1.0 / std::sqrt(2.0)) * (a + a.adjoint());
    return p.g() * q + (p.Omega0 / 4.0) * pauli_op(Axis::x, layout);
}

// H = sqrt2 M (x cos dt + p sin dt) = M (b e^{-i delta t} + b† e^{i delta t}).
inline TimeDependentHamiltonian ms_hamiltonian(const DeviceParams& p, double delta, const ModeLayout& layout) {
    require(delta != 0.0, "ms_hamiltonian: delta must be nonzero");
    const QOperator M = ms_coupling_operator(p, layout);
    const QOperator b = lowering(layout, kMotion);
    TimeDependentHamiltonian h(layout, Frame::rotating);
    h.add_hermitian_pair(M * b, [delta](double t) { return std::exp(-kI * delta * t); }, "M b");
    const double ad = std::abs(delta);
    if (p.Omega0 > ad / 3.0)
        h.warn("regime: Omega0 = " + std::to_string(p.Omega0) + " is not << |delta| = " + std::to_string(ad));
    if (ad > p.omega_i / 3.0)
        h.warn("regime: |delta| = " + std::to_string(ad) + " is not << omega_i = " + std::to_string(p.omega_i));
    return h;
}

// Blue-free Jaynes-Cummings coupling (Omega0/2)(b sigma+ + b† sigma-).
inline TimeDependentHamiltonian jc_hamiltonian(double Omega0, const ModeLayout& layout) {
    detail::require_slots(layout, {kSpin, kMotion}, "jc_hamiltonian");
    const QOperator x = lowering(layout, kMotion) * embed(sigma_plus(), layout, kSpin);
    TimeDependentHamiltonian h(layout, Frame::rotating);
    h.add((Omega0 / 2.0) * (x + x.adjoint()), {}, "JC");
    return h;
}

// ---------------------------------------------------------------------------
// Classical solutions of q'' = -w^2 (1 - eta sin nu t) q
// ---------------------------------------------------------------------------

class ClassicalSolution {
public:
    enum class Form {
        consistent,  // first-order solution with exact sideband frequencies w +- nu
        near_resonant  // nu + w ~ 2w folded in: e^{+-iwt} - (eta/6)(e^{+-2iwt} + 3 e^{-+i(nu-w)t})
    };

    ClassicalSolution(double eta, double omega, double nu, Form form = Form::consistent)
        : eta_(eta), omega_(omega), nu_(nu), form_(form) {
        require(eta >= 0.0 && eta < 1.0, "ClassicalSolution: eta must lie in [0, 1)");
        require(omega > 0.0 && nu > 0.0, "ClassicalSolution: frequencies must be positive");
        const double w2 = omega * omega;
        const cplx half = w2 / (2.0 * kI);
        a_up_ = half / (w2 - (omega + nu) * (omega + nu));
        a_down_ = -half / (w2 - (omega - nu) * (omega - nu));
    }

    double eta() const { return eta_; }
    double omega() const { return omega_; }
    double nu() const { return nu_; }
    Form form() const { return form_; }

    cplx q_plus(double t) const {
        const cplx carrier = std::exp(kI * omega_ * t);
        if (form_ == Form::near_resonant)
            return carrier - eta_ / 6.0 * (std::exp(2.0 * kI * omega_ * t) + 3.0 * std::exp(-kI * (nu_ - omega_) * t));
        return carrier + eta_ * first_order(t);
    }
    cplx q_minus(double t) const { return std::conj(q_plus(t)); }

    // q'' + w^2 (1 - eta sin nu t) q evaluated with a centred second difference.
    cplx residual(double t, double step) const {
        const cplx qdd = (q_plus(t + step) - 2.0 * q_plus(t) + q_plus(t - step)) / (step * step);
        return qdd + omega_ * omega_ * (1.0 - eta_ * std::sin(nu_ * t)) * q_plus(t);
    }

    // Max |residual| over [0, span] on `samples` points.
    double max_residual(double span, std::size_t samples = 20000) const {
        const double step = 1e-3 / omega_;
        double worst = 0.0;
        for (std::size_t k = 0; k <= samples; ++k) {
            const double t = span * static_cast<double>(k) / static_cast<double>(samples);
            worst = std::max(worst, std::abs(residual(t, step)));
        }
        return worst;
    }

private:
    cplx first_order(double t) const {
        return a_up_ * std::exp(kI * (omega_ + nu_) * t) + a_down_ * std::exp(kI * (omega_ - nu_) * t);
    }

    double eta_, omega_, nu_;
    Form form_;
    cplx a_up_, a_down_;
};

inline ClassicalSolution classical_solutions(double eta, double omega, double nu,
                                             ClassicalSolution::Form form = ClassicalSolution::Form::consistent) {
    return ClassicalSolution(eta, omega, nu, form);
}

// Q(t) = (1 - eta/3 sin nu t) q0 [A(t) + A†(t)],  A(t) = e^{-iwt}(1 - 2/3 i eta sin nu t) A.
inline QOperator quasienergy_charge_operator(const DeviceParams& p, double t, const ModeLayout& layout) {
    detail::require_slots(layout, {kLc}, "quasienergy_charge_operator");
    const double s = std::sin(p.nu * t);
    const cplx c = std::exp(-kI * p.omega_lc * t) * (1.0 - 2.0 / 3.0 * kI * p.eta * s);
    const QOperator At = c * lowering(layout, kLc);
    return ((1.0 - p.eta / 3.0 * s) * p.q0) * (At + At.adjoint());
}

}  // namespace ionlc
