// dynamics.hpp: Schrödinger and Lindblad evolution, propagators, fidelities
// and small fitting utilities.
//
// The integrator is Dormand-Prince 5(4) with FSAL, PI step control and the
// 4th-order continuous extension for sampling between steps.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ionlc/hamiltonians.hpp"
#include "ionlc/qalgebra.hpp"

namespace ionlc {

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0.0;
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double first_step = 0.0;  // 0 = automatic
    double max_step = 0.0;    // 0 = unbounded
    std::size_t max_steps = 50'000'000;
};

namespace detail {

// Dormand-Prince tableau.
struct DP5 {
    static constexpr double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
    static constexpr double a21 = 1. / 5;
    static constexpr double a31 = 3. / 40, a32 = 9. / 40;
    static constexpr double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
    static constexpr double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561, a54 = -212. / 729;
    static constexpr double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176,
                            a65 = -5103. / 18656;
    static constexpr double a71 = 35. / 384, a73 = 500. / 1113, a74 = 125. / 192, a75 = -2187. / 6784,
                            a76 = 11. / 84;
    static constexpr double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920, e5 = -17253. / 339200,
                            e6 = 22. / 525, e7 = -1. / 40;
    static constexpr double d1 = -12715105075. / 11282082432., d3 = 87487479700. / 32700410799.,
                            d4 = -10690763975. / 1880347072., d5 = 701980252875. / 199316789632.,
                            d6 = -1453857185. / 822651844., d7 = 69997945. / 29380423.;
};

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1. `on_step(t_old, t_new, dense)` is
// called after each accepted step with an interpolator dense(t) valid in
// [t_old, t_new]. State is any Eigen complex dense type.
template <class State, class Rhs, class OnStep>
State integrate_dp5(Rhs&& f, State y, double t0, double t1, const IntegratorOptions& opt, StepStats& stats,
                    OnStep&& on_step) {
    using T = detail::DP5;
    if (t1 == t0) return y;
    require(t1 > t0, "integrate_dp5: t1 must exceed t0");
    const double span = t1 - t0;

    auto err_norm = [&](const State& e, const State& y0, const State& y1) {
        double acc = 0.0;
        const auto n = e.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
            const double r = std::abs(e.data()[i]) / sc;
            acc += r * r;
        }
        return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
    };

    State k1 = f(t0, y);
    double h = opt.first_step;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic.
        const double d0 = err_norm(y, y, y), d1 = err_norm(k1, y, y);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        State y1 = y + h0 * k1;
        State k2 = f(t0 + h0, y1);
        const double d2 = err_norm(State(k2 - k1), y, y) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min({100 * h0, h1, span});
    }
    if (opt.max_step > 0) h = std::min(h, opt.max_step);

    double t = t0;
    double err_prev = 1e-4;
    bool last_rejected = false;
    std::size_t steps = 0;
    while (t < t1) {
        if (++steps > opt.max_steps) throw NumericalFailure("integrator: step budget exhausted", t);
        bool final_step = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            final_step = true;
        }
        if (h < 1e-14 * std::max(std::abs(t), span))
            throw NumericalFailure("integrator: step size underflow at t = " + std::to_string(t), t);

        const State k2 = f(t + T::c2 * h, State(y + h * (T::a21 * k1)));
        const State k3 = f(t + T::c3 * h, State(y + h * (T::a31 * k1 + T::a32 * k2)));
        const State k4 = f(t + T::c4 * h, State(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)));
        const State k5 = f(t + T::c5 * h, State(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4)));
        const State k6 =
            f(t + h, State(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5)));
        State ynew = y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 + T::a76 * k6);
        const State k7 = f(t + h, ynew);
        const State e = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
        const double err = err_norm(e, y, ynew);
        if (!std::isfinite(err)) throw NumericalFailure("integrator: non-finite state", t);

        if (err <= 1.0) {
            const State ydiff = ynew - y;
            const State bspl = h * k1 - ydiff;
            const State r4 = ydiff - h * k7 - bspl;
            const State r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 + T::d6 * k6 + T::d7 * k7);
            const double t_old = t;
            const double t_new = final_step ? t1 : t + h;
            auto dense = [&](double ts) -> State {
                const double th = (ts - t_old) / h;
                const double th1 = 1.0 - th;
                return y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
            };
            on_step(t_old, t_new, dense);
            stats.accepted++;
            stats.min_step = std::min(stats.min_step, h);
            stats.max_step = std::max(stats.max_step, h);
            y = std::move(ynew);
            k1 = k7;
            t = t_new;
            // PI controller (Hairer: beta = 0.04).
            double fac = 0.9 * std::pow(err, -0.7 / 5.0) * std::pow(err_prev, 0.04);
            fac = std::clamp(fac, 0.2, 10.0);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            err_prev = std::max(err, 1e-4);
            last_rejected = false;
        } else {
            stats.rejected++;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            last_rejected = true;
        }
        if (opt.max_step > 0) h = std::min(h, opt.max_step);
    }
    return y;
}

template <class State, class Rhs>
State integrate_dp5(Rhs&& f, State y, double t0, double t1, const IntegratorOptions& opt, StepStats& stats) {
    return integrate_dp5(std::forward<Rhs>(f), std::move(y), t0, t1, opt, stats, [](double, double, auto&&) {});
}

// ---------------------------------------------------------------------------
// Specs and results
// ---------------------------------------------------------------------------

struct CollapseOp {
    QOperator op;
    double rate;
    std::string name;
};

struct Observable {
    std::string name;
    QOperator op;
};

struct EvolutionSpec {
    TimeDependentHamiltonian hamiltonian;
    double t_final = 0.0;
    double tolerance = 1e-10;
    std::vector<CollapseOp> collapse_ops;
    double t_start = 0.0;
    std::vector<double> sample_times;  // absolute times in [t_start, t_start + t_final]
    std::vector<Observable> observables;

    void validate() const {
        require(t_final > 0.0 && std::isfinite(t_final), "EvolutionSpec: t_final must be positive");
        require(tolerance >= 1e-12 && tolerance <= 1e-4, "EvolutionSpec: tolerance must lie in [1e-12, 1e-4]");
        for (const auto& c : collapse_ops) {
            require(c.rate >= 0.0 && std::isfinite(c.rate), "EvolutionSpec: collapse rates must be >= 0");
            if (!(c.op.layout() == hamiltonian.layout()))
                throw LayoutMismatch("EvolutionSpec: collapse operator '" + c.name + "' on a different layout");
        }
        for (const auto& o : observables)
            if (!(o.op.layout() == hamiltonian.layout()))
                throw LayoutMismatch("EvolutionSpec: observable '" + o.name + "' on a different layout");
        for (double s : sample_times)
            require(s >= t_start - 1e-12 * (1 + std::abs(t_start)) && s <= t_start + t_final * (1 + 1e-12),
                    "EvolutionSpec: sample time outside the integration window");
    }

    IntegratorOptions integrator() const {
        IntegratorOptions o;
        o.rtol = tolerance;
        o.atol = tolerance * 1e-2;
        return o;
    }
};

struct TimeSeries {
    std::vector<double> times;
    std::map<std::string, std::vector<double>> columns;
    std::vector<std::string> order;  // column order for emission

    void add_column(const std::string& name) {
        order.push_back(name);
        columns[name];
    }
    const std::vector<double>& column(const std::string& name) const {
        auto it = columns.find(name);
        if (it == columns.end()) throw InvalidArgument("TimeSeries: no column '" + name + "'");
        return it->second;
    }
};

struct SimulationResult {
    QState final_state;
    TimeSeries series;
    StepStats stats;
    double norm_drift = 0.0;         // |‖psi‖ - 1| or |tr rho - 1| at the end
    double hermiticity = 0.0;        // mixed only
    double min_eigenvalue = 0.0;     // mixed only
    double truncation_delta = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

namespace detail {

inline TimeSeries make_series(const EvolutionSpec& spec) {
    TimeSeries s;
    for (const auto& o : spec.observables) s.add_column(o.name);
    s.add_column("norm");
    return s;
}

template <class Sampler>
void sample_into(const EvolutionSpec& spec, std::size_t& next, double t_old, double t_new,
                 Sampler&& sampler) {
    const auto& ts = spec.sample_times;
    while (next < ts.size() && ts[next] <= t_new * (1 + 1e-14) + 1e-300) {
        const double tq = std::clamp(ts[next], t_old, t_new);
        sampler(tq);
        ++next;
    }
}

}  // namespace detail

inline SimulationResult evolve_pure(const EvolutionSpec& spec, const QState& psi0) {
    spec.validate();
    if (!spec.collapse_ops.empty()) throw InvalidArgument("evolve_pure: collapse operators given; use evolve_lindblad");
    if (!psi0.is_pure()) throw InvalidArgument("evolve_pure: initial state must be pure");
    if (!(psi0.layout() == spec.hamiltonian.layout())) throw LayoutMismatch("evolve_pure: state/Hamiltonian layout");
    const auto issues = psi0.validate();
    if (!issues.empty()) throw InvalidArgument("evolve_pure: initial state invalid: " + issues.front());

    const auto& H = spec.hamiltonian;
    auto rhs = [&](double t, const Vector& y) -> Vector { return -kI * H.apply(t, y); };

    SimulationResult res;
    res.series = detail::make_series(spec);
    std::vector<double> sorted = spec.sample_times;
    std::sort(sorted.begin(), sorted.end());
    EvolutionSpec local = spec;
    local.sample_times = sorted;
    std::size_t next = 0;
    auto record = [&](double t, const Vector& v) {
        res.series.times.push_back(t);
        for (const auto& o : spec.observables)
            res.series.columns[o.name].push_back(v.dot(o.op.matrix() * v).real());
        res.series.columns["norm"].push_back(v.norm());
    };
    // Samples at t_start are taken from the initial state directly.
    while (next < sorted.size() && sorted[next] <= spec.t_start) record(sorted[next++], psi0.vector());

    const Vector y = integrate_dp5(
        rhs, Vector(psi0.vector()), spec.t_start, spec.t_start + spec.t_final, spec.integrator(), res.stats,
        [&](double t_old, double t_new, auto&& dense) {
            detail::sample_into(local, next, t_old, t_new, [&](double tq) { record(tq, dense(tq)); });
        });
    res.norm_drift = std::abs(y.norm() - 1.0);
    res.final_state = QState::pure(psi0.layout(), y);
    for (const auto& w : H.warnings()) res.warnings.push_back(w);
    if (res.norm_drift > 1e-9) res.warnings.push_back("norm drift " + std::to_string(res.norm_drift));
    return res;
}

// Lindblad right-hand side, d rho = -i (Heff rho - rho Heff†) + sum L rho L†
// with Heff = H - (i/2) sum L†L. Valid for non-Hermitian rho as well.
class LindbladRhs {
public:
    LindbladRhs(const TimeDependentHamiltonian& h, const std::vector<CollapseOp>& ops) : h_(h) {
        const auto n = static_cast<Eigen::Index>(h.dim());
        Matrix decay = Matrix::Zero(n, n);
        for (const auto& c : ops) {
            if (c.rate == 0.0) continue;
            const Matrix l = std::sqrt(c.rate) * c.op.matrix();
            decay += 0.5 * l.adjoint() * l;
            jumps_.push_back(to_sparse(l));
        }
        decay_ = to_sparse(-kI * decay);
    }

    Matrix operator()(double t, const Matrix& rho) const {
        const Matrix rho_dag = rho.adjoint();
        Matrix x = h_.apply(t, rho);
        x.noalias() += decay_ * rho;
        Matrix y = h_.apply(t, rho_dag);
        y.noalias() += decay_ * rho_dag;
        Matrix out = -kI * (x - y.adjoint());
        for (const auto& l : jumps_) {
            const Matrix z = l * rho_dag;  // (rho L†)†
            out.noalias() += l * Matrix(z.adjoint());
        }
        return out;
    }

private:
    const TimeDependentHamiltonian& h_;
    SparseMatrix decay_;
    std::vector<SparseMatrix> jumps_;
};

inline SimulationResult evolve_lindblad(const EvolutionSpec& spec, const QState& rho0) {
    spec.validate();
    if (!(rho0.layout() == spec.hamiltonian.layout())) throw LayoutMismatch("evolve_lindblad: state/Hamiltonian layout");
    const QState start = rho0.is_pure() ? rho0.as_mixed() : rho0;
    const auto issues = start.validate();
    if (!issues.empty()) throw InvalidArgument("evolve_lindblad: initial state invalid: " + issues.front());

    LindbladRhs rhs(spec.hamiltonian, spec.collapse_ops);
    SimulationResult res;
    res.series = detail::make_series(spec);
    std::vector<double> sorted = spec.sample_times;
    std::sort(sorted.begin(), sorted.end());
    EvolutionSpec local = spec;
    local.sample_times = sorted;
    std::size_t next = 0;
    auto record = [&](double t, const Matrix& r) {
        res.series.times.push_back(t);
        for (const auto& o : spec.observables) res.series.columns[o.name].push_back((o.op.matrix() * r).trace().real());
        res.series.columns["norm"].push_back(r.trace().real());
    };
    while (next < sorted.size() && sorted[next] <= spec.t_start) record(sorted[next++], start.density_ref());

    Matrix rho = integrate_dp5(
        rhs, Matrix(start.density_ref()), spec.t_start, spec.t_start + spec.t_final, spec.integrator(), res.stats,
        [&](double t_old, double t_new, auto&& dense) {
            detail::sample_into(local, next, t_old, t_new, [&](double tq) { record(tq, dense(tq)); });
        });
    res.hermiticity = max_abs(rho - rho.adjoint());
    rho = 0.5 * (rho + rho.adjoint());
    res.final_state = QState::mixed(start.layout(), rho);
    res.norm_drift = std::abs(rho.trace() - 1.0);
    res.min_eigenvalue = res.final_state.min_eigenvalue();
    for (const auto& w : spec.hamiltonian.warnings()) res.warnings.push_back(w);
    if (res.norm_drift > 1e-8) res.warnings.push_back("trace drift " + std::to_string(res.norm_drift));
    if (res.hermiticity > 1e-8) res.warnings.push_back("hermiticity residual " + std::to_string(res.hermiticity));
    if (res.min_eigenvalue < -1e-8) res.warnings.push_back("negative eigenvalue " + std::to_string(res.min_eigenvalue));
    return res;
}

// Applies the channel of a Lindblad evolution to an arbitrary (not necessarily
// positive) operator, e.g. |i><j| for process tomography.
inline Matrix lindblad_map(const TimeDependentHamiltonian& h, const std::vector<CollapseOp>& ops, const Matrix& x,
                           double t0, double t1, double tolerance, StepStats* stats = nullptr) {
    LindbladRhs rhs(h, ops);
    IntegratorOptions o;
    o.rtol = tolerance;
    o.atol = tolerance * 1e-2;
    StepStats local;
    Matrix out = integrate_dp5(rhs, x, t0, t1, o, stats ? *stats : local);
    return out;
}

// Integrates dY/dt = -i H(t) Y for a block of columns (full propagator when
// Y0 = identity).
inline Matrix evolve_columns(const TimeDependentHamiltonian& h, const Matrix& y0, double t0, double t1,
                             double tolerance, StepStats* stats = nullptr) {
    require(y0.rows() == static_cast<Eigen::Index>(h.dim()), "evolve_columns: row count must equal dimension");
    StepStats local;
    if (t1 == t0) return y0;
    if (h.is_static()) return expm(-kI * (t1 - t0) * h.at(0.0)) * y0;
    IntegratorOptions o;
    o.rtol = tolerance;
    o.atol = tolerance * 1e-2;
    auto rhs = [&](double t, const Matrix& y) -> Matrix { return -kI * h.apply(t, y); };
    return integrate_dp5(rhs, y0, t0, t1, o, stats ? *stats : local);
}

inline QOperator evolve_propagator(const TimeDependentHamiltonian& h, double t0, double t1, double tolerance) {
    const auto n = static_cast<Eigen::Index>(h.dim());
    return {h.layout(), evolve_columns(h, Matrix::Identity(n, n), t0, t1, tolerance)};
}

// ---------------------------------------------------------------------------
// Brute-force propagator oracle
// ---------------------------------------------------------------------------

struct PropagatorResult {
    QOperator unitary;
    std::size_t slices;
    double doubling_change;  // max|U(2N) - U(N)|
};

namespace detail {
// Fourth-order commutator-free Magnus step with two Gauss points.
inline Matrix magnus4_product(const TimeDependentHamiltonian& h, double t0, double t1, std::size_t n) {
    const auto dim = static_cast<Eigen::Index>(h.dim());
    Matrix u = Matrix::Identity(dim, dim);
    const double dt = (t1 - t0) / static_cast<double>(n);
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ts = t0 + dt * static_cast<double>(k);
        const Matrix h1 = h.at(ts + c1 * dt), h2 = h.at(ts + c2 * dt);
        const Matrix omega = -kI * dt * 0.5 * (h1 + h2) + (std::sqrt(3.0) / 12.0) * dt * dt * (h2 * h1 - h1 * h2);
        u = expm(omega) * u;
    }
    return u;
}
}  // namespace detail

// Product of slice exponentials, doubling the slice count from n_slices until
// successive results differ by less than `tolerance`.
inline PropagatorResult propagator(const TimeDependentHamiltonian& h, double t_final, std::size_t n_slices,
                                   double tolerance = 1e-8, std::size_t max_slices = 1u << 22, double t_start = 0.0) {
    require(t_final >= 0.0, "propagator: t_final must be >= 0");
    require(n_slices >= 1, "propagator: need at least one slice");
    if (t_final == 0.0) return {QOperator::identity(h.layout()), n_slices, 0.0};
    if (h.is_static()) return {QOperator(h.layout(), expm(-kI * t_final * h.at(0.0))), 1, 0.0};
    Matrix prev = detail::magnus4_product(h, t_start, t_start + t_final, n_slices);
    std::size_t n = n_slices;
    while (true) {
        if (2 * n > max_slices)
            throw NumericalFailure("propagator: slice doubling did not converge below " + std::to_string(tolerance),
                                   t_start + t_final);
        n *= 2;
        Matrix cur = detail::magnus4_product(h, t_start, t_start + t_final, n);
        const double change = max_abs(cur - prev);
        if (change < tolerance) return {QOperator(h.layout(), cur), n, change};
        prev = std::move(cur);
    }
}

// ---------------------------------------------------------------------------
// Figures of merit
// ---------------------------------------------------------------------------

inline Matrix hermitian_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2; |<a|b>|^2 for pure states.
inline double fidelity(const QState& a, const QState& b) {
    if (!(a.layout() == b.layout())) throw LayoutMismatch("fidelity: layouts differ");
    if (a.is_pure() && b.is_pure()) return std::norm(a.vector().dot(b.vector()));
    if (a.is_pure()) return a.vector().dot(b.density() * a.vector()).real();
    if (b.is_pure()) return b.vector().dot(a.density() * b.vector()).real();
    const Matrix sa = hermitian_sqrt(a.density_ref());
    const Matrix inner = sa * b.density_ref() * sa;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
    const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return tr * tr;
}

// |tr(U† V)|^2 / d^2
inline double gate_fidelity(const Matrix& u, const Matrix& v) {
    require(u.rows() == v.rows() && u.cols() == v.cols(), "gate_fidelity: shape mismatch");
    return std::norm((u.adjoint() * v).trace()) / std::pow(static_cast<double>(u.rows()), 2);
}

// Wootters concurrence of a two-qubit density matrix (4x4).
inline double concurrence(const Matrix& rho) {
    require(rho.rows() == 4 && rho.cols() == 4, "concurrence: need a 4x4 density matrix");
    Matrix yy = Matrix::Zero(4, 4);
    yy(0, 3) = -1; yy(1, 2) = 1; yy(2, 1) = 1; yy(3, 0) = -1;
    const Matrix tilde = yy * rho.conjugate() * yy;
    const Matrix sr = hermitian_sqrt(rho);
    const Matrix r = sr * tilde * sr;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.adjoint()), Eigen::EigenvaluesOnly);
    RealVector l = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(l.data(), l.data() + 4, std::greater<>());
    return std::max(0.0, l(0) - l(1) - l(2) - l(3));
}

// ---------------------------------------------------------------------------
// Sinusoid fit
// ---------------------------------------------------------------------------

struct RabiFit {
    double omega = 0.0;       // angular frequency of the oscillating signal
    double amplitude = 0.0;
    double offset = 0.0;
    double rms_residual = 0.0;
    bool low_confidence = true;
    std::string note;
};

namespace detail {
// Linear least squares of y ~ c + A cos wt + B sin wt; returns residual sum of squares.
inline double sinusoid_rss(const std::vector<double>& t, const std::vector<double>& y, double w, double* c = nullptr,
                           double* amp = nullptr) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(t.size()), 3);
    Eigen::VectorXd Y(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        X(r, 0) = 1.0;
        X(r, 1) = std::cos(w * t[i]);
        X(r, 2) = std::sin(w * t[i]);
        Y(r) = y[i];
    }
    const Eigen::Vector3d beta = X.colPivHouseholderQr().solve(Y);
    if (c) *c = beta(0);
    if (amp) *amp = std::hypot(beta(1), beta(2));
    return (X * beta - Y).squaredNorm();
}
}  // namespace detail

// Fits y(t) = c + A cos(w t + phi). For P = sin^2(g t) the fitted w is 2g.
inline RabiFit extract_rabi_frequency(const std::vector<double>& t, const std::vector<double>& y,
                                      double residual_threshold = 0.05) {
    RabiFit fit;
    require(t.size() == y.size(), "extract_rabi_frequency: length mismatch");
    if (t.size() < 8) {
        fit.note = "too few samples";
        return fit;
    }
    const double span = t.back() - t.front();
    require(span > 0, "extract_rabi_frequency: times must increase");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    if (var / static_cast<double>(y.size()) < 1e-20) {
        fit.note = "constant series";
        return fit;
    }
    // Coarse scan from 1/2 cycle up to the sampling Nyquist limit, then golden refinement.
    const double w_lo = kPi / span;
    const double w_hi = kPi * static_cast<double>(t.size() - 1) / span;
    const std::size_t n_scan = std::max<std::size_t>(400, 8 * t.size());
    double best_w = w_lo, best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= n_scan; ++k) {
        const double w = w_lo + (w_hi - w_lo) * static_cast<double>(k) / static_cast<double>(n_scan);
        const double r = detail::sinusoid_rss(t, y, w);
        if (r < best) best = r, best_w = w;
    }
    const double dw = (w_hi - w_lo) / static_cast<double>(n_scan);
    double a = std::max(w_lo, best_w - dw), b = best_w + dw;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = detail::sinusoid_rss(t, y, x1), f2 = detail::sinusoid_rss(t, y, x2);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * b; ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1; x1 = b - gr * (b - a); f1 = detail::sinusoid_rss(t, y, x1);
        } else {
            a = x1; x1 = x2; f1 = f2; x2 = a + gr * (b - a); f2 = detail::sinusoid_rss(t, y, x2);
        }
    }
    fit.omega = 0.5 * (a + b);
    const double rss = detail::sinusoid_rss(t, y, fit.omega, &fit.offset, &fit.amplitude);
    fit.rms_residual = std::sqrt(rss / static_cast<double>(t.size()));
    const double cycles = fit.omega * span / kTwoPi;
    fit.low_confidence = fit.amplitude <= 0.0 || fit.rms_residual > residual_threshold * fit.amplitude || cycles < 3.0;
    if (cycles < 3.0) fit.note = "fewer than 3 periods sampled";
    else if (fit.low_confidence) fit.note = "fit residual above threshold";
    return fit;
}

}  // namespace ionlc
