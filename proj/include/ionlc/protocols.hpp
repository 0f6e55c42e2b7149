// protocols.hpp: pulse schedules and the composite protocols built on the
// LC/motion coupling: swap, swap-conjugated gates, JC entangler, spin-dependent
// displacements, the echoed MS sequence and its heating scan, the two-ion
// phase gate, cat-state displacement sensing and the LC/spin budget run.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ionlc/device.hpp"
#include "ionlc/dynamics.hpp"
#include "ionlc/hamiltonians.hpp"
#include "ionlc/parallel.hpp"
#include "ionlc/qalgebra.hpp"

namespace ionlc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

struct ScheduleSegment {
    std::optional<TimeDependentHamiltonian> hamiltonian;  // evolution for `duration`, local time from 0
    std::optional<QOperator> gate;                        // instantaneous
    double duration = 0.0;
    std::string label;

    bool is_gate() const { return gate.has_value(); }
};

class PulseSchedule {
public:
    explicit PulseSchedule(ModeLayout layout) : layout_(std::move(layout)) {}

    PulseSchedule& evolve(TimeDependentHamiltonian h, double duration, std::string label = {}) {
        if (!(h.layout() == layout_)) throw LayoutMismatch("PulseSchedule: segment layout differs");
        require(duration >= 0.0 && std::isfinite(duration), "PulseSchedule: durations must be >= 0");
        segments_.push_back({std::move(h), std::nullopt, duration, std::move(label)});
        return *this;
    }

    PulseSchedule& gate(QOperator u, std::string label = {}) {
        if (!(u.layout() == layout_)) throw LayoutMismatch("PulseSchedule: gate layout differs");
        const double r = u.unitarity_residual();
        if (r > 1e-10) throw InvalidArgument("PulseSchedule: gate '" + label + "' not unitary (" + std::to_string(r) + ")");
        segments_.push_back({std::nullopt, std::move(u), 0.0, std::move(label)});
        return *this;
    }

    PulseSchedule& append(const PulseSchedule& other) {
        if (!(other.layout_ == layout_)) throw LayoutMismatch("PulseSchedule: cannot append across layouts");
        segments_.insert(segments_.end(), other.segments_.begin(), other.segments_.end());
        return *this;
    }

    const ModeLayout& layout() const { return layout_; }
    const std::vector<ScheduleSegment>& segments() const { return segments_; }
    double total_duration() const {
        double t = 0.0;
        for (const auto& s : segments_) t += s.duration;
        return t;
    }

private:
    ModeLayout layout_;
    std::vector<ScheduleSegment> segments_;
};

// Applies the schedule to a block of state columns (identity -> propagator).
inline Matrix apply_schedule(const PulseSchedule& s, Matrix cols, double tolerance = 1e-10) {
    for (const auto& seg : s.segments()) {
        if (seg.is_gate())
            cols = seg.gate->matrix() * cols;
        else
            cols = evolve_columns(*seg.hamiltonian, cols, 0.0, seg.duration, tolerance);
    }
    return cols;
}

inline QOperator schedule_propagator(const PulseSchedule& s, double tolerance = 1e-10) {
    const auto n = static_cast<Eigen::Index>(s.layout().total_dim());
    return {s.layout(), apply_schedule(s, Matrix::Identity(n, n), tolerance)};
}

// Lindblad channel of the schedule applied to an operator x; gates act as U x U†.
inline Matrix apply_schedule_channel(const PulseSchedule& s, const std::vector<CollapseOp>& ops, Matrix x,
                                     double tolerance = 1e-10) {
    for (const auto& seg : s.segments()) {
        if (seg.is_gate())
            x = seg.gate->matrix() * x * seg.gate->matrix().adjoint();
        else if (seg.duration > 0.0)
            x = lindblad_map(*seg.hamiltonian, ops, x, 0.0, seg.duration, tolerance);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ProtocolResult {
    std::string name;
    std::map<std::string, double> scalars;
    TimeSeries series;
    std::vector<std::string> warnings;
    double truncation_delta = kNaN;  // |figure(2N) - figure(N)|
    std::map<std::string, bool> checks;

    double scalar(const std::string& key) const {
        auto it = scalars.find(key);
        if (it == scalars.end()) throw InvalidArgument("ProtocolResult: no scalar '" + key + "'");
        return it->second;
    }
};

enum class HeatingModel {
    infinite_temperature,  // b and b† each at rate gamma, d<n>/dt = gamma
    absorption             // b† at rate gamma
};

inline std::vector<CollapseOp> heating_ops(const ModeLayout& layout, double gamma, HeatingModel model) {
    std::vector<CollapseOp> ops;
    if (gamma <= 0.0) return ops;
    const QOperator b = lowering(layout, kMotion);
    ops.push_back({b.adjoint(), gamma, "heating b†"});
    if (model == HeatingModel::infinite_temperature) ops.push_back({b, gamma, "heating b"});
    return ops;
}

inline ModeLayout protocol_layout(std::size_t lc_dim, std::size_t motion_dim, bool with_spin = true) {
    if (with_spin) return ModeLayout({{std::string(kSpin), 2}, {std::string(kLc), lc_dim}, {std::string(kMotion), motion_dim}});
    return ModeLayout({{std::string(kLc), lc_dim}, {std::string(kMotion), motion_dim}});
}

// Flat index of a per-label digit assignment; unspecified slots are 0.
inline std::size_t index_of(const ModeLayout& layout, const std::map<std::string, std::size_t>& digits) {
    std::vector<std::size_t> d(layout.size(), 0);
    for (const auto& [label, v] : digits) d[layout.index(label)] = v;
    return layout.flat_index(d);
}

// ---------------------------------------------------------------------------
// Swap and swap conjugation
// ---------------------------------------------------------------------------

inline double swap_time(double g) {
    require(g > 0.0, "swap: g must be positive");
    return kPi / (2.0 * g);
}

inline PulseSchedule swap_schedule(double g, const ModeLayout& layout) {
    PulseSchedule s(layout);
    s.evolve(rwa_hamiltonian(g, 0.0, layout), swap_time(g), "swap");
    return s;
}

// S U S with S the swap propagator: U's motion action lands on the LC.
inline QOperator conjugate_by_swaps(const QOperator& u, double g) {
    const ModeLayout& layout = u.layout();
    if (!layout.contains(kLc) || !layout.contains(kMotion))
        throw LayoutMismatch("conjugate_by_swaps: operator layout must contain lc and motion slots");
    const QOperator s = schedule_propagator(swap_schedule(g, layout));
    return s * u * s;
}

// |1,0> -> |0,1> under the swap, with occupation series and truncation check.
inline ProtocolResult run_swap(double g, std::size_t lc_dim = 4, std::size_t motion_dim = 4, std::size_t samples = 201,
                               double tolerance = 1e-10, bool convergence = true) {
    auto transfer = [&](std::size_t dl, std::size_t dm, ProtocolResult* out) {
        const ModeLayout layout = protocol_layout(dl, dm, false);
        EvolutionSpec spec;
        spec.hamiltonian = rwa_hamiltonian(g, 0.0, layout);
        spec.t_final = swap_time(g);
        spec.tolerance = tolerance;
        if (out) {
            for (std::size_t k = 0; k < samples; ++k)
                spec.sample_times.push_back(spec.t_final * static_cast<double>(k) / static_cast<double>(samples - 1));
            spec.observables = {{"P_lc", number_op(layout, kLc)}, {"P_motion", number_op(layout, kMotion)}};
        }
        const QState psi0 = QState::pure(layout, basis_vector(layout.total_dim(), index_of(layout, {{"lc", 1}})));
        const SimulationResult r = evolve_pure(spec, psi0);
        const std::size_t target = index_of(layout, {{"motion", 1}});
        const double p = std::norm(r.final_state.vector()(static_cast<Eigen::Index>(target)));
        if (out) {
            out->series = r.series;
            out->scalars["norm_drift"] = r.norm_drift;
            out->scalars["steps"] = static_cast<double>(r.stats.accepted);
            out->warnings.insert(out->warnings.end(), r.warnings.begin(), r.warnings.end());
        }
        return p;
    };
    ProtocolResult res;
    res.name = "swap";
    const double p = transfer(lc_dim, motion_dim, &res);
    res.scalars["g"] = g;
    res.scalars["T"] = swap_time(g);
    res.scalars["transfer_probability"] = p;
    res.scalars["infidelity"] = 1.0 - p;
    if (convergence) res.truncation_delta = std::abs(transfer(2 * lc_dim, 2 * motion_dim, nullptr) - p);
    res.checks["transfer > 1 - 1e-6"] = p > 1.0 - 1e-6;
    return res;
}

// ---------------------------------------------------------------------------
// Spin-dependent displacement
// ---------------------------------------------------------------------------

// exp[(beta a† - beta* a) S] on `slot` for a Hermitian spin operator S that is
// already embedded in `layout`.
inline QOperator conditional_displacement(cplx beta, const QOperator& spin_operator, std::string_view slot = kLc) {
    const ModeLayout& layout = spin_operator.layout();
    const QOperator a = lowering(layout, slot);
    const QOperator gen = (beta * a.adjoint() - std::conj(beta) * a) * spin_operator;
    return exp(gen);
}

// exp[(alpha a† - alpha* a) sigma_x] on spin (x) LC.
inline Checked<QOperator> spin_dependent_displacement(cplx alpha, std::size_t lc_dim = 32) {
    const ModeLayout layout({{std::string(kSpin), 2}, {std::string(kLc), lc_dim}});
    Checked<QOperator> out{conditional_displacement(alpha, pauli_op(Axis::x, layout)), {}};
    if (displacement_truncated(alpha, lc_dim)) out.warnings.push_back(truncation_warning(alpha, lc_dim));
    return out;
}

// ---------------------------------------------------------------------------
// JC entangler
// ---------------------------------------------------------------------------

inline double jc_pulse_time(double Omega0) {
    require(Omega0 > 0.0, "jc: Omega0 must be positive");
    return kPi / (2.0 * Omega0);
}

// swap -> JC pulse of area pi/2 (t = pi/(2 Omega0)) -> swap
inline PulseSchedule jc_cnot_schedule(double Omega0, double g, const ModeLayout& layout) {
    PulseSchedule s = swap_schedule(g, layout);
    s.evolve(jc_hamiltonian(Omega0, layout), jc_pulse_time(Omega0), "jc");
    s.append(swap_schedule(g, layout));
    return s;
}

// Populations and entanglement of the swap-JC-swap composite on LC{0,1} x spin.
inline ProtocolResult run_jc_cnot(double Omega0, double g, std::size_t lc_dim = 4, std::size_t motion_dim = 4,
                                  double tolerance = 1e-10) {
    auto run = [&](std::size_t dl, std::size_t dm) {
        const ModeLayout layout = protocol_layout(dl, dm);
        const QOperator u = schedule_propagator(jc_cnot_schedule(Omega0, g, layout), tolerance);
        const auto col = [&](std::size_t spin, std::size_t lc) -> Vector {
            return u.matrix().col(static_cast<Eigen::Index>(index_of(layout, {{"spin", spin}, {"lc", lc}})));
        };
        const auto amp = [&](const Vector& v, std::size_t spin, std::size_t lc) {
            return v(static_cast<Eigen::Index>(index_of(layout, {{"spin", spin}, {"lc", lc}})));
        };
        // spin index 0 = up, 1 = down
        const Vector v0 = col(1, 0), v1 = col(1, 1);
        ProtocolResult r;
        r.scalars["P_0down_unchanged"] = std::norm(amp(v0, 1, 0));
        r.scalars["P_1down_spin_flip"] = 0.0;
        for (std::size_t l = 0; l < dl; ++l) r.scalars["P_1down_spin_flip"] += std::norm(amp(v1, 0, l));
        // Product input (|0> + |1>)/sqrt2 (x) |down>; concurrence of LC{0,1} (x) spin.
        const Vector out = (v0 + v1) / std::sqrt(2.0);
        Matrix rho = Matrix::Zero(4, 4);
        const QState full = QState::pure(layout, out);
        const QState red = partial_trace(full, {std::string(kSpin), std::string(kLc)});
        const Matrix& rr = red.density_ref();
        // reduced layout order: spin, lc -> index spin*dl + lc; keep lc < 2
        for (std::size_t s1 = 0; s1 < 2; ++s1)
            for (std::size_t l1 = 0; l1 < 2; ++l1)
                for (std::size_t s2 = 0; s2 < 2; ++s2)
                    for (std::size_t l2 = 0; l2 < 2; ++l2)
                        rho(static_cast<Eigen::Index>(l1 * 2 + s1), static_cast<Eigen::Index>(l2 * 2 + s2)) =
                            rr(static_cast<Eigen::Index>(s1 * dl + l1), static_cast<Eigen::Index>(s2 * dl + l2));
        const double w = rho.trace().real();
        r.scalars["computational_weight"] = w;
        r.scalars["concurrence"] = concurrence(rho / w);
        r.scalars["unitarity_residual"] = u.unitarity_residual();
        return r;
    };
    ProtocolResult res = run(lc_dim, motion_dim);
    res.name = "jc_cnot";
    const ProtocolResult big = run(2 * lc_dim, 2 * motion_dim);
    res.truncation_delta = std::abs(big.scalar("concurrence") - res.scalar("concurrence"));
    res.scalars["P_1down_spin_flip_expected"] = std::pow(std::sin(Omega0 * jc_pulse_time(Omega0) / 2.0), 2);
    res.checks["vacuum ground dark"] = std::abs(res.scalar("P_0down_unchanged") - 1.0) < 1e-6;
    res.checks["entangling"] = res.scalar("concurrence") > 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Echoed MS sequence
// ---------------------------------------------------------------------------

inline double ms_alpha_magnitude(const DeviceParams& p, double delta, int n) {
    return 4.0 * kPi * n * p.g0 * p.Omega0 * p.eta / (3.0 * delta * delta);
}

inline double ms_gate_time(double delta, int n) { return kTwoPi * n / std::abs(delta); }

struct MsResult {
    Matrix block;                // composite on the motion-vacuum subspace (spin x LC)
    Matrix block_half;           // U_n alone on the same subspace
    cplx alpha_fit{0.0, 0.0};
    cplx scale_fit{1.0, 0.0};    // global factor of the fit
    double alpha_predicted = 0.0;
    double fit_residual = 0.0;   // relative Frobenius residual of the fit
    double purity_half = 0.0;    // motion purity after U_n
    double purity_final = 0.0;   // after the full echo
    double spread_single = 0.0;  // LC-Fock phase spread of U_n
    double spread_echo = 0.0;    // same for the echoed composite
    double echo_suppression = 0.0;
    double gate_time = 0.0;      // 2 t_n
    bool closed = false;
    std::size_t lc_dim = 0, motion_dim = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::size_t> motion_vacuum_indices(const ModeLayout& layout) {
    std::vector<std::size_t> idx;
    for (std::size_t s = 0; s < layout.dim(kSpin); ++s)
        for (std::size_t l = 0; l < layout.dim(kLc); ++l) idx.push_back(index_of(layout, {{"spin", s}, {"lc", l}}));
    return idx;
}

inline Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

inline Matrix restrict(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j]));
    return out;
}

// Max over spin of |arg(D_n / D_0)| for LC levels 1..levels-1 of a
// (spin x LC) block.
inline double fock_phase_spread(const Matrix& block, std::size_t lc_dim, std::size_t levels) {
    double spread = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
        const cplx ref = block(static_cast<Eigen::Index>(s * lc_dim), static_cast<Eigen::Index>(s * lc_dim));
        for (std::size_t n = 1; n < std::min(levels, lc_dim); ++n) {
            const auto k = static_cast<Eigen::Index>(s * lc_dim + n);
            spread = std::max(spread, std::abs(std::arg(block(k, k) / ref)));
        }
    }
    return spread;
}

// sigma_x (x) q on spin (x) LC of dimension lc_dim.
inline Matrix sigma_x_q(std::size_t lc_dim) {
    const Matrix a = annihilation(lc_dim).matrix();
    return kron(pauli(Axis::x).matrix(), Matrix((a + a.adjoint()) / std::sqrt(2.0)));
}

struct GeneratorFit {
    cplx alpha;
    cplx scale;
    double residual;
};

// Least-squares fit block ~ c exp(alpha sigma_x q) on LC levels < levels.
inline GeneratorFit fit_sigma_x_q(const Matrix& block, std::size_t lc_dim, std::size_t levels) {
    const Matrix gen = sigma_x_q(lc_dim);
    std::vector<std::size_t> keep;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t n = 0; n < std::min(levels, lc_dim); ++n) keep.push_back(s * lc_dim + n);
    const Matrix target = restrict(block, keep);
    const double norm_t = target.norm();

    auto model = [&](cplx alpha, cplx* c_out) -> Matrix {
        const Matrix e = restrict(expm(alpha * gen), keep);
        const cplx c = (e.adjoint() * target).trace() / (e.adjoint() * e).trace();
        if (c_out) *c_out = c;
        return target - c * e;
    };
    auto pack = [](const Matrix& r) {
        Eigen::VectorXd v(2 * r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            v(2 * i) = r.data()[i].real();
            v(2 * i + 1) = r.data()[i].imag();
        }
        return v;
    };
    // Start from the first-order matrix element <down,1| . |up,0> = alpha/sqrt2.
    const cplx diag = block(0, 0);
    cplx alpha = std::abs(diag) > 0 ? std::sqrt(2.0) * block(static_cast<Eigen::Index>(lc_dim + 1), 0) / diag : cplx(0.0);
    cplx c;
    Eigen::VectorXd r = pack(model(alpha, &c));
    for (int it = 0; it < 50; ++it) {
        const double h = 1e-7;
        Eigen::MatrixXd J(r.size(), 2);
        J.col(0) = (pack(model(alpha + h, nullptr)) - pack(model(alpha - h, nullptr))) / (2 * h);
        J.col(1) = (pack(model(alpha + kI * h, nullptr)) - pack(model(alpha - kI * h, nullptr))) / (2 * h);
        const Eigen::Vector2d step = J.colPivHouseholderQr().solve(-r);
        alpha += cplx(step(0), step(1));
        r = pack(model(alpha, &c));
        if (step.norm() < 1e-13 * std::max(1.0, std::abs(alpha))) break;
    }
    return {alpha, c, norm_t > 0 ? r.norm() / norm_t : 0.0};
}

inline double motion_purity(const ModeLayout& layout, const Vector& psi) {
    return purity(partial_trace(QState::pure(layout, psi / psi.norm()), {std::string(kMotion)}));
}

}  // namespace detail

inline Matrix spin_pi_pulse_z(const ModeLayout& layout) {
    return embed(QOperator(ModeLayout::single(2), expm(-kI * (kPi / 2.0) * pauli(Axis::z).matrix())), layout, kSpin)
        .matrix();
}

// Echo schedule Z U_n(-delta) Z U_n(delta), each half lasting t_n = 2 pi n/|delta|.
inline PulseSchedule ms_echo_schedule(const DeviceParams& p, double delta, int n, const ModeLayout& layout) {
    require(n >= 1, "ms_sequence: n must be >= 1");
    const double tn = ms_gate_time(delta, n);
    const QOperator z(layout, spin_pi_pulse_z(layout));
    PulseSchedule s(layout);
    s.evolve(ms_hamiltonian(p, delta, layout), tn, "U_n");
    s.gate(z, "Z");
    s.evolve(ms_hamiltonian(p, -delta, layout), tn, "U_n reversed");
    s.gate(z, "Z");
    return s;
}

inline MsResult ms_sequence(const DeviceParams& p, double delta, int n, std::size_t lc_dim = 8,
                            std::size_t motion_dim = 8, double tolerance = 1e-10, std::size_t fit_levels = 6) {
    require(n >= 1, "ms_sequence: n must be >= 1");
    const ModeLayout layout = protocol_layout(lc_dim, motion_dim);
    const auto idx = detail::motion_vacuum_indices(layout);
    Matrix y0 = Matrix::Zero(static_cast<Eigen::Index>(layout.total_dim()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) y0(static_cast<Eigen::Index>(idx[k]), static_cast<Eigen::Index>(k)) = 1.0;

    MsResult res;
    res.lc_dim = lc_dim;
    res.motion_dim = motion_dim;
    const double tn = ms_gate_time(delta, n);
    res.gate_time = 2.0 * tn;
    const TimeDependentHamiltonian hp = ms_hamiltonian(p, delta, layout);
    const TimeDependentHamiltonian hm = ms_hamiltonian(p, -delta, layout);
    res.warnings = hp.warnings();
    const Matrix z = spin_pi_pulse_z(layout);
    const Matrix y_half = evolve_columns(hp, y0, 0.0, tn, tolerance);
    const Matrix y_full = z * evolve_columns(hm, Matrix(z * y_half), 0.0, tn, tolerance);

    res.block_half = detail::select_rows(y_half, idx);
    res.block = detail::select_rows(y_full, idx);
    res.alpha_predicted = ms_alpha_magnitude(p, delta, n);
    const auto fit = detail::fit_sigma_x_q(res.block, lc_dim, fit_levels);
    res.alpha_fit = fit.alpha;
    res.scale_fit = fit.scale;
    res.fit_residual = fit.residual;

    // |up> (x) (|0> + |1>)/sqrt2 (x) |0>_motion
    Vector c = Vector::Zero(static_cast<Eigen::Index>(idx.size()));
    c(0) = c(1) = 1.0 / std::sqrt(2.0);
    res.purity_half = detail::motion_purity(layout, y_half * c);
    res.purity_final = detail::motion_purity(layout, y_full * c);
    res.closed = res.purity_half >= 0.999 && res.purity_final >= 0.999;
    if (!res.closed)
        res.warnings.push_back("closure: motional purity " + std::to_string(std::min(res.purity_half, res.purity_final)) +
                               " below 0.999 at t_n");

    res.spread_single = detail::fock_phase_spread(res.block_half, lc_dim, fit_levels);
    res.spread_echo = detail::fock_phase_spread(res.block, lc_dim, fit_levels);
    res.echo_suppression = res.spread_single / std::max(res.spread_echo, 1e-300);
    return res;
}

inline ProtocolResult ms_protocol_result(const MsResult& r, const MsResult* doubled = nullptr) {
    ProtocolResult out;
    out.name = "ms_sequence";
    out.scalars["alpha_fit_re"] = r.alpha_fit.real();
    out.scalars["alpha_fit_im"] = r.alpha_fit.imag();
    out.scalars["alpha_fit_abs"] = std::abs(r.alpha_fit);
    out.scalars["alpha_predicted"] = r.alpha_predicted;
    out.scalars["fit_residual"] = r.fit_residual;
    out.scalars["purity_half"] = r.purity_half;
    out.scalars["purity_final"] = r.purity_final;
    out.scalars["phase_spread_single"] = r.spread_single;
    out.scalars["phase_spread_echo"] = r.spread_echo;
    out.scalars["echo_suppression"] = r.echo_suppression;
    out.scalars["gate_time"] = r.gate_time;
    out.warnings = r.warnings;
    if (doubled) out.truncation_delta = std::abs(std::abs(doubled->alpha_fit) - std::abs(r.alpha_fit));
    out.checks["trajectory closed"] = r.closed;
    out.checks["|alpha| within 5%"] =
        r.alpha_predicted > 0 && std::abs(std::abs(r.alpha_fit) / r.alpha_predicted - 1.0) < 0.05;
    out.checks["echo suppression >= 100"] = r.echo_suppression >= 100.0;
    return out;
}

// ---------------------------------------------------------------------------
// Heating scan of the echoed MS sequence
// ---------------------------------------------------------------------------

enum class ScanHold {
    alpha,    // n ~ delta^2, delta snapped so |alpha| stays at the target
    duration  // n ~ delta, delta snapped so the gate time stays fixed
};

struct HeatingScanOptions {
    ScanHold hold = ScanHold::alpha;
    double target_alpha = 0.0;   // |alpha| for ScanHold::alpha
    double target_time = 0.0;    // t_n for ScanHold::duration
    HeatingModel model = HeatingModel::infinite_temperature;
    std::size_t lc_dim = 3;
    std::size_t motion_dim = 6;
    double tolerance = 1e-10;
    std::size_t workers = 1;
};

struct HeatingPoint {
    double delta_requested = 0.0;
    double delta = 0.0;
    int n = 0;
    double alpha = 0.0;
    double infidelity = 0.0;
    double trace_drift = 0.0;
    double min_eigenvalue = 0.0;
};

struct HeatingScan {
    std::vector<HeatingPoint> points;
    double slope = kNaN;  // d log(infidelity) / d log(delta)
    std::vector<std::string> warnings;
};

namespace detail {
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return kNaN;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) return kNaN;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}
}  // namespace detail

// Infidelity of the echoed sequence under heating against exp(alpha q sigma_x),
// input |up> (x) (|0> + |1>)/sqrt2 (x) |0>_motion.
inline HeatingPoint ms_heating_point(const DeviceParams& p, double delta, int n, double gamma,
                                     const HeatingScanOptions& opt) {
    const ModeLayout layout = protocol_layout(opt.lc_dim, opt.motion_dim);
    const PulseSchedule sched = ms_echo_schedule(p, delta, n, layout);
    const auto ops = heating_ops(layout, gamma, opt.model);
    Vector psi = Vector::Zero(static_cast<Eigen::Index>(layout.total_dim()));
    psi(static_cast<Eigen::Index>(index_of(layout, {{"lc", 0}}))) = 1.0 / std::sqrt(2.0);
    psi(static_cast<Eigen::Index>(index_of(layout, {{"lc", 1}}))) = 1.0 / std::sqrt(2.0);
    const Matrix rho = apply_schedule_channel(sched, ops, psi * psi.adjoint(), opt.tolerance);

    HeatingPoint pt;
    pt.delta = delta;
    pt.n = n;
    pt.alpha = ms_alpha_magnitude(p, delta, n);
    pt.trace_drift = std::abs(rho.trace() - 1.0);
    const QState full = QState::mixed(layout, 0.5 * (rho + rho.adjoint()));
    pt.min_eigenvalue = full.min_eigenvalue();
    const QState red = partial_trace(full, {std::string(kSpin), std::string(kLc)});
    Vector in = Vector::Zero(static_cast<Eigen::Index>(2 * opt.lc_dim));
    in(0) = in(1) = 1.0 / std::sqrt(2.0);
    double best = 0.0;
    for (double sign : {1.0, -1.0}) {
        const Vector ideal = expm(kI * sign * pt.alpha * detail::sigma_x_q(opt.lc_dim)) * in;
        best = std::max(best, ideal.dot(red.density_ref() * ideal).real());
    }
    pt.infidelity = 1.0 - best;
    return pt;
}

inline HeatingScan heating_resistance_scan(const DeviceParams& p, const std::vector<double>& deltas, double gamma,
                                           const HeatingScanOptions& opt) {
    require(!deltas.empty(), "heating_resistance_scan: empty delta list");
    require(gamma >= 0.0, "heating_resistance_scan: gamma must be >= 0");
    const double k = 4.0 * kPi * p.g0 * p.Omega0 * p.eta / 3.0;  // |alpha| = k n / delta^2
    struct Plan { double requested, delta; int n; };
    std::vector<Plan> plan;
    for (double d : deltas) {
        require(d > 0.0 && std::isfinite(d), "heating_resistance_scan: deltas must be positive");
        if (opt.hold == ScanHold::alpha) {
            require(opt.target_alpha > 0.0, "heating_resistance_scan: target_alpha must be positive");
            const int n = std::max(1, static_cast<int>(std::lround(opt.target_alpha * d * d / k)));
            plan.push_back({d, std::sqrt(k * n / opt.target_alpha), n});
        } else {
            require(opt.target_time > 0.0, "heating_resistance_scan: target_time must be positive");
            const int n = std::max(1, static_cast<int>(std::lround(d * opt.target_time / kTwoPi)));
            plan.push_back({d, kTwoPi * n / opt.target_time, n});
        }
    }
    HeatingScan scan;
    scan.points = parallel_map(plan.size(), opt.workers, [&](std::size_t i) {
        HeatingPoint pt = ms_heating_point(p, plan[i].delta, plan[i].n, gamma, opt);
        pt.delta_requested = plan[i].requested;
        return pt;
    });
    std::vector<double> xs, ys;
    for (const auto& pt : scan.points) {
        xs.push_back(pt.delta);
        ys.push_back(pt.infidelity);
        if (pt.trace_drift > 1e-8) scan.warnings.push_back("trace drift " + std::to_string(pt.trace_drift));
        if (pt.min_eigenvalue < -1e-8) scan.warnings.push_back("negative eigenvalue " + std::to_string(pt.min_eigenvalue));
    }
    scan.slope = detail::loglog_slope(xs, ys);
    return scan;
}

// ---------------------------------------------------------------------------
// Two-ion phase gate
// ---------------------------------------------------------------------------

struct TwoIonGate {
    QOperator unitary;
    double phase = 0.0;           // arg(aligned / anti-aligned), in (-pi, pi]
    double expected_phase = 0.0;  // 8 |alpha|^2
    double lc_return_fidelity = 0.0;
    double zz_commutator = 0.0;   // max|[U, sz1 sz2]|
    std::vector<std::string> warnings;
};

inline ModeLayout two_ion_layout(std::size_t lc_dim) {
    return ModeLayout({{"spin1", 2}, {"spin2", 2}, {std::string(kLc), lc_dim}});
}

// D(-i a Jz) D(-a Jz) D(i a Jz) D(a Jz): a closed square in LC phase space
// whose area gives the phase 4|a|^2 (1 + sz1 sz2).
inline TwoIonGate two_ion_phase_gate(cplx alpha, std::size_t lc_dim = 32) {
    const ModeLayout layout = two_ion_layout(lc_dim);
    const QOperator jz = pauli_op(Axis::z, layout, "spin1") + pauli_op(Axis::z, layout, "spin2");
    TwoIonGate g;
    g.unitary = QOperator::identity(layout);
    for (cplx step : {alpha, kI * alpha, -alpha, -kI * alpha}) g.unitary = conditional_displacement(step, jz) * g.unitary;
    if (displacement_truncated(2.0 * alpha, lc_dim)) g.warnings.push_back(truncation_warning(2.0 * alpha, lc_dim));

    auto idx = [&](std::size_t s1, std::size_t s2) { return static_cast<Eigen::Index>(layout.flat_index({s1, s2, 0})); };
    const cplx aligned = g.unitary.matrix()(idx(0, 0), idx(0, 0));
    const cplx anti = g.unitary.matrix()(idx(0, 1), idx(0, 1));
    g.phase = std::arg(aligned / anti);
    g.expected_phase = 8.0 * std::norm(alpha);
    const Vector out = g.unitary.matrix().col(idx(0, 0));
    const QState lc = partial_trace(QState::pure(layout, out), {std::string(kLc)});
    g.lc_return_fidelity = lc.density_ref()(0, 0).real();
    const QOperator zz = pauli_op(Axis::z, layout, "spin1") * pauli_op(Axis::z, layout, "spin2");
    g.zz_commutator = max_abs(commutator(g.unitary, zz).matrix());
    return g;
}

// Wrapped distance between two phases.
inline double phase_distance(double a, double b) { return std::abs(std::remainder(a - b, kTwoPi)); }

// ---------------------------------------------------------------------------
// Cat-state displacement sensing
// ---------------------------------------------------------------------------

struct CatMetrology {
    double alpha = 0.0;
    double first_zero = kNaN;  // smallest probe displacement with zero parity
    double period = kNaN;      // fringe period in probe displacement, 4 * first_zero
    double sensitivity = 0.5;  // smallest resolvable displacement ~ period / 2pi (vacuum: 1/2)
    std::vector<double> probe;
    std::vector<double> parity;
    std::vector<std::string> warnings;
};

// Parity of the even cat N(|a> + |-a>) after the probe displacement D(i eps).
inline double cat_parity(const QState& cat, double eps) {
    const std::size_t dim = cat.dim();
    const auto d = displacement(cplx(0.0, eps), dim);
    const Vector v = d.value.matrix() * cat.vector();
    double p = 0.0;
    for (Eigen::Index n = 0; n < v.size(); ++n) p += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(v(n));
    return p;
}

inline CatMetrology cat_metrology(double alpha_cat, std::size_t dim = 64, double probe_max = 3.0) {
    require(alpha_cat >= 0.0, "cat_metrology: alpha must be >= 0");
    CatMetrology m;
    m.alpha = alpha_cat;
    auto cat = cat_state(alpha_cat, 0.0, dim);
    m.warnings = cat.warnings;
    const double step = alpha_cat > 0 ? std::min(0.02, kPi / (8.0 * alpha_cat) / 20.0) : 0.02;
    double prev_eps = 0.0, prev = cat_parity(cat.value, 0.0);
    m.probe.push_back(0.0);
    m.parity.push_back(prev);
    bool warned = false;
    for (double eps = step; eps <= probe_max + 1e-12; eps += step) {
        if (!warned && displacement_truncated(cplx(alpha_cat, eps), dim)) {
            m.warnings.push_back(truncation_warning(cplx(alpha_cat, eps), dim));
            warned = true;
        }
        const double cur = cat_parity(cat.value, eps);
        m.probe.push_back(eps);
        m.parity.push_back(cur);
        if (cur <= 0.0 && prev > 0.0) {
            double lo = prev_eps, hi = eps;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (cat_parity(cat.value, mid) > 0.0 ? lo : hi) = mid;
            }
            m.first_zero = 0.5 * (lo + hi);
            m.period = 4.0 * m.first_zero;
            m.sensitivity = m.period / kTwoPi;
            break;
        }
        prev_eps = eps;
        prev = cur;
    }
    return m;
}

struct CatVoltageEstimate {
    double v_zero_point;  // q0 / C0
    double v_rms;         // q0/C0 sqrt(2 nbar + 1)
    double v_resolution;  // Heisenberg-limited, q0/C0 / (2 sqrt nbar)
};

inline CatVoltageEstimate cat_voltage_extrapolation(const DeviceParams& p, double nbar) {
    require(nbar > 0, "cat_voltage_extrapolation: nbar must be positive");
    const double v0 = p.q0 / p.C0;
    return {v0, v0 * std::sqrt(2.0 * nbar + 1.0), v0 / (2.0 * std::sqrt(nbar))};
}

// ---------------------------------------------------------------------------
// LC/spin budget run: swap -> JC pi/2 -> swap under LC loss and heating
// ---------------------------------------------------------------------------

struct BudgetOptions {
    std::size_t lc_dim = 4;
    std::size_t motion_dim = 4;
    HeatingModel model = HeatingModel::infinite_temperature;
    double tolerance = 1e-9;
    std::size_t workers = 1;
    bool convergence = true;
};

// 1 - entanglement fidelity of the noisy channel against the ideal composite,
// on spin{up,down} x LC{0,1} with the motion in vacuum.
inline double budget_process_infidelity(const DeviceParams& p, std::size_t lc_dim, std::size_t motion_dim,
                                         const BudgetOptions& opt, double* duration = nullptr) {
    const ModeLayout layout = protocol_layout(lc_dim, motion_dim);
    const PulseSchedule sched = jc_cnot_schedule(p.Omega0, p.g(), layout);
    if (duration) *duration = sched.total_duration();
    std::vector<CollapseOp> ops = heating_ops(layout, p.gamma_heat, opt.model);
    if (p.kappa_lc > 0) ops.push_back({lowering(layout, kLc), p.kappa_lc, "lc loss"});
    const Matrix u = schedule_propagator(sched, opt.tolerance * 1e-1).matrix();

    std::vector<std::size_t> basis;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t l = 0; l < 2; ++l) basis.push_back(index_of(layout, {{"spin", s}, {"lc", l}}));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) pairs.emplace_back(i, j);
    const auto n = static_cast<Eigen::Index>(layout.total_dim());
    const auto terms = parallel_map(pairs.size(), opt.workers, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        Matrix x = Matrix::Zero(n, n);
        x(static_cast<Eigen::Index>(basis[i]), static_cast<Eigen::Index>(basis[j])) = 1.0;
        const Matrix e = apply_schedule_channel(sched, ops, x, opt.tolerance);
        const Vector ui = u.col(static_cast<Eigen::Index>(basis[i]));
        const Vector uj = u.col(static_cast<Eigen::Index>(basis[j]));
        return cplx(ui.dot(e * uj));
    });
    // E(|j><i|) = E(|i><j|)†, so off-diagonal pairs contribute twice the real part.
    double fe = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        fe += pairs[k].first == pairs[k].second ? terms[k].real() : 2.0 * terms[k].real();
    fe /= static_cast<double>(basis.size() * basis.size());
    return 1.0 - fe;
}

inline ProtocolResult full_budget_run(const DeviceParams& p, const BudgetOptions& opt = {}) {
    ProtocolResult res;
    res.name = "full_budget";
    double duration = 0.0;
    const double infid = budget_process_infidelity(p, opt.lc_dim, opt.motion_dim, opt, &duration);
    res.scalars["process_infidelity"] = infid;
    res.scalars["duration"] = duration;
    res.scalars["kappa_lc"] = p.kappa_lc;
    res.scalars["gamma_heat"] = p.gamma_heat;
    res.scalars["rate_times_duration"] = decoherence_budget(p.kappa_lc, p.gamma_heat, 0.0, duration);
    if (opt.convergence) {
        const double big = budget_process_infidelity(p, 2 * opt.lc_dim, 2 * opt.motion_dim, opt);
        res.truncation_delta = std::abs(big - infid);
        res.scalars["process_infidelity_doubled"] = big;
    }
    res.checks["infidelity in [0.02, 0.04]"] = infid >= 0.02 && infid <= 0.04;
    return res;
}

}  // namespace ionlc
