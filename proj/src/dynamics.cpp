#include "cpg/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <array>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace cpg {

namespace {

constexpr double kDtStabilityBound = 0.2;  // dt * omega_max limit for rk4/magnus

struct NamedSource {
    Source source;
    const char* name;
};
constexpr NamedSource kSources[] = {
    {Source::Eq1, "eq1"},       {Source::Eq3, "eq3"},
    {Source::Static, "static"}, {Source::Eff1, "eff1"},
    {Source::Eff2, "eff2"},     {Source::EffVacuum, "eff-vacuum"},
};

struct NamedMethod {
    Method method;
    const char* name;
};
constexpr NamedMethod kMethods[] = {
    {Method::ExactEigen, "exact-eigen"},
    {Method::Rk4Fixed, "rk4-fixed"},
    {Method::Magnus2Midpoint, "magnus2-midpoint"},
};

}  // namespace

const char* source_name(Source s) {
    for (const auto& e : kSources)
        if (e.source == s) return e.name;
    return "?";
}

std::optional<Source> source_from_name(const std::string& name) {
    for (const auto& e : kSources)
        if (name == e.name) return e.source;
    return std::nullopt;
}

const char* method_name(Method m) {
    for (const auto& e : kMethods)
        if (e.method == m) return e.name;
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (const auto& e : kMethods)
        if (name == e.name) return e.method;
    return std::nullopt;
}

HamiltonianSpec source_spec(Source s, const SystemParams& p) {
    switch (s) {
        case Source::Eq1: return spec_eq1(p);
        case Source::Eq3: return spec_eq3(p);
        case Source::Static: return spec_static(p, BosonBasis::Lab);
        case Source::Eff1: return spec_eff_stage1(p);
        case Source::Eff2: return spec_eff_stage2(p);
        case Source::EffVacuum: return spec_eff_vacuum(p);
    }
    throw std::logic_error("unreachable");
}

HilbertSpace source_space(Source s, const SystemParams& p) {
    switch (s) {
        case Source::Eq1:
        case Source::Static: return make_space(p.n_max, BosonBasis::Lab);
        case Source::Eq3:
        case Source::Eff1:
        case Source::Eff2: return make_space(p.n_max, BosonBasis::NormalModes);
        case Source::EffVacuum: return make_qubit_space();
    }
    throw std::logic_error("unreachable");
}

const std::vector<double>& Trajectory::series(const std::string& name) const {
    auto it = observables.find(name);
    if (it == observables.end())
        throw MissingObservableError("trajectory has no observable '" + name + "'");
    return it->second;
}

namespace {

// Evaluates the standard observable set. All population observables are
// diagonal in the product basis except the n_c1/n_c2 cross term in the lab
// layout (and symmetrically n_a in the normal layout; only n_c is recorded).
struct ObservableRecorder {
    bool standard_layout;
    BosonBasis basis = BosonBasis::None;
    Eigen::VectorXd pe_A, pe_B, n_tot, n1, n2;
    Matrix cross;  // m1^+ m2
    Vector psi0;

    ObservableRecorder(const HilbertSpace& space, const Vector& initial)
        : standard_layout(space.factors.size() == 4), psi0(initial) {
        if (!standard_layout) return;
        basis = space.basis;
        SpaceOps ops(space);
        pe_A = ops.pe_A.diagonal().real();
        pe_B = ops.pe_B.diagonal().real();
        n1 = ops.n1.diagonal().real();
        n2 = ops.n2.diagonal().real();
        n_tot = n1 + n2;
        cross = ops.m1.adjoint() * ops.m2;
    }

    void init(Trajectory& traj) const {
        traj.observables["norm"] = {};
        traj.observables["re_overlap"] = {};
        traj.observables["im_overlap"] = {};
        traj.observables["Pe_A"] = {};
        traj.observables["Pe_B"] = {};
        traj.observables["n_photon_total"] = {};
        traj.observables["n_c1"] = {};
        traj.observables["n_c2"] = {};
    }

    void record_state(Trajectory& traj, double t, const Vector& psi) const {
        traj.times.push_back(t);
        auto& o = traj.observables;
        o["norm"].push_back(psi.norm());
        const Complex ov = psi0.adjoint() * psi;
        o["re_overlap"].push_back(ov.real());
        o["im_overlap"].push_back(ov.imag());
        if (!standard_layout) {
            o["Pe_A"].push_back(0.0);
            o["Pe_B"].push_back(0.0);
            o["n_photon_total"].push_back(0.0);
            o["n_c1"].push_back(0.0);
            o["n_c2"].push_back(0.0);
            return;
        }
        const Eigen::VectorXd prob = psi.cwiseAbs2();
        o["Pe_A"].push_back(pe_A.dot(prob));
        o["Pe_B"].push_back(pe_B.dot(prob));
        const double ntot = n_tot.dot(prob);
        o["n_photon_total"].push_back(ntot);
        if (basis == BosonBasis::NormalModes) {
            o["n_c1"].push_back(n1.dot(prob));
            o["n_c2"].push_back(n2.dot(prob));
        } else {
            const double x = (psi.adjoint() * (cross * psi))(0).real();
            o["n_c1"].push_back(0.5 * ntot - x);
            o["n_c2"].push_back(0.5 * ntot + x);
        }
    }

    void record_density(Trajectory& traj, double t, const Matrix& rho) const {
        traj.times.push_back(t);
        auto& o = traj.observables;
        o["norm"].push_back(rho.trace().real());
        // for density runs the overlap column carries <psi0|rho|psi0>
        const Complex ov = (psi0.adjoint() * rho * psi0)(0);
        o["re_overlap"].push_back(ov.real());
        o["im_overlap"].push_back(ov.imag());
        if (!standard_layout) {
            o["Pe_A"].push_back(0.0);
            o["Pe_B"].push_back(0.0);
            o["n_photon_total"].push_back(0.0);
            o["n_c1"].push_back(0.0);
            o["n_c2"].push_back(0.0);
            return;
        }
        const Eigen::VectorXd prob = rho.diagonal().real();
        o["Pe_A"].push_back(pe_A.dot(prob));
        o["Pe_B"].push_back(pe_B.dot(prob));
        const double ntot = n_tot.dot(prob);
        o["n_photon_total"].push_back(ntot);
        if (basis == BosonBasis::NormalModes) {
            o["n_c1"].push_back(n1.dot(prob));
            o["n_c2"].push_back(n2.dot(prob));
        } else {
            const double x = (rho * cross).trace().real();
            o["n_c1"].push_back(0.5 * ntot - x);
            o["n_c2"].push_back(0.5 * ntot + x);
        }
    }
};

double picture_max_frequency(const HamiltonianSpec& spec) {
    double f = spec.max_freq();
    if (spec.static_part.cwiseAbs().maxCoeff() > 0.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(spec.static_part,
                                                 Eigen::EigenvaluesOnly);
        f = std::max(f, es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff());
    }
    return f / kHbar;  // rad/ns
}

void check_dt_stability(const HamiltonianSpec& spec, double dt,
                        const IntegratorConfig& cfg) {
    const double omega = picture_max_frequency(spec);
    if (dt * omega > kDtStabilityBound && !cfg.allow_unstable_dt)
        throw DtStabilityError(
            "dt * omega_max = " + std::to_string(dt * omega) + " exceeds " +
            std::to_string(kDtStabilityBound) +
            " (largest phase frequency " + std::to_string(omega) +
            " rad/ns); reduce dt or set allow_unstable_dt");
}

long long step_count(double T, double& dt, const IntegratorConfig& cfg) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    long long n = std::llround(std::ceil(T / dt - 1e-12));
    if (n < 1) n = 1;
    if (n > cfg.max_steps)
        throw MaxStepsExceededError("step count " + std::to_string(n) +
                                    " exceeds max_steps");
    dt = T / double(n);  // land exactly on T
    return n;
}

// one rk4 step of i hbar psi' = H(t) psi
void rk4_step(const HamiltonianSpec& spec, double t, double dt, Vector& psi,
              Vector& k1, Vector& k2, Vector& k3, Vector& k4, Vector& tmp) {
    const Complex c(0.0, -dt / kHbar);
    spec.apply(t, psi, k1);
    tmp = psi + 0.5 * c * k1;
    spec.apply(t + 0.5 * dt, tmp, k2);
    tmp = psi + 0.5 * c * k2;
    spec.apply(t + 0.5 * dt, tmp, k3);
    tmp = psi + c * k3;
    spec.apply(t + dt, tmp, k4);
    psi += (c / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// psi <- exp(-i H dt / hbar) psi by Taylor series (converges quickly under
// the dt stability bound)
void magnus_step(const Matrix& h_mid, double dt, Vector& psi, Vector& term,
                 Vector& acc) {
    const Complex c(0.0, -dt / kHbar);
    acc = psi;
    term = psi;
    const double target = 1e-16 * psi.norm();
    for (int k = 1; k <= 80; ++k) {
        term = (c / double(k)) * (h_mid * term);
        acc += term;
        if (term.norm() < target) break;
    }
    psi = acc;
}

}  // namespace

Trajectory evolve_state(Source source, const SystemParams& p,
                        const StateVector& psi0, double T,
                        const IntegratorConfig& cfg) {
    HamiltonianSpec spec = source_spec(source, p);
    require_same_space(psi0.space, spec.space, "evolve_state");
    if (!(T >= 0.0)) throw std::invalid_argument("T must be >= 0");

    Trajectory traj;
    traj.space = spec.space;
    ObservableRecorder rec(spec.space, psi0.amplitudes);
    rec.init(traj);

    auto maybe_snapshot = [&](long long sample_idx, double t, const Vector& v) {
        if (cfg.snapshot_stride > 0 && sample_idx % cfg.snapshot_stride == 0)
            traj.snapshots.emplace_back(t, v);
    };

    if (cfg.method == Method::ExactEigen) {
        if (!spec.time_independent())
            throw std::invalid_argument(
                "exact-eigen requires a time-independent source (static, eff2, "
                "eff-vacuum)");
        EigenSystem es(spec.static_part);
        double dt = cfg.dt;
        const long long n = step_count(T, dt, cfg);
        Vector w = es.vectors.adjoint() * psi0.amplitudes;
        Vector psi(w.size());
        for (long long i = 0; i <= n; ++i) {
            const double t = (i == n) ? T : double(i) * dt;
            Vector ph = w;
            for (Eigen::Index j = 0; j < ph.size(); ++j)
                ph[j] *= phase_factor(-es.energies[j], t);
            psi = es.vectors * ph;
            rec.record_state(traj, t, psi);
            maybe_snapshot(i, t, psi);
        }
        traj.final_state = psi;
        return traj;
    }

    double dt = cfg.dt;
    const long long n = step_count(T, dt, cfg);
    check_dt_stability(spec, dt, cfg);

    Vector psi = psi0.amplitudes;
    Vector k1(psi.size()), k2(psi.size()), k3(psi.size()), k4(psi.size()),
        tmp(psi.size());
    rec.record_state(traj, 0.0, psi);
    maybe_snapshot(0, 0.0, psi);
    long long samples = 1;
    for (long long i = 0; i < n; ++i) {
        const double t = double(i) * dt;
        if (cfg.method == Method::Rk4Fixed) {
            rk4_step(spec, t, dt, psi, k1, k2, k3, k4, tmp);
        } else {
            const Matrix h_mid = spec.at(t + 0.5 * dt);
            magnus_step(h_mid, dt, psi, k1, k2);
        }
        if ((i + 1) % cfg.sample_every == 0 || i + 1 == n) {
            const double ts = (i + 1 == n) ? T : t + dt;
            rec.record_state(traj, ts, psi);
            maybe_snapshot(samples++, ts, psi);
        }
    }
    traj.final_state = psi;
    return traj;
}

namespace {

// interaction-picture dissipator pieces in the eigenbasis of H
struct InteractionPictureDissipator {
    Eigen::VectorXd energies;
    Matrix vectors;
    std::vector<Matrix> c_eig;   // sqrt(rate) * V^+ c V
    Matrix gamma_eig;            // sum_k rate_k (c^+ c)_eig

    InteractionPictureDissipator(const Matrix& h,
                                 const std::vector<CollapseChannel>& collapse) {
        EigenSystem es(h);
        energies = es.energies;
        vectors = es.vectors;
        const int n = int(h.rows());
        gamma_eig = Matrix::Zero(n, n);
        for (const auto& ch : collapse) {
            Matrix ce = vectors.adjoint() * ch.op.matrix * vectors;
            gamma_eig += ch.rate * (ce.adjoint() * ce);
            c_eig.push_back(std::sqrt(ch.rate) * std::move(ce));
        }
    }

    Vector phases(double t) const {
        Vector u(energies.size());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            u[i] = phase_factor(energies[i], t);
        return u;
    }

    // rho' = sum_k [ct rho ct^+ - 1/2 {(c^+c)t, rho}]
    void rhs(double t, const Matrix& rho, Matrix& out, Matrix& ct,
             Matrix& work) const {
        const Vector u = phases(t);
        const int n = int(rho.rows());
        out.setZero();
        for (const auto& c : c_eig) {
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    ct(i, j) = u[i] * c(i, j) * std::conj(u[j]);
            work.noalias() = ct * rho;
            out.noalias() += work * ct.adjoint();
        }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                ct(i, j) = u[i] * gamma_eig(i, j) * std::conj(u[j]);
        out.noalias() -= 0.5 * (ct * rho);
        out.noalias() -= 0.5 * (rho * ct);
    }

    Matrix to_schrodinger(double t, const Matrix& rho_ip) const {
        const Vector u = phases(t);
        const int n = int(rho_ip.rows());
        Matrix r(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                r(i, j) = std::conj(u[i]) * rho_ip(i, j) * u[j];
        return vectors * r * vectors.adjoint();
    }
};

void check_density_health(const Matrix& rho, double t) {
    if (std::abs(rho.trace().real() - 1.0) > 1e-8)
        throw IntegratorFailureError(
            "density trace drifted beyond 1e-8 at t = " + std::to_string(t) +
            " ns; use a smaller dt");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-7)
        throw IntegratorFailureError(
            "density positivity violated at t = " + std::to_string(t) +
            " ns (min eigenvalue " +
            std::to_string(es.eigenvalues().minCoeff()) +
            "); use a smaller dt");
}

}  // namespace

Trajectory evolve_density(Source source, const SystemParams& p,
                          const std::vector<CollapseChannel>& collapse,
                          const DensityMatrix& rho0, double T,
                          const IntegratorConfig& cfg) {
    HamiltonianSpec spec = source_spec(source, p);
    require_same_space(rho0.space, spec.space, "evolve_density");
    for (const auto& ch : collapse)
        require_same_space(ch.op.space, spec.space, "evolve_density collapse");

    Trajectory traj;
    traj.space = spec.space;
    traj.is_density = true;
    // overlap reference: a unit vector is only needed for the overlap column;
    // use the dominant eigenvector of rho0
    Eigen::SelfAdjointEigenSolver<Matrix> es0(rho0.rho);
    Eigen::Index imax;
    es0.eigenvalues().maxCoeff(&imax);
    ObservableRecorder rec(spec.space, es0.eigenvectors().col(imax));
    rec.init(traj);

    const bool dissipative = [&] {
        for (const auto& ch : collapse)
            if (ch.rate > 0.0) return true;
        return false;
    }();

    const int n_dim = spec.space.total_dim();
    const long long health_stride_target = 48;

    if (!dissipative && spec.time_independent()) {
        EigenSystem es(spec.static_part);
        double dt = cfg.dt;
        const long long n = step_count(T, dt, cfg);
        Matrix rho;
        for (long long i = 0; i <= n; ++i) {
            const double t = (i == n) ? T : double(i) * dt;
            const Matrix u = es.propagator(t);
            rho = u * rho0.rho * u.adjoint();
            rec.record_density(traj, t, rho);
        }
        traj.final_density = rho;
        return traj;
    }

    if (spec.time_independent()) {
        // exact unitary part, rk4 on the slow interaction-picture dissipator
        InteractionPictureDissipator ip(spec.static_part, collapse);
        double dt = cfg.dt;
        const long long n = step_count(T, dt, cfg);
        Matrix rho = ip.vectors.adjoint() * rho0.rho * ip.vectors;
        Matrix k1(n_dim, n_dim), k2(n_dim, n_dim), k3(n_dim, n_dim),
            k4(n_dim, n_dim), ct(n_dim, n_dim), work(n_dim, n_dim),
            tmp(n_dim, n_dim);
        Matrix rho_s = ip.to_schrodinger(0.0, rho);
        rec.record_density(traj, 0.0, rho_s);
        const long long health_stride =
            std::max<long long>(1, n / health_stride_target);
        for (long long i = 0; i < n; ++i) {
            const double t = double(i) * dt;
            ip.rhs(t, rho, k1, ct, work);
            tmp = rho + 0.5 * dt * k1;
            ip.rhs(t + 0.5 * dt, tmp, k2, ct, work);
            tmp = rho + 0.5 * dt * k2;
            ip.rhs(t + 0.5 * dt, tmp, k3, ct, work);
            tmp = rho + dt * k3;
            ip.rhs(t + dt, tmp, k4, ct, work);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if ((i + 1) % cfg.sample_every == 0 || i + 1 == n) {
                const double ts = (i + 1 == n) ? T : t + dt;
                rho_s = ip.to_schrodinger(ts, rho);
                rec.record_density(traj, ts, rho_s);
                if ((i + 1) % health_stride == 0 || i + 1 == n)
                    check_density_health(rho_s, ts);
            }
        }
        traj.final_density = rho_s;
        return traj;
    }

    // time-dependent source: plain rk4 on the full master equation
    double dt = cfg.dt;
    const long long n = step_count(T, dt, cfg);
    check_dt_stability(spec, dt, cfg);
    std::vector<Matrix> cops, ccops;
    for (const auto& ch : collapse) {
        cops.push_back(std::sqrt(ch.rate) * ch.op.matrix);
        ccops.push_back(cops.back().adjoint() * cops.back());
    }
    auto rhs = [&](double t, const Matrix& rho, Matrix& out) {
        const Matrix h = spec.at(t);
        out.noalias() = Complex(0.0, -1.0 / kHbar) * (h * rho - rho * h);
        for (std::size_t k = 0; k < cops.size(); ++k) {
            out.noalias() += cops[k] * rho * cops[k].adjoint();
            out.noalias() -= 0.5 * (ccops[k] * rho);
            out.noalias() -= 0.5 * (rho * ccops[k]);
        }
    };
    Matrix rho = rho0.rho;
    Matrix k1(n_dim, n_dim), k2(n_dim, n_dim), k3(n_dim, n_dim), k4(n_dim, n_dim),
        tmp(n_dim, n_dim);
    rec.record_density(traj, 0.0, rho);
    const long long health_stride = std::max<long long>(1, n / health_stride_target);
    for (long long i = 0; i < n; ++i) {
        const double t = double(i) * dt;
        rhs(t, rho, k1);
        tmp = rho + 0.5 * dt * k1;
        rhs(t + 0.5 * dt, tmp, k2);
        tmp = rho + 0.5 * dt * k2;
        rhs(t + 0.5 * dt, tmp, k3);
        tmp = rho + dt * k3;
        rhs(t + dt, tmp, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((i + 1) % cfg.sample_every == 0 || i + 1 == n) {
            const double ts = (i + 1 == n) ? T : t + dt;
            rec.record_density(traj, ts, rho);
            if ((i + 1) % health_stride == 0 || i + 1 == n)
                check_density_health(rho, ts);
        }
    }
    traj.final_density = rho;
    return traj;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct McwfAccum {
    // per-sample sums over trajectories
    std::vector<double> norm, re_ov, im_ov, pe_A, pe_B, n_tot, n1, n2, jumps;
    std::vector<Complex> block;  // 16 entries per sample, row-major comp block
    long long count = 0;

    explicit McwfAccum(std::size_t n_samples)
        : norm(n_samples, 0.0), re_ov(n_samples, 0.0), im_ov(n_samples, 0.0),
          pe_A(n_samples, 0.0), pe_B(n_samples, 0.0), n_tot(n_samples, 0.0),
          n1(n_samples, 0.0), n2(n_samples, 0.0), jumps(n_samples, 0.0),
          block(16 * n_samples, Complex(0.0)) {}

    void add(const McwfAccum& o) {
        auto axpy = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        axpy(norm, o.norm); axpy(re_ov, o.re_ov); axpy(im_ov, o.im_ov);
        axpy(pe_A, o.pe_A); axpy(pe_B, o.pe_B); axpy(n_tot, o.n_tot);
        axpy(n1, o.n1); axpy(n2, o.n2); axpy(jumps, o.jumps);
        for (std::size_t i = 0; i < block.size(); ++i) block[i] += o.block[i];
        count += o.count;
    }
};

}  // namespace

Trajectory mcwf_evolve(const SystemParams& p,
                       const std::vector<CollapseChannel>& collapse,
                       const StateVector& psi0, double T,
                       const IntegratorConfig& cfg, const McwfOptions& opt) {
    const BosonBasis basis = psi0.space.basis;
    if (psi0.space.factors.size() != 4)
        throw LayoutError("mcwf_evolve: standard layout required");
    HamiltonianSpec spec = spec_static(p, basis);
    require_same_space(psi0.space, spec.space, "mcwf_evolve");
    for (const auto& ch : collapse)
        require_same_space(ch.op.space, spec.space, "mcwf_evolve collapse");
    if (opt.n_trajectories < 1)
        throw std::invalid_argument("n_trajectories must be >= 1");

    const int n_dim = spec.space.total_dim();
    Matrix h_nh = spec.static_part;
    std::vector<Matrix> jump_ops;
    std::vector<double> rates;
    for (const auto& ch : collapse) {
        if (ch.rate <= 0.0) continue;
        h_nh -= Complex(0.0, 0.5 * kHbar * ch.rate) *
                (ch.op.matrix.adjoint() * ch.op.matrix);
        jump_ops.push_back(ch.op.matrix);
        rates.push_back(ch.rate);
    }

    double dt = cfg.dt;
    IntegratorConfig cfg2 = cfg;
    const long long n_steps = step_count(T, dt, cfg2);

    // dyadic family U_k = exp(-i H_nh dt / 2^k / hbar), k = 0..kmax
    constexpr int kMaxDepth = 30;
    std::vector<Matrix> u(kMaxDepth + 1);
    for (int k = 0; k <= kMaxDepth; ++k)
        u[k] = expm_general(Complex(0.0, -dt / std::pow(2.0, k) / kHbar) * h_nh);

    const long long sample_stride = cfg.sample_every;
    std::vector<long long> sample_steps;
    for (long long i = 0; i <= n_steps; ++i)
        if (i % sample_stride == 0 || i == n_steps) sample_steps.push_back(i);
    const std::size_t n_samples = sample_steps.size();

    ObservableRecorder rec(spec.space, psi0.amplitudes);

    // computational-basis indices (ff, fg, gf, gg) x vacuum; g = 0, f = 1
    const std::array<int, 4> comp = {
        basis_index(spec.space, {1, 1, 0, 0}), basis_index(spec.space, {1, 0, 0, 0}),
        basis_index(spec.space, {0, 1, 0, 0}), basis_index(spec.space, {0, 0, 0, 0})};

    const bool no_jumps = jump_ops.empty();

    auto run_trajectory = [&](std::uint64_t idx, McwfAccum& acc) {
        std::mt19937_64 rng(splitmix64(opt.seed ^ splitmix64(idx + 1)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vector psi = psi0.amplitudes;  // unnormalized within a no-jump segment
        double r = no_jumps ? -1.0 : unif(rng);
        long long jump_count = 0;
        Vector tmp(n_dim);

        auto do_jump = [&](Vector& v) {
            double total = 0.0;
            std::vector<double> w(jump_ops.size());
            for (std::size_t k = 0; k < jump_ops.size(); ++k) {
                tmp.noalias() = jump_ops[k] * v;
                w[k] = rates[k] * tmp.squaredNorm();
                total += w[k];
            }
            double pick = unif(rng) * total;
            std::size_t chosen = 0;
            for (; chosen + 1 < w.size(); ++chosen) {
                if (pick < w[chosen]) break;
                pick -= w[chosen];
            }
            v = jump_ops[chosen] * v;
            v /= v.norm();
            r = unif(rng);
            ++jump_count;
        };

        // advance by dt/2^k, locating jumps by dyadic bisection of the
        // monotone norm decay
        auto advance = [&](auto&& self, Vector& v, int k) -> void {
            Vector trial = u[std::size_t(k)] * v;
            if (no_jumps || trial.squaredNorm() >= r) {
                v = std::move(trial);
                return;
            }
            if (k == kMaxDepth) {
                do_jump(v);
                return;
            }
            self(self, v, k + 1);
            self(self, v, k + 1);
        };

        std::size_t next_sample = 0;
        for (long long i = 0; i <= n_steps; ++i) {
            if (next_sample < n_samples && sample_steps[next_sample] == i) {
                const double nrm = psi.norm();
                Vector psin = psi / nrm;
                const std::size_t s = next_sample;
                acc.norm[s] += 1.0;  // normalized trajectories
                const Complex ov = psi0.amplitudes.adjoint() * psin;
                acc.re_ov[s] += ov.real();
                acc.im_ov[s] += ov.imag();
                const Eigen::VectorXd prob = psin.cwiseAbs2();
                acc.pe_A[s] += rec.pe_A.dot(prob);
                acc.pe_B[s] += rec.pe_B.dot(prob);
                acc.n_tot[s] += rec.n_tot.dot(prob);
                acc.n1[s] += rec.n1.dot(prob);
                acc.n2[s] += rec.n2.dot(prob);
                acc.jumps[s] += double(jump_count);
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        acc.block[16 * s + 4 * a + b] +=
                            psin[comp[std::size_t(a)]] *
                            std::conj(psin[comp[std::size_t(b)]]);
                ++next_sample;
            }
            if (i < n_steps) advance(advance, psi, 0);
        }
        ++acc.count;
    };

    const int hw = int(std::thread::hardware_concurrency());
    int n_threads = opt.threads > 0 ? opt.threads : std::min(hw > 0 ? hw : 1, 8);
    n_threads = std::min<int>(n_threads, opt.n_trajectories);

    constexpr int kChunk = 64;  // fixed chunking keeps reductions order-stable
    const int n_chunks = (opt.n_trajectories + kChunk - 1) / kChunk;
    std::vector<McwfAccum> partial;
    partial.resize(std::size_t(n_chunks), McwfAccum(n_samples));
    std::atomic<int> next_chunk{0};
    auto worker = [&] {
        for (;;) {
            const int c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const int lo = c * kChunk;
            const int hi = std::min(lo + kChunk, opt.n_trajectories);
            for (int idx = lo; idx < hi; ++idx)
                run_trajectory(std::uint64_t(idx), partial[std::size_t(c)]);
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    McwfAccum total(n_samples);
    for (const auto& acc : partial) total.add(acc);

    Trajectory traj;
    traj.space = spec.space;
    rec.init(traj);
    traj.observables["jump_mean"] = {};
    static const char* kComp[4] = {"ff", "fg", "gf", "gg"};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            traj.observables[std::string("re_rho_") + kComp[a] + kComp[b]] = {};
            traj.observables[std::string("im_rho_") + kComp[a] + kComp[b]] = {};
        }
    const double inv = 1.0 / double(total.count);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double t =
            sample_steps[s] == n_steps ? T : double(sample_steps[s]) * dt;
        traj.times.push_back(t);
        auto& o = traj.observables;
        o["norm"].push_back(total.norm[s] * inv);
        o["re_overlap"].push_back(total.re_ov[s] * inv);
        o["im_overlap"].push_back(total.im_ov[s] * inv);
        o["Pe_A"].push_back(total.pe_A[s] * inv);
        o["Pe_B"].push_back(total.pe_B[s] * inv);
        o["n_photon_total"].push_back(total.n_tot[s] * inv);
        o["n_c1"].push_back(basis == BosonBasis::NormalModes ? total.n1[s] * inv
                                                             : 0.0);
        o["n_c2"].push_back(basis == BosonBasis::NormalModes ? total.n2[s] * inv
                                                             : 0.0);
        o["jump_mean"].push_back(total.jumps[s] * inv);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                const Complex v = total.block[16 * s + 4 * std::size_t(a) +
                                              std::size_t(b)] * inv;
                o[std::string("re_rho_") + kComp[a] + kComp[b]].push_back(v.real());
                o[std::string("im_rho_") + kComp[a] + kComp[b]].push_back(v.imag());
            }
    }
    return traj;
}

StateVector frame_map(const StateVector& state, double t_ns,
                      FrameDirection direction, const SystemParams& p) {
    if (t_ns < 0.0) throw std::invalid_argument("frame_map: t must be >= 0");
    const HilbertSpace lab = make_space(p.n_max, BosonBasis::Lab);
    const HilbertSpace normal = make_space(p.n_max, BosonBasis::NormalModes);
    const Matrix rot = normal_mode_rotation(lab);  // psi_lab = R psi_normal
    const Operator hd = static_frame_diagonal(p);
    Vector phase(hd.matrix.rows());
    for (Eigen::Index i = 0; i < phase.size(); ++i)
        phase[i] = phase_factor(hd.matrix(i, i).real(), t_ns);

    if (direction == FrameDirection::StaticToEq3) {
        require_same_space(state.space, lab, "frame_map");
        Vector v = rot.adjoint() * state.amplitudes;
        v.array() *= phase.array();
        return StateVector(normal, std::move(v));
    }
    require_same_space(state.space, normal, "frame_map");
    Vector v = state.amplitudes;
    v.array() *= phase.array().conjugate();
    return StateVector(lab, rot * v);
}

}  // namespace cpg
