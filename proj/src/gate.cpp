#include "cpg/gate.hpp"

#include <Eigen/SVD>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace cpg {

namespace {

constexpr double kUnwrapLimit = kPi / 2.0;

double wrap_to_pi(double x) {
    while (x > kPi) x -= 2.0 * kPi;
    while (x <= -kPi) x += 2.0 * kPi;
    return x;
}

}  // namespace

StateVector computational_state(const HilbertSpace& space, int index) {
    if (index < 0 || index > 3)
        throw std::invalid_argument("computational_state: index must be 0..3");
    Vector v = Vector::Zero(space.total_dim());
    if (space.factors.size() == 1) {
        v[index] = 1.0;
    } else {
        // (ff, fg, gf, gg): g = level 0, f = level 1
        const int qa = index < 2 ? 1 : 0;
        const int qb = (index % 2 == 0) ? 1 : 0;
        v[basis_index(space, {qa, qb, 0, 0})] = 1.0;
    }
    return StateVector(space, std::move(v));
}

PhaseSet extract_phases(const std::array<Trajectory, 4>& trajs) {
    PhaseSet out{};
    for (int s = 0; s < 4; ++s) {
        const auto& re = trajs[s].series("re_overlap");
        const auto& im = trajs[s].series("im_overlap");
        if (re.size() < 2)
            throw SamplingTooCoarseError("extract_phases: need at least 2 samples");
        double phi = 0.0;
        double prev = std::atan2(im[0], re[0]);
        double min_ret = 1.0;
        for (std::size_t i = 1; i < re.size(); ++i) {
            const double mag = std::hypot(re[i], im[i]);
            if (mag < 0.5)
                throw LeakageTooLargeError(
                    std::string("extract_phases: |<psi0|psi>| dropped below 0.5 "
                                "for state ") + kCompLabels[s]);
            min_ret = std::min(min_ret, mag * mag);
            const double raw = std::atan2(im[i], re[i]);
            const double step = wrap_to_pi(raw - prev);
            if (std::abs(step) >= kUnwrapLimit)
                throw SamplingTooCoarseError(
                    std::string("extract_phases: phase increment ") +
                    std::to_string(step) + " rad reaches pi/2 for state " +
                    kCompLabels[s] + "; sample more densely");
            phi += step;
            prev = raw;
        }
        out.phi[s] = phi;
        out.return_prob_end[s] = re.back() * re.back() + im.back() * im.back();
        out.return_prob_min[s] = min_ret;
    }
    out.T = trajs[0].times.back();
    return out;
}

double conditional_phase(const PhaseSet& p) {
    return p.phi[3] - p.phi[2] - p.phi[1] + p.phi[0];
}

Eigen::Matrix4cd apply_correction(const PhaseSet& p) {
    Eigen::Matrix4cd c = Eigen::Matrix4cd::Zero();
    c(0, 0) = 1.0;
    c(1, 1) = std::exp(Complex(0.0, -p.phi[1]));
    c(2, 2) = std::exp(Complex(0.0, -p.phi[2]));
    c(3, 3) = std::exp(Complex(0.0, -(p.phi[1] + p.phi[2])));
    return c;
}

Eigen::Matrix4cd ideal_cz() {
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    u(3, 3) = -1.0;
    return u;
}

FidelityResult gate_fidelity(const Eigen::Matrix4cd& actual,
                             const Eigen::Matrix4cd& ideal) {
    const Complex tr = (ideal.adjoint() * actual).trace();
    FidelityResult r{};
    r.fidelity_trace = std::abs(tr) / 4.0;
    r.fidelity_avg = (std::norm(tr) + 4.0) / 20.0;
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(actual);
    const double smin = svd.singularValues().minCoeff();
    r.leakage = 1.0 - smin * smin;
    return r;
}

PopulationStats population_stats(const Trajectory& traj) {
    const auto& pa = traj.series("Pe_A");
    const auto& pb = traj.series("Pe_B");
    const auto& np = traj.series("n_photon_total");
    PopulationStats s{0.0, 0.0, 0.0};
    for (double v : pa) s.max_Pe_A = std::max(s.max_Pe_A, v);
    for (double v : pb) s.max_Pe_B = std::max(s.max_Pe_B, v);
    for (double v : np) s.max_photon = std::max(s.max_photon, v);
    return s;
}

DecoherenceBudget decoherence_budget(const SystemParams& p,
                                     const DerivedCouplings& d,
                                     const MeasuredPopulations& measured) {
    const double inf = std::numeric_limits<double>::infinity();
    double pe, pc;
    bool from_measured = measured.P_e.has_value() || measured.P_photon.has_value();
    if (measured.P_e.has_value()) {
        pe = *measured.P_e;
    } else {
        pe = std::max(std::norm(p.Omega_A) / (p.Delta_A * p.Delta_A),
                      std::norm(p.Omega_B) / (p.Delta_B * p.Delta_B));
    }
    if (measured.P_photon.has_value()) {
        pc = *measured.P_photon;
    } else {
        const double lam_max =
            std::max({std::abs(d.lambda_A1), std::abs(d.lambda_A2),
                      std::abs(d.lambda_B1), std::abs(d.lambda_B2)});
        pc = lam_max * lam_max / (p.delta * p.delta);
    }
    DecoherenceBudget b{};
    b.t_e = pe > 0.0 ? p.tau_e / pe : inf;
    b.t_c = pc > 0.0 ? p.tau_c / pc : inf;
    const double coherence = std::min(b.t_e, b.t_c);
    b.gates_per_coherence =
        std::isfinite(coherence) ? std::floor(coherence / d.t_gate) : inf;
    b.from_measured = from_measured;
    return b;
}

const char* protocol_engine_name(ProtocolEngine e) {
    switch (e) {
        case ProtocolEngine::StaticExact: return "static-exact";
        case ProtocolEngine::Eq3Rk4: return "eq3-rk4";
        case ProtocolEngine::EffVacuum: return "eff-vacuum";
    }
    return "?";
}

std::optional<ProtocolEngine> protocol_engine_from_name(const std::string& s) {
    if (s == "static-exact") return ProtocolEngine::StaticExact;
    if (s == "eq3-rk4") return ProtocolEngine::Eq3Rk4;
    if (s == "eff-vacuum") return ProtocolEngine::EffVacuum;
    return std::nullopt;
}

Trajectory nojump_trajectory(const SystemParams& p,
                             const std::vector<CollapseChannel>& collapse,
                             const StateVector& psi0, double T,
                             double sample_dt) {
    HamiltonianSpec spec = spec_static(p, psi0.space.basis);
    require_same_space(psi0.space, spec.space, "nojump_trajectory");
    Matrix h_nh = spec.static_part;
    for (const auto& ch : collapse)
        h_nh -= Complex(0.0, 0.5 * kHbar * ch.rate) *
                (ch.op.matrix.adjoint() * ch.op.matrix);
    double dt = sample_dt;
    long long n = std::llround(std::ceil(T / dt - 1e-12));
    if (n < 1) n = 1;
    dt = T / double(n);
    const Matrix u = expm_general(Complex(0.0, -dt / kHbar) * h_nh);

    Trajectory traj;
    traj.space = spec.space;
    // same series names as evolve_state
    SpaceOps ops(spec.space);
    const Eigen::VectorXd pe_A = ops.pe_A.diagonal().real();
    const Eigen::VectorXd pe_B = ops.pe_B.diagonal().real();
    const Eigen::VectorXd n1 = ops.n1.diagonal().real();
    const Eigen::VectorXd n2 = ops.n2.diagonal().real();
    const Eigen::VectorXd ntotd = n1 + n2;
    const Matrix cross = ops.m1.adjoint() * ops.m2;
    for (const char* k : {"norm", "re_overlap", "im_overlap", "Pe_A", "Pe_B",
                          "n_photon_total", "n_c1", "n_c2"})
        traj.observables[k] = {};
    Vector psi = psi0.amplitudes;
    for (long long i = 0; i <= n; ++i) {
        const double t = (i == n) ? T : double(i) * dt;
        Vector psin = psi / psi.norm();
        traj.times.push_back(t);
        auto& o = traj.observables;
        o["norm"].push_back(1.0);
        const Complex ov = psi0.amplitudes.adjoint() * psin;
        o["re_overlap"].push_back(ov.real());
        o["im_overlap"].push_back(ov.imag());
        const Eigen::VectorXd prob = psin.cwiseAbs2();
        o["Pe_A"].push_back(pe_A.dot(prob));
        o["Pe_B"].push_back(pe_B.dot(prob));
        const double ntot = ntotd.dot(prob);
        o["n_photon_total"].push_back(ntot);
        if (spec.space.basis == BosonBasis::NormalModes) {
            o["n_c1"].push_back(n1.dot(prob));
            o["n_c2"].push_back(n2.dot(prob));
        } else {
            const double x = (psin.adjoint() * (cross * psin))(0).real();
            o["n_c1"].push_back(0.5 * ntot - x);
            o["n_c2"].push_back(0.5 * ntot + x);
        }
        if (i < n) psi = u * psi;
        traj.final_state = psin;
    }
    return traj;
}

namespace {

std::array<Trajectory, 4> evolve_basis_states(ProtocolEngine engine,
                                              const SystemParams& p, double T,
                                              const ProtocolOptions& opt) {
    Source source;
    IntegratorConfig cfg;
    switch (engine) {
        case ProtocolEngine::StaticExact:
            source = Source::Static;
            cfg.method = Method::ExactEigen;
            cfg.dt = opt.sample_dt;
            break;
        case ProtocolEngine::EffVacuum:
            source = Source::EffVacuum;
            cfg.method = Method::ExactEigen;
            cfg.dt = opt.sample_dt;
            break;
        case ProtocolEngine::Eq3Rk4:
            source = Source::Eq3;
            cfg.method = Method::Rk4Fixed;
            cfg.dt = opt.rk4_dt;
            cfg.sample_every =
                std::max(1, int(std::llround(opt.sample_dt / opt.rk4_dt)));
            cfg.allow_unstable_dt = opt.allow_unstable_dt;
            break;
    }
    const HilbertSpace space = source_space(source, p);
    std::array<Trajectory, 4> out;
    int n_threads = opt.threads > 0 ? opt.threads : 4;
    n_threads = std::min(n_threads, 4);
    if (n_threads <= 1) {
        for (int s = 0; s < 4; ++s)
            out[s] = evolve_state(source, p, computational_state(space, s), T, cfg);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex err_mu;
        std::atomic<int> next{0};
        auto work = [&] {
            for (;;) {
                const int s = next.fetch_add(1);
                if (s >= 4) return;
                try {
                    out[s] = evolve_state(source, p,
                                          computational_state(space, s), T, cfg);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        };
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    return out;
}

void enforce_sampling(const DerivedCouplings& d, double sample_dt) {
    if (sample_dt > 1e-3)
        throw SamplingTooCoarseError(
            "protocol sample spacing must be <= 1e-3 ns");
    const double rate =
        (std::abs(d.Phi_A) + std::abs(d.Phi_B) + std::abs(d.eta)) / kHbar;
    if (sample_dt * rate > 0.8 * kUnwrapLimit)
        throw SamplingTooCoarseError(
            "protocol sample spacing " + std::to_string(sample_dt) +
            " ns too coarse for the expected phase rate " +
            std::to_string(rate) + " rad/ns");
}

}  // namespace

GateReport run_cz_protocol(const SystemParams& p, const ProtocolOptions& opt) {
    GateReport rep{};
    rep.derived = derived_couplings(p);
    rep.regime = regime_report(p, rep.derived, opt.regime_warn_threshold);
    if (!rep.regime.pass)
        rep.warnings.push_back(
            "perturbative-regime ratio below threshold (min ratio " +
            std::to_string(rep.regime.min_ratio) + ")");
    enforce_sampling(rep.derived, opt.sample_dt);

    rep.t_gate_analytic = std::abs(rep.derived.t_gate);
    double T = opt.horizon > 0.0 ? opt.horizon : rep.t_gate_analytic;

    if (opt.calibrate && opt.engine != ProtocolEngine::EffVacuum) {
        const double Tc = opt.calibration_horizon;
        auto trajs = evolve_basis_states(opt.engine, p, Tc, opt);
        const PhaseSet ph = extract_phases(trajs);
        const double rate = conditional_phase(ph) / Tc;
        if (rate != 0.0) {
            T = kPi / std::abs(rate);
            rep.warnings.push_back("gate time calibrated from the measured "
                                   "conditional-phase rate");
        }
    }
    rep.t_gate_used = T;
    rep.with_decay = opt.with_decay;

    // closed-system pass: phases, correction, metrics
    auto trajs = evolve_basis_states(opt.engine, p, T, opt);
    const PhaseSet phases = extract_phases(trajs);
    rep.phi = phases.phi;
    rep.return_prob = phases.return_prob_end;
    rep.return_prob_min = phases.return_prob_min;
    rep.conditional_phase_rad = conditional_phase(phases);
    rep.eta_sim_rate = rep.conditional_phase_rad / T;
    rep.eta_sim = -rep.eta_sim_rate * kHbar;

    const HilbertSpace space = trajs[0].space;
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    for (int col = 0; col < 4; ++col) {
        const Vector& fin = trajs[col].final_state;
        for (int row = 0; row < 4; ++row) {
            const StateVector basis = computational_state(space, row);
            // basis states are unit vectors; take the single amplitude
            Eigen::Index idx;
            basis.amplitudes.cwiseAbs().maxCoeff(&idx);
            m(row, col) = fin[idx];
        }
    }
    const Eigen::Matrix4cd mc = apply_correction(phases) * m;
    const FidelityResult f = gate_fidelity(mc, ideal_cz());
    rep.fidelity_trace = f.fidelity_trace;
    rep.fidelity_avg = f.fidelity_avg;
    rep.leakage = f.leakage;
    for (int s = 0; s < 3; ++s)
        rep.corrected_residual_phases[s] = std::abs(std::arg(mc(s, s)));

    PopulationStats stats{0.0, 0.0, 0.0};
    for (const auto& tr : trajs) {
        const PopulationStats s = population_stats(tr);
        stats.max_Pe_A = std::max(stats.max_Pe_A, s.max_Pe_A);
        stats.max_Pe_B = std::max(stats.max_Pe_B, s.max_Pe_B);
        stats.max_photon = std::max(stats.max_photon, s.max_photon);
    }
    rep.max_Pe_A = stats.max_Pe_A;
    rep.max_Pe_B = stats.max_Pe_B;
    rep.max_photon = stats.max_photon;

    rep.budget_analytic = decoherence_budget(p, rep.derived, {});
    MeasuredPopulations meas;
    meas.P_e = std::max(stats.max_Pe_A, stats.max_Pe_B);
    meas.P_photon = stats.max_photon;
    rep.budget_measured = decoherence_budget(p, rep.derived, meas);

    if (opt.with_decay && opt.engine != ProtocolEngine::EffVacuum) {
        const BosonBasis basis = space.basis;
        const auto collapse = collapse_operators(p, basis);

        // phases and populations conditional on no jump (deterministic)
        std::array<Trajectory, 4> nj;
        for (int s = 0; s < 4; ++s)
            nj[s] = nojump_trajectory(p, collapse, computational_state(space, s),
                                      T, opt.sample_dt);
        const PhaseSet phases_nj = extract_phases(nj);
        rep.phi = phases_nj.phi;
        rep.return_prob = phases_nj.return_prob_end;
        rep.return_prob_min = phases_nj.return_prob_min;
        rep.conditional_phase_rad = conditional_phase(phases_nj);
        rep.eta_sim_rate = rep.conditional_phase_rad / T;
        rep.eta_sim = -rep.eta_sim_rate * kHbar;

        // ensemble on the equal superposition
        Vector plus = Vector::Zero(space.total_dim());
        for (int s = 0; s < 4; ++s) {
            const StateVector b = computational_state(space, s);
            plus += 0.5 * b.amplitudes;
        }
        IntegratorConfig mc_cfg;
        mc_cfg.dt = 1e-3;
        mc_cfg.sample_every =
            std::max<long long>(1, std::llround(T / mc_cfg.dt / 20.0));
        McwfOptions mo;
        mo.n_trajectories = opt.n_trajectories;
        mo.seed = opt.seed;
        mo.threads = opt.threads;
        const Trajectory ens = mcwf_evolve(p, collapse, StateVector(space, plus),
                                           T, mc_cfg, mo);
        // mean comp-block density at T
        Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                const std::string key = std::string(kCompLabels[a]) + kCompLabels[b];
                rho(a, b) = Complex(ens.series("re_rho_" + key).back(),
                                    ens.series("im_rho_" + key).back());
            }
        rep.decay_block_population = rho.trace().real();
        rep.decay_jump_mean = ens.series("jump_mean").back();

        Eigen::Vector4cd psi_in;
        psi_in << 0.5, 0.5, 0.5, 0.5;
        const Eigen::Vector4cd target =
            apply_correction(phases_nj).adjoint() * (ideal_cz() * psi_in);
        rep.decay_state_fidelity = (target.adjoint() * rho * target)(0).real();

        // ff-gg coherence attenuation vs the closed-system run at the same time
        const Complex coh_open(ens.series("re_rho_ffgg").back(),
                               ens.series("im_rho_ffgg").back());
        // closed-system reference: amplitudes of the evolved basis states
        auto comp_index = [&](int s) {
            Eigen::Index i;
            computational_state(space, s).amplitudes.cwiseAbs().maxCoeff(&i);
            return i;
        };
        const Complex a_ff = trajs[0].final_state[comp_index(0)];
        const Complex a_gg = trajs[3].final_state[comp_index(3)];
        const Complex coh_closed = 0.25 * a_ff * std::conj(a_gg);
        const double ratio =
            std::abs(coh_closed) > 0.0 ? std::abs(coh_open) / std::abs(coh_closed)
                                       : 0.0;
        rep.decay_coherence_ratio = ratio;
        rep.decay_coherence_rate = ratio > 0.0 ? -std::log(ratio) / T : 0.0;
    }
    return rep;
}

}  // namespace cpg
