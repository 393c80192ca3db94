import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from seebeam import algorithms as alg
from seebeam import lmi
from seebeam.channel import UncertaintyBall, draw_channels, sample_ball, worst_case_quadratic
from seebeam.errors import ContractError, InvalidConfigError
from seebeam.model import (
    BeamformingSolution,
    HermitianMatrix,
    SystemConfig,
    circuit_power,
    quad_form,
)
from seebeam.sdpcore import rank_ratio


def scalar_theta(cfg, t):
    return lmi.theta(t, 1.0, cfg.bandwidth_hz, cfg.r_aux_nats_s)


def scalar_f(cfg, channels, t):
    return scalar_theta(cfg, t) * cfg.noise_lue_w / np.linalg.norm(channels.h[0]) ** 2


class TestSolvePowerMin:
    def test_scalar_closed_form(self, cfg_scalar, channels_scalar):
        t = 2.5e5
        res = alg.solve_power_min(t, channels_scalar, cfg_scalar)
        assert res.ok
        assert res.f_t == pytest.approx(scalar_f(cfg_scalar, channels_scalar, t),
                                        rel=1e-6)
        # optimal beam is the matched filter: dominant eigenvector along h
        lam, v = np.linalg.eigh(res.solution.w_mats[0].m)[0][-1], None
        _, vecs = np.linalg.eigh(res.solution.w_mats[0].m)
        h = channels_scalar.h[0]
        overlap = abs(vecs[:, -1].conj() @ h) / np.linalg.norm(h)
        assert overlap == pytest.approx(1.0, abs=1e-5)

    def test_zero_demand_zero_power(self):
        cfg = SystemConfig(n_eve=0, eve_dist_m=(), r_aux_nats_s=0.0, p_req_w=0.0)
        ch = draw_channels(cfg, 3)
        res = alg.solve_power_min(0.0, ch, cfg)
        assert res.ok
        assert res.f_t == pytest.approx(0.0, abs=1e-7)

    def test_full_instance_feasible_and_psd(self, cfg_default, channels_default):
        res = alg.solve_power_min(2e5, channels_default, cfg_default)
        assert res.ok
        assert res.solution.an_cov.is_psd()
        for n in range(cfg_default.n_lue):
            psr = lmi.build_psr(n, 2e5, channels_default.h[n], cfg_default)
            assert psr.relative_residual(res.solution) >= -1e-6
        assert all(z >= -1e-9 for row in res.zetas for z in row)
        assert all(e >= -1e-9 for e in res.etas)

    def test_power_dominance_chain(self, cfg_default, channels_default):
        t = 2e5
        f_sdp = alg.solve_power_min(t, channels_default, cfg_default).f_t
        f_z = alg.solve_zfbf_power_min(t, channels_default, cfg_default).f_t
        f_m = alg.solve_mrt_zfbf_an(t, channels_default, cfg_default).f_t
        slack = 1e-5
        assert f_sdp <= f_z * (1 + slack)
        assert f_z <= f_m * (1 + slack)


class TestZfbf:
    def test_bases_orthonormal_and_nulling(self, cfg_default, channels_default):
        phi, xis = alg.zfbf_bases(channels_default)
        nt, nl = cfg_default.n_tx, cfg_default.n_lue
        assert phi.shape == (nt, nt - nl)
        assert np.allclose(phi.conj().T @ phi, np.eye(nt - nl), atol=1e-12)
        for h in channels_default.h:
            assert np.abs(h.conj() @ phi).max() < 1e-10
        for n, xi in enumerate(xis):
            assert xi.shape == (nt, nt - nl + 1)
            assert np.allclose(xi.conj().T @ xi, np.eye(nt - nl + 1), atol=1e-12)
            for k, h in enumerate(channels_default.h):
                if k != n:
                    assert np.abs(h.conj() @ xi).max() < 1e-10

    def test_single_user_basis_square(self, channels_scalar):
        _, xis = alg.zfbf_bases(channels_scalar)
        assert xis[0].shape == (channels_scalar.n_tx, channels_scalar.n_tx)

    def test_too_few_antennas_rejected(self):
        cfg = SystemConfig(n_tx=4, n_lue=3)
        ch = draw_channels(cfg, 0)
        squeezed = SystemConfig(n_tx=4, n_lue=3)
        # shrink the channel set to a 3-antenna system to trip the guard
        from seebeam.channel import ChannelSet
        bad = ChannelSet(h=tuple(h[:3] for h in ch.h),
                         g_e_bar=tuple(g[:3] for g in ch.g_e_bar),
                         g_h_bar=tuple(g[:3] for g in ch.g_h_bar),
                         theta_e=ch.theta_e, theta_h=ch.theta_h)
        with pytest.raises(InvalidConfigError):
            alg.zfbf_bases(bad)

    def test_reconstruction_interference_free(self, cfg_default, channels_default):
        t = 2e5
        res = alg.solve_zfbf_power_min(t, channels_default, cfg_default)
        assert res.ok
        sol = res.solution
        for n, h in enumerate(channels_default.h):
            for k in range(cfg_default.n_lue):
                if k != n:
                    cross = quad_form(h, sol.w_mats[k])
                    assert abs(cross) < 1e-10 * max(1.0, sol.transmit_power())
            an = quad_form(h, sol.an_cov)
            assert abs(an) < 1e-10 * max(1.0, sol.transmit_power())

    def test_rate_demand_met_with_equality(self, cfg_default, channels_default):
        t = 2e5
        res = alg.solve_zfbf_power_min(t, channels_default, cfg_default)
        for n, h in enumerate(channels_default.h):
            th = lmi.theta(t, cfg_default.psr_ratios[n], cfg_default.bandwidth_hz,
                           cfg_default.r_aux_nats_s)
            sinr = quad_form(h, res.solution.w_mats[n]) / cfg_default.noise_lue_w
            assert sinr == pytest.approx(th, rel=1e-6)

    def test_reduced_blocks_rank_one(self, cfg_default, channels_default):
        res = alg.solve_zfbf_power_min(2e5, channels_default, cfg_default)
        red_w, _ = res.reduced
        assert all(rank_ratio(w.m) <= 1e-6 for w in red_w)


class TestMrtZfbf:
    def test_single_user_is_pure_mrt(self, cfg_scalar, channels_scalar):
        t = 2e5
        powers, beams = alg.mrt_zfbf_powers(t, channels_scalar, cfg_scalar)
        h = channels_scalar.h[0]
        expect_p = scalar_theta(cfg_scalar, t) * cfg_scalar.noise_lue_w / np.linalg.norm(h) ** 2
        assert powers[0] == pytest.approx(expect_p, rel=1e-12)
        direction = beams[0] / np.linalg.norm(beams[0])
        assert abs(direction.conj() @ h) / np.linalg.norm(h) == pytest.approx(1.0)

    def test_sinr_exactly_theta(self, cfg_default, channels_default):
        t = 1.5e5
        powers, beams = alg.mrt_zfbf_powers(t, channels_default, cfg_default)
        sol = BeamformingSolution.from_arrays(
            [np.outer(b, b.conj()) for b in beams],
            np.zeros((cfg_default.n_tx, cfg_default.n_tx)))
        for n, h in enumerate(channels_default.h):
            th = lmi.theta(t, cfg_default.psr_ratios[n], cfg_default.bandwidth_hz,
                           cfg_default.r_aux_nats_s)
            # zero interference by construction, so SINR = signal / noise
            sinr = quad_form(h, sol.w_mats[n]) / cfg_default.noise_lue_w
            assert sinr == pytest.approx(th, rel=1e-10)
            for k in range(cfg_default.n_lue):
                if k != n:
                    assert quad_form(h, sol.w_mats[k]) < 1e-12

    def test_power_scales_with_theta(self, cfg_default, channels_default):
        p1, _ = alg.mrt_zfbf_powers(1e5, channels_default, cfg_default)
        p2, _ = alg.mrt_zfbf_powers(2e5, channels_default, cfg_default)
        for n in range(cfg_default.n_lue):
            th1 = lmi.theta(1e5, cfg_default.psr_ratios[n], cfg_default.bandwidth_hz,
                            cfg_default.r_aux_nats_s)
            th2 = lmi.theta(2e5, cfg_default.psr_ratios[n], cfg_default.bandwidth_hz,
                            cfg_default.r_aux_nats_s)
            assert p2[n] / p1[n] == pytest.approx(th2 / th1, rel=1e-12)

    def test_no_adversaries_needs_no_jamming(self):
        cfg = SystemConfig(n_eve=0, n_ehn=0, eve_dist_m=(), ehn_dist_m=())
        ch = draw_channels(cfg, 5)
        res = alg.solve_mrt_zfbf_an(1e5, ch, cfg)
        assert res.ok
        assert res.solution.an_cov.trace() == pytest.approx(0.0, abs=1e-8)

    def test_solution_robust_by_sampling(self, cfg_default, channels_default):
        t = 1.5e5
        res = alg.solve_mrt_zfbf_an(t, channels_default, cfg_default)
        assert res.ok
        _assert_robust_by_sampling(res.solution, channels_default, cfg_default,
                                   count=2000)


def _assert_robust_by_sampling(sol, channels, config, count=2000, rel_slack=1e-6):
    cap = np.exp(config.r_aux_tilde) - 1.0
    for m in range(config.n_eve):
        pts = sample_ball(channels.eve_ball(m), count, 1000 + m)
        for n in range(config.n_lue):
            sig = np.real(np.einsum("ki,ij,kj->k", pts.conj(), sol.w_mats[n].m, pts))
            den = config.noise_eve_w + np.real(np.einsum(
                "ki,ij,kj->k", pts.conj(),
                sum(sol.w_mats[k].m for k in range(config.n_lue) if k != n)
                + sol.an_cov.m, pts))
            assert (sig / den).max() <= cap * (1 + rel_slack)
    y = sum(w.m for w in sol.w_mats) + sol.an_cov.m
    for i in range(config.n_ehn):
        pts = sample_ball(channels.ehn_ball(i), count, 2000 + i)
        harv = config.eh_eff * np.real(np.einsum("ki,ij,kj->k", pts.conj(), y, pts))
        assert harv.min() >= config.p_req_w * (1 - rel_slack)


class TestFeasibilityRecovery:
    def test_hand_computed_factor(self):
        cfg = SystemConfig(n_tx=2, n_lue=1, n_eve=0, n_ehn=0, psr_ratios=(1.0,),
                           lue_dist_m=(16.0,), eve_dist_m=(), ehn_dist_m=(),
                           noise_lue_w=1.0, bandwidth_hz=1.0,
                           r_aux_nats_s=np.log(2.0))   # theta(0) = 1
        from seebeam.channel import ChannelSet
        h = np.array([1.0, 0.0], dtype=complex)
        ch = ChannelSet(h=(h,), g_e_bar=(), g_h_bar=(), theta_e=(), theta_h=())
        sol = BeamformingSolution.from_arrays(
            [np.diag([2.0, 0.0]).astype(complex)], np.diag([0.0, 5.0]).astype(complex))
        out = alg.feasibility_recovery(sol, 0.0, ch, cfg)
        # y = (theta/(1+theta)) (tr(H(W+Q)) + 1)/tr(HW) = 0.5 * 3/2 = 0.75
        assert out.w_mats[0].m[0, 0].real == pytest.approx(1.5)
        assert out.an_cov.m[0, 0].real == pytest.approx(0.5)
        assert out.an_cov.m[1, 1].real == pytest.approx(5.0)
        psr = lmi.build_psr(0, 0.0, h, cfg)
        assert psr.residual(out) == pytest.approx(0.0, abs=1e-12)
        assert out.transmit_power() == pytest.approx(sol.transmit_power(), rel=1e-15)

    def test_identity_on_active_input(self, cfg_default, channels_default):
        t = 2e5
        res = alg.solve_zfbf_power_min(t, channels_default, cfg_default)
        out = alg.feasibility_recovery(res.solution, t, channels_default, cfg_default)
        for w_in, w_out in zip(res.solution.w_mats, out.w_mats):
            assert np.allclose(w_in.m, w_out.m, atol=1e-8 * max(1, w_in.trace()))

    def test_activates_and_preserves_power(self, cfg_default, channels_default):
        t = 2e5
        res = alg.solve_power_min(t, channels_default, cfg_default)
        loose = BeamformingSolution(
            tuple(HermitianMatrix(1.3 * w.m) for w in res.solution.w_mats),
            res.solution.an_cov)
        out = alg.feasibility_recovery(loose, t, channels_default, cfg_default)
        assert out.transmit_power() == pytest.approx(loose.transmit_power(), rel=1e-13)
        for n in range(cfg_default.n_lue):
            psr = lmi.build_psr(n, t, channels_default.h[n], cfg_default)
            assert abs(psr.relative_residual(out)) <= 1e-8

    def test_infeasible_input_rejected(self, cfg_default, channels_default):
        sol = BeamformingSolution.from_arrays(
            [1e-9 * np.eye(7) for _ in range(3)], np.zeros((7, 7)))
        with pytest.raises(ContractError):
            alg.feasibility_recovery(sol, 5e5, channels_default, cfg_default)


class TestRankOneRecovery:
    def test_rank_one_unchanged(self, cfg_default, channels_default):
        w = [np.outer(h, h.conj()) for h in channels_default.h]
        sol = BeamformingSolution.from_arrays(w, np.eye(7) * 1e-3)
        out = alg.rank_one_recovery(sol, channels_default, cfg_default)
        for a, b in zip(sol.w_mats, out.w_mats):
            assert np.allclose(a.m, b.m)

    def test_synthetic_split(self, cfg_default, channels_default):
        h = channels_default.h[0]
        v = h / np.linalg.norm(h)
        # component invisible to the user
        rng = np.random.default_rng(0)
        raw = rng.normal(size=7) + 1j * rng.normal(size=7)
        pi = raw - (v.conj() @ raw) * v
        pi /= np.linalg.norm(pi)
        w0 = 2.0 * np.outer(v, v.conj()) + 0.7 * np.outer(pi, pi.conj())
        others = [np.outer(channels_default.h[k], channels_default.h[k].conj())
                  for k in (1, 2)]
        sol = BeamformingSolution.from_arrays([w0] + others, 1e-3 * np.eye(7))
        out = alg.rank_one_recovery(sol, channels_default, cfg_default)
        assert rank_ratio(out.w_mats[0].m) <= 1e-10
        assert np.allclose(out.w_mats[0].m, 2.0 * np.outer(v, v.conj()), atol=1e-10)
        assert np.allclose(out.an_cov.m,
                           1e-3 * np.eye(7) + 0.7 * np.outer(pi, pi.conj()), atol=1e-10)
        assert out.transmit_power() == pytest.approx(sol.transmit_power(), rel=1e-13)

    def test_solver_output_recovers_rank_one(self, cfg_default, channels_default):
        res = alg.solve_power_min(2e5, channels_default, cfg_default)
        out = alg.rank_one_recovery(res.solution, channels_default, cfg_default)
        assert max(rank_ratio(w.m) for w in out.w_mats) <= 1e-6


class TestFindTmax:
    def test_scalar_closed_form(self, cfg_scalar, channels_scalar):
        tm = alg.find_tmax(channels_scalar, cfg_scalar)
        h2 = np.linalg.norm(channels_scalar.h[0]) ** 2
        closed = cfg_scalar.bandwidth_hz * (
            np.log1p(cfg_scalar.p_max_w * h2 / cfg_scalar.noise_lue_w)
            - cfg_scalar.r_aux_nats_s / cfg_scalar.bandwidth_hz)
        assert tm.origin_feasible
        assert tm.t_max == pytest.approx(closed, rel=2e-6)
        assert abs(tm.at_tmax.f_t - cfg_scalar.p_max_w) <= 1e-4 * cfg_scalar.p_max_w

    def test_budget_below_origin_flags_outage(self, cfg_default, channels_default):
        squeezed = cfg_default.with_(p_max_w=1e-6)
        tm = alg.find_tmax(channels_default, squeezed)
        assert not tm.origin_feasible
        assert tm.t_max == 0.0

    def test_monotone_in_budget(self, cfg_scalar, channels_scalar):
        t1 = alg.find_tmax(channels_scalar, cfg_scalar).t_max
        t2 = alg.find_tmax(channels_scalar,
                           cfg_scalar.with_(p_max_w=2 * cfg_scalar.p_max_w)).t_max
        assert t2 >= t1


def scalar_see(cfg, channels, t):
    pcir = circuit_power(cfg.p_sp_w, cfg.n_tx)
    return t / (scalar_f(cfg, channels, t) / cfg.amp_eff + pcir)


class TestTsbaj:
    def test_scalar_matches_1d_oracle(self, cfg_scalar, channels_scalar):
        out = alg.sdp_tsbaj(channels_scalar, cfg_scalar)
        assert not out.outage
        res = minimize_scalar(lambda t: -scalar_see(cfg_scalar, channels_scalar, t),
                              bounds=(0.0, out.t_max), method="bounded",
                              options={"xatol": 1e-3})
        t_oracle = res.x
        final_dt = out.t_max / 10 / 2 ** 2
        assert abs(out.t_star - t_oracle) <= final_dt * 1.001
        assert out.see_star <= scalar_see(cfg_scalar, channels_scalar, t_oracle) * (1 + 1e-9)

    def test_asee_nondecreasing(self, cfg_default, channels_default):
        out = alg.zfbf_tsbaj(channels_default, cfg_default)
        asee = [p.asee for p in out.trace]
        assert all(b >= a for a, b in zip(asee, asee[1:]))
        assert out.see_star == pytest.approx(max(p.see for p in out.trace))

    def test_huge_circuit_power_pushes_t_to_max(self, cfg_scalar, channels_scalar):
        cfg = cfg_scalar.with_(p_sp_w=1e6)
        out = alg.sdp_tsbaj(channels_scalar, cfg)
        final_dt = out.t_max / 10 / 2 ** 2
        assert out.t_star >= out.t_max - 1.001 * final_dt

    def test_outage_on_tiny_budget(self, cfg_default, channels_default):
        out = alg.sdp_tsbaj(channels_default, cfg_default.with_(p_max_w=1e-9))
        assert out.outage
        assert out.see_star == 0.0
        assert out.solution is None

    def test_full_instance_chain_and_recoveries(self, cfg_default, channels_default):
        sdp = alg.sdp_tsbaj(channels_default, cfg_default)
        zf = alg.zfbf_tsbaj(channels_default, cfg_default)
        mrt = alg.mrt_zfbf_tsbaj(channels_default, cfg_default)
        assert sdp.see_star >= zf.see_star * (1 - 1e-2)
        assert zf.see_star >= mrt.see_star * (1 - 1e-2)
        for out in (sdp, zf, mrt):
            assert max(rank_ratio(w.m) for w in out.solution.w_mats) <= 1e-6
            for n in range(cfg_default.n_lue):
                psr = lmi.build_psr(n, out.t_star, channels_default.h[n], cfg_default)
                assert abs(psr.relative_residual(out.solution)) <= 1e-6
            # with demands active, the measured secrecy sum equals t*
            assert out.report.sum_secrecy_nats_s == pytest.approx(out.t_star, rel=1e-6)
            assert out.report.see_nats_per_joule == pytest.approx(out.see_star, rel=1e-6)
        _assert_robust_by_sampling(sdp.solution, channels_default, cfg_default,
                                   count=1500)

    def test_trace_statuses_recorded(self, cfg_default, channels_default):
        out = alg.sdp_tsbaj(channels_default, cfg_default)
        assert all(p.status == "optimal" for p in out.trace)


class TestSrm:
    def test_never_beats_tsbaj_and_uses_larger_t(self, cfg_default, channels_default):
        for variant, ts in (("sdp", alg.sdp_tsbaj), ("zfbf", alg.zfbf_tsbaj),
                            ("mrt-zfbf", alg.mrt_zfbf_tsbaj)):
            base = ts(channels_default, cfg_default)
            srm = alg.srm_solve(channels_default, cfg_default, variant)
            assert srm.see_star <= base.see_star * (1 + 1e-9)
            assert srm.t_star >= base.t_star * (1 - 1e-9)

    def test_scalar_matches_closed_form_tmax(self, cfg_scalar, channels_scalar):
        srm = alg.srm_solve(channels_scalar, cfg_scalar, "sdp")
        h2 = np.linalg.norm(channels_scalar.h[0]) ** 2
        closed = cfg_scalar.bandwidth_hz * (
            np.log1p(cfg_scalar.p_max_w * h2 / cfg_scalar.noise_lue_w)
            - cfg_scalar.r_aux_nats_s / cfg_scalar.bandwidth_hz)
        assert srm.t_star == pytest.approx(closed, rel=2e-6)

    def test_unknown_variant_rejected(self, cfg_default, channels_default):
        from seebeam.errors import DomainError
        with pytest.raises(DomainError):
            alg.srm_solve(channels_default, cfg_default, "zf")
