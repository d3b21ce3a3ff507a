import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memflow.cnf import ClauseSystem, decode_factors, evaluate_assignment
from memflow.dynamics import (
    FIXED_POINT_NON_SOLUTION,
    MAX_TIME,
    SOLVED,
    FlowError,
    FlowParams,
    SystemState,
    check_solution,
    clause_mismatch,
    detect_instanton_phase,
    flow_field,
    initial_state,
    integrate,
    step,
)

from oracles import enumerate_solutions, trial_division


def one_clause_system():
    # single clause (v0 OR v1)
    return ClauseSystem(num_vars=2, clauses=[((0, 1), (1, 1))], units={}, node_map={})


def make_state(cs, v, x_s=None, x_l=None):
    m = len(cs.clauses)
    return SystemState(
        v=np.asarray(v, dtype=float),
        x_s=np.full(m, 0.5) if x_s is None else np.asarray(x_s, dtype=float),
        x_l=np.ones(m) if x_l is None else np.asarray(x_l, dtype=float),
    )


class TestFlowParams:
    def test_defaults_valid(self):
        FlowParams()

    @pytest.mark.parametrize(
        "kwargs",
        [dict(alpha=0.0), dict(beta=-1.0), dict(gamma=0.0), dict(gamma=1.0),
         dict(delta=1.5), dict(theta=-0.1), dict(dt=0.0), dict(x_l_max=0.5)],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            FlowParams(**kwargs)

    def test_slow_memory_cap_default_scales_with_clauses(self):
        assert FlowParams().slow_memory_cap(355) == pytest.approx(1e4 * 355)
        assert FlowParams(x_l_max=50.0).slow_memory_cap(355) == 50.0


class TestFlowField:
    def test_unsatisfied_two_literal_clause_pushes_both_up(self):
        # both literals tie at the clause minimum, so both feel the full
        # rigidity force (1 + zeta) * (q - v)/2 = 1.1 with memories at bounds
        cs = one_clause_system()
        state = make_state(cs, [-1.0, -1.0], x_s=[0.0], x_l=[1.0])
        dv, dxs, dxl = flow_field(state, cs, FlowParams())
        assert dv[0] == pytest.approx(1.1)
        assert dv[1] == pytest.approx(1.1)
        assert dxs[0] == pytest.approx(20.0 * (0.0 + 1e-3) * (1.0 - 0.25))
        assert dxl[0] == pytest.approx(5.0 * 1.0 - 5.0 * 0.05)

    def test_solution_vertex_is_exact_fixed_point(self, system_15):
        solution = enumerate_solutions(system_15)[0]
        v = np.where(solution, 1.0, -1.0)
        state = make_state(system_15, v, x_s=np.full(len(system_15.clauses), 0.7),
                           x_l=np.full(len(system_15.clauses), 3.0))
        assert clause_mismatch(state.v, system_15).max() == 0.0
        dv, _, dxl = flow_field(state, system_15, FlowParams())
        assert np.all(dv == 0.0)
        assert np.all(dxl < 0.0)

    def test_dimension_mismatch_rejected(self, system_15):
        bad = make_state(one_clause_system(), [0.1, -0.2])
        with pytest.raises(ValueError):
            flow_field(bad, system_15, FlowParams())

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_mismatch_bounded(self, system_15, data):
        n = system_15.num_vars
        vals = data.draw(st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n))
        c = clause_mismatch(np.array(vals), system_15)
        assert np.all(c >= 0.0) and np.all(c <= 1.0)


class TestStep:
    def test_deterministic_at_zero_noise(self, system_15):
        rng = np.random.default_rng(3)
        state = initial_state(system_15, FlowParams(), rng)
        a = step(state, system_15, FlowParams())
        b = step(state, system_15, FlowParams())
        assert np.array_equal(a.v, b.v)

    def test_solution_vertex_unchanged(self, system_15):
        solution = enumerate_solutions(system_15)[0]
        v = np.where(solution, 1.0, -1.0)
        state = make_state(system_15, v)
        after = step(state, system_15, FlowParams())
        assert np.array_equal(after.v, state.v)

    def test_same_seed_same_noise_path(self, system_15):
        p = FlowParams(theta=0.01, dt=0.01)
        s0 = initial_state(system_15, p, np.random.default_rng(5))
        a = step(s0, system_15, p, np.random.default_rng(11))
        b = step(s0, system_15, p, np.random.default_rng(11))
        assert np.array_equal(a.v, b.v)

    def test_noise_requires_rng(self, system_15):
        p = FlowParams(theta=0.01, dt=0.01)
        state = initial_state(system_15, p, np.random.default_rng(0))
        with pytest.raises(ValueError):
            step(state, system_15, p)

    def test_non_finite_state_raises(self, system_15):
        state = initial_state(system_15, FlowParams(), np.random.default_rng(0))
        state.v[0] = np.nan
        with pytest.raises(FlowError):
            step(state, system_15, FlowParams())

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31), theta=st.sampled_from([0.0, 0.02]))
    def test_bounds_invariant(self, system_15, seed, theta):
        rng = np.random.default_rng(seed)
        p = FlowParams(theta=theta, dt=0.05)
        m = len(system_15.clauses)
        cap = p.slow_memory_cap(m)
        state = SystemState(
            v=rng.uniform(-1, 1, system_15.num_vars),
            x_s=rng.uniform(0, 1, m),
            x_l=rng.uniform(1, cap, m),
        )
        for _ in range(5):
            state = step(state, system_15, p, rng)
            assert np.all(state.v >= -1.0) and np.all(state.v <= 1.0)
            assert np.all(state.x_s >= 0.0) and np.all(state.x_s <= 1.0)
            assert np.all(state.x_l >= 1.0) and np.all(state.x_l <= cap)

    def test_first_order_convergence_in_dt(self):
        # short window so no state component reaches a clamp kink
        cs = one_clause_system()
        finals = []
        for dt in (0.02, 0.01, 0.005):
            p = FlowParams(dt=dt)
            state = make_state(cs, [-0.5, -0.3])
            traj = integrate(state, cs, p, max_time=0.08, record_stride=1000)
            finals.append(traj.final_state.v.copy())
        e1 = np.abs(finals[0] - finals[1]).max()
        e2 = np.abs(finals[1] - finals[2]).max()
        assert e2 > 0
        assert 1.4 < e1 / e2 < 3.0  # halving dt roughly halves the error


class TestIntegrate:
    def test_solves_n15_and_factors_verify(self, system_15):
        p = FlowParams()
        rng = np.random.default_rng(0)
        traj = integrate(initial_state(system_15, p, rng), system_15, p, max_time=500.0, rng=rng)
        assert traj.termination == SOLVED
        # independent routes: pure-python clause evaluation + arithmetic
        assert evaluate_assignment(system_15, traj.assignment.tolist())
        pq = decode_factors(system_15, traj.assignment)
        assert pq == trial_division(15)

    def test_zero_max_time_is_immediate_timeout(self, system_15):
        p = FlowParams()
        state = initial_state(system_15, p, np.random.default_rng(1))
        traj = integrate(state, system_15, p, max_time=0.0)
        assert traj.termination == MAX_TIME
        assert len(traj.times) == 1

    def test_byte_identical_repeat(self, system_143):
        p = FlowParams(theta=0.002, dt=0.02)
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(7)
            state = initial_state(system_143, p, rng)
            runs.append(integrate(state, system_143, p, max_time=40.0, record_stride=3, rng=rng))
        a, b = runs
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.v, b.v)
        assert a.crossings == b.crossings
        assert a.termination == b.termination

    def test_many_seeds_all_solve_without_false_fixed_points(self, system_35):
        p = FlowParams()
        outcomes = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            traj = integrate(initial_state(system_35, p, rng), system_35, p, max_time=500.0, rng=rng)
            outcomes.append(traj.termination)
            if traj.termination == SOLVED:
                pq = decode_factors(system_35, traj.assignment)
                assert pq[0] * pq[1] == 35
        assert outcomes.count(SOLVED) == 20
        assert outcomes.count(FIXED_POINT_NON_SOLUTION) == 0

    def test_sample_times_strictly_increasing(self, system_143):
        p = FlowParams()
        rng = np.random.default_rng(2)
        traj = integrate(initial_state(system_143, p, rng), system_143, p, max_time=30.0, record_stride=7, rng=rng)
        assert np.all(np.diff(traj.times) > 0)
        assert traj.v.shape == (len(traj.times), system_143.num_vars)

    def test_crossings_sorted_and_on_free_vars(self, system_143):
        p = FlowParams()
        rng = np.random.default_rng(4)
        traj = integrate(initial_state(system_143, p, rng), system_143, p, max_time=200.0, rng=rng)
        times = [e.time for e in traj.crossings]
        assert times == sorted(times)
        units = set(system_143.units)
        assert all(e.var not in units for e in traj.crossings)

    def test_dt_halving_preserves_factors(self, system_15, system_35):
        for n, cs in ((15, system_15), (35, system_35)):
            results = []
            for dt in (0.05, 0.025):
                p = FlowParams(dt=dt)
                rng = np.random.default_rng(9)
                traj = integrate(initial_state(cs, p, rng), cs, p, max_time=500.0, rng=rng)
                assert traj.termination == SOLVED
                pq = decode_factors(cs, traj.assignment)
                assert pq[0] * pq[1] == n
                results.append(pq)
            assert results[0] == results[1]


class TestCheckSolution:
    def test_rounding_and_verification(self, system_15):
        solution = enumerate_solutions(system_15)[0]
        v = np.where(solution, 0.4, -0.3)  # away from the rails
        state = make_state(system_15, v)
        out = check_solution(state, system_15)
        assert out is not None
        assert decode_factors(system_15, out) == (3, 5)

    def test_violated_clause_returns_none(self, system_15):
        solution = enumerate_solutions(system_15)[0]
        v = np.where(solution, 1.0, -1.0)
        free = system_15.free_vars
        v[free[0]] = -v[free[0]]  # break one variable
        state = make_state(system_15, v)
        assert check_solution(state, system_15) is None

    def test_zero_voltage_rounds_to_logical_one(self):
        cs = one_clause_system()
        state = make_state(cs, [0.0, -1.0])
        out = check_solution(state, cs)
        assert out is not None and bool(out[0]) is True


class TestInstantonPhase:
    def test_no_crossings_gives_none(self, system_15):
        solution = enumerate_solutions(system_15)[0]
        v = np.where(solution, 1.0, -1.0)
        p = FlowParams()
        traj = integrate(make_state(system_15, v), system_15, p, max_time=5.0)
        assert traj.crossings == []
        assert detect_instanton_phase(traj) is None

    def test_single_crossing_degenerate_phase(self):
        # unsatisfied clause with v0 just below threshold: the run solves at
        # the moment v0 crosses, giving a single-event phase
        cs = one_clause_system()
        p = FlowParams(dt=0.01)
        state = make_state(cs, [-0.05, -0.6], x_s=[0.0], x_l=[1.0])
        traj = integrate(state, cs, p, max_time=2.0)
        assert traj.termination == SOLVED
        phase = detect_instanton_phase(traj)
        assert phase is not None
        assert phase.crossing_count == 1
        assert phase.t_start == phase.t_end == phase.mid_time

    def test_crossings_cover_flipped_variables(self, system_143):
        p = FlowParams()
        rng = np.random.default_rng(6)
        state = initial_state(system_143, p, rng)
        initial_bits = state.v >= 0.0
        traj = integrate(state, system_143, p, max_time=2000.0, rng=rng)
        assert traj.termination == SOLVED
        flipped = [
            var for var in system_143.free_vars
            if bool(initial_bits[var]) != bool(traj.assignment[var])
        ]
        crossed = {e.var for e in traj.crossings}
        assert set(flipped) <= crossed
        phase = detect_instanton_phase(traj)
        assert phase.crossing_count >= len(flipped)
