import random
from dataclasses import replace

import pytest

from stateforge import StateForge, random_forge
from rainbowbench.core import (
    ColouredEdge,
    is_rainbow,
    make_instance,
    make_matching,
    va,
    vb,
)
from rainbowbench.proofkit import (
    Augmented,
    ChainError,
    Epsilon,
    Extended,
    Mode,
    PigeonholeFailure,
    SwitchState,
    ThresholdInfeasible,
    claim1_switch,
    claim2_switch,
    claim3_switch,
    colour_chain,
    construct_N0,
    construct_Nk,
    extend_state,
    initial_state,
    pigeonhole_select,
    run_switch_trace,
    smallest_t,
    state_violations,
    trace_to_json,
    verify_properties,
    verify_trace_json,
)

EPS1 = Epsilon.parse("1")


def worked_claim1_state() -> SwitchState:
    """k=1 on two colours: r = {a1b1@1}, e_1 = a1b1, g_1 = a2b1 in class 0."""
    inst = make_instance([[(2, 1)], [(1, 1), (3, 2)]], a_size=4, b_size=3)
    return SwitchState(
        inst=inst,
        r=make_matching([(1, 1, 1)]),
        eps=EPS1,
        t=1,
        k=1,
        e_seq=(ColouredEdge.of(1, 1, 1),),
        g_seq=(ColouredEdge.of(0, 2, 1),),
        x_sets=(frozenset(),),
        y_sets=(frozenset(),),
        pi=(0, 1),
    )


class TestVerifyProperties:
    def test_worked_state_passes_all_seven(self):
        report = verify_properties(worked_claim1_state())
        assert report.all_ok

    def test_recoloured_g_fails_p2(self):
        st = worked_claim1_state()
        bad = replace(st, g_seq=(ColouredEdge.of(1, 2, 1),))
        report = verify_properties(bad)
        assert report.failed() == ("P2",)
        assert "g_1" in report["P2"].witness

    def test_y1_containing_y1_fails_p3(self):
        st = worked_claim1_state()
        bad = replace(st, y_sets=(frozenset({vb(1)}),))
        report = verify_properties(bad)
        assert "P3" in report.failed()
        assert "b1" in report["P3"].witness

    def test_structural_violations_detected(self):
        st = worked_claim1_state()
        bad = replace(st, pi=(0, 0))
        assert state_violations(bad)
        with pytest.raises(ValueError):
            verify_properties(bad)

    def test_strict_p4_enforces_formula(self):
        st = worked_claim1_state()
        report = verify_properties(st, Mode.STRICT)
        assert "P4" in report.failed()  # s_1 = 2*eps*n + 2 = 6 but X_1 is empty

    def test_random_forged_states_pass(self):
        rng = random.Random(2024)
        for _ in range(200):
            forge = random_forge(rng)
            forge.add_distractors(rng.randint(0, 5))
            assert verify_properties(forge.freeze()).all_ok


class TestColourChain:
    def test_single_step_chain(self):
        assert colour_chain(worked_claim1_state(), 1) == [0]

    def test_two_step_chain(self):
        rng = random.Random(1)
        forge = StateForge(rng, 9, 3, [0, 0, 0], chain_src=[0, 0, 2])
        st = forge.freeze()
        assert colour_chain(st, 3) == [2, 0]

    def test_maximal_chain(self):
        rng = random.Random(1)
        forge = StateForge(rng, 9, 3, [0, 0, 0], chain_src=[0, 1, 2])
        st = forge.freeze()
        assert colour_chain(st, 3) == [2, 1, 0]

    def test_chain_strictly_decreasing_and_bounded(self):
        rng = random.Random(31)
        for _ in range(200):
            forge = random_forge(rng, k_range=(1, 4))
            st = forge.freeze()
            for i in range(1, st.k + 1):
                chain = colour_chain(st, i)
                assert chain[-1] == 0
                assert all(a > b for a, b in zip(chain, chain[1:]))
                assert len(chain) <= i

    def test_broken_chain_raises(self):
        st = worked_claim1_state()
        bad = replace(st, g_seq=(ColouredEdge.of(1, 2, 1),))
        with pytest.raises(ChainError):
            colour_chain(bad, 1)


class TestClaim1Switch:
    def test_worked_example(self):
        st = worked_claim1_state()
        out = claim1_switch(st, ColouredEdge.of(1, 3, 2))
        assert {ce.triple for ce in out} == {(0, 2, 1), (1, 3, 2)}

    def test_two_step_chain_exchange(self):
        rng = random.Random(5)
        forge = StateForge(rng, 8, 2, [0, 0], chain_src=[0, 1])
        g = forge.plant_claim1()
        st = forge.freeze()
        out = claim1_switch(st, g)
        assert is_rainbow(out) and len(out) == len(st.r) + 1
        # chain [1, 0]: e_2 and e_1 leave, g_2, g_1 and g enter
        assert st.e_seq[0] not in out and st.e_seq[1] not in out
        assert st.g_seq[0] in out and st.g_seq[1] in out and g in out

    def test_precondition_violations(self):
        st = worked_claim1_state()
        with pytest.raises(ValueError):
            claim1_switch(st, ColouredEdge.of(0, 3, 2))  # wrong class
        with pytest.raises(ValueError):
            claim1_switch(st, ColouredEdge.of(1, 1, 2))  # starts inside X


class TestClaim2Switch:
    def test_worked_example(self):
        inst = make_instance(
            [[(4, 1)], [(1, 1), (5, 2)], [(2, 2), (1, 3)]], a_size=6, b_size=4
        )
        st = SwitchState(
            inst=inst,
            r=make_matching([(1, 1, 1), (2, 2, 2)]),
            eps=EPS1,
            t=1,
            k=1,
            e_seq=(ColouredEdge.of(1, 1, 1),),
            g_seq=(ColouredEdge.of(0, 4, 1),),
            x_sets=(frozenset({va(2)}),),
            y_sets=(frozenset({vb(2)}),),
            pi=(0, 1),
        )
        out = claim2_switch(
            st, ColouredEdge.of(1, 5, 2), ColouredEdge.of(2, 2, 2), ColouredEdge.of(2, 1, 3)
        )
        assert {ce.triple for ce in out} == {(0, 4, 1), (1, 5, 2), (2, 1, 3)}

    def test_e_bar_conflicting_with_g_rejected(self):
        inst = make_instance(
            [[(4, 1)], [(1, 1), (5, 2)], [(2, 2), (1, 2)]], a_size=6, b_size=4
        )
        st = SwitchState(
            inst=inst,
            r=make_matching([(1, 1, 1), (2, 2, 2)]),
            eps=EPS1,
            t=1,
            k=1,
            e_seq=(ColouredEdge.of(1, 1, 1),),
            g_seq=(ColouredEdge.of(0, 4, 1),),
            x_sets=(frozenset({va(2)}),),
            y_sets=(frozenset({vb(2)}),),
            pi=(0, 1),
        )
        with pytest.raises(ValueError):
            claim2_switch(
                st, ColouredEdge.of(1, 5, 2), ColouredEdge.of(2, 2, 2), ColouredEdge.of(2, 1, 2)
            )

    def test_colour_mismatch_flagged(self):
        rng = random.Random(8)
        forge = random_forge(rng, min_pool=1)
        g, e, e_bar = forge.plant_claim2()
        st = forge.freeze()
        with pytest.raises(ValueError, match="colour"):
            claim2_switch(st, g, e, replace(e_bar, colour=st.pi[0]))


class TestClaim3Switch:
    def test_degenerate_worked_example(self):
        inst = make_instance(
            [[(5, 1), (3, 2)], [(1, 1)], [(2, 2), (4, 3)]], a_size=6, b_size=4
        )
        st = SwitchState(
            inst=inst,
            r=make_matching([(1, 1, 1), (2, 2, 2)]),
            eps=EPS1,
            t=1,
            k=1,
            e_seq=(ColouredEdge.of(1, 1, 1),),
            g_seq=(ColouredEdge.of(0, 5, 1),),
            x_sets=(frozenset({va(2)}),),
            y_sets=(frozenset({vb(2)}),),
            pi=(0, 1),
        )
        out = claim3_switch(
            st, ColouredEdge.of(2, 2, 2), ColouredEdge.of(2, 4, 3), ColouredEdge.of(0, 3, 2)
        )
        assert {ce.triple for ce in out} == {(1, 1, 1), (0, 3, 2), (2, 4, 3)}

    def test_pool_subcase_chain_of_one(self):
        inst = make_instance(
            [[(5, 1)], [(1, 1), (3, 2)], [(2, 2), (4, 3)]], a_size=6, b_size=4
        )
        st = SwitchState(
            inst=inst,
            r=make_matching([(1, 1, 1), (2, 2, 2)]),
            eps=EPS1,
            t=1,
            k=1,
            e_seq=(ColouredEdge.of(1, 1, 1),),
            g_seq=(ColouredEdge.of(0, 5, 1),),
            x_sets=(frozenset(),),
            y_sets=(frozenset(),),
            pi=(0, 1),
        )
        out = claim3_switch(
            st, ColouredEdge.of(2, 2, 2), ColouredEdge.of(2, 4, 3), ColouredEdge.of(1, 3, 2)
        )
        # removes {e_1, f}, adds {g_1, f_bar, zw}
        assert {ce.triple for ce in out} == {(0, 5, 1), (1, 3, 2), (2, 4, 3)}

    def test_subcase_undeterminable(self):
        rng = random.Random(3)
        forge = random_forge(rng, min_pool=1)
        f, f_bar, zw = forge.plant_claim3("pool")
        # a genuine partner edge whose class lies outside the pi image
        outside = [c for c in forge.spare_colours if c != f.colour][0]
        zw_bad = forge.add_edge(outside, forge.fresh_a(), f.b.index)
        st = forge.freeze()
        with pytest.raises(ValueError, match="subcase"):
            claim3_switch(st, f, f_bar, zw_bad)


class TestPoolConstruction:
    def base_state(self, f0_pairs, n=4):
        classes = [f0_pairs] + [[(c, c)] for c in range(1, n)]
        inst = make_instance(classes, a_size=12, b_size=12)
        r = make_matching([(c, c, c) for c in range(1, n)])
        return initial_state(inst, r, EPS1)

    def test_n0_reads_off_class_zero(self):
        st = self.base_state([(4, 1), (5, 2)])
        assert construct_N0(st) == {vb(1), vb(2)}

    def test_n0_empty_class(self):
        st = self.base_state([])
        assert construct_N0(st) == frozenset()

    def test_n0_requires_k_zero(self):
        rng = random.Random(0)
        st = random_forge(rng, k_range=(1, 1)).freeze()
        with pytest.raises(ValueError):
            construct_N0(st)
        with pytest.raises(ValueError):
            construct_Nk(self.base_state([]))

    def test_unmatched_class_zero_edge_triggers_augment_instead(self):
        st = self.base_state([(9, 9)])
        out = extend_state(st)
        assert isinstance(out, Augmented)
        assert len(out.matching) == len(st.r) + 1

    def test_nk_excludes_current_pool_and_used_y(self):
        rng = random.Random(6)
        forge = random_forge(rng, k_range=(1, 2), min_pool=1)
        zw = forge.add_pool_witness()
        st = forge.freeze()
        pool = construct_Nk(st)
        assert zw.b in pool
        assert not pool & st.y_sets[st.k - 1]
        assert all(st.y_of(i) not in pool for i in range(1, st.k + 1))

    def test_strict_truncation_count(self):
        # eps = 1/12, n = 12, k = 1: pool threshold = (1/2 + 1/12)*12 + 1 - 2 = 6
        rng = random.Random(9)
        forge = StateForge(rng, 12, 1, [0], eps="1/12")
        for _ in range(8):
            forge.add_pool_witness()
        st = forge.freeze()
        relaxed = construct_Nk(st, Mode.RELAXED)
        strict = construct_Nk(st, Mode.STRICT)
        assert len(relaxed) == 8
        assert len(strict) == 6
        assert strict == frozenset(sorted(relaxed, key=lambda v: v.index)[:6])

    def test_n0_strict_truncation(self):
        # eps = 1/8, n = 8, k = 0: threshold = (1/2 + 1/8)*8 + 1 = 6
        rng = random.Random(10)
        forge = StateForge(rng, 8, 0, [], eps="1/8")
        for _ in range(7):
            forge.add_pool_witness()
        st = forge.freeze()
        assert len(construct_N0(st, Mode.RELAXED)) == 7
        strict = construct_N0(st, Mode.STRICT)
        assert len(strict) == 6
        assert strict == frozenset(sorted(construct_N0(st), key=lambda v: v.index)[:6])


class TestPigeonholeSelect:
    def test_unanimity_case(self):
        rng = random.Random(13)
        forge = random_forge(rng, k_range=(1, 2), min_pool=1)
        c_star = forge.plant_extension()
        st = forge.freeze()
        pool = construct_Nk(st)
        y_prime = st.y_sets[st.k - 1] | pool
        x_prime = frozenset(va(v.index) for v in y_prime)
        x_next, X_next, Y_next = pigeonhole_select(st, x_prime, y_prime)
        assert x_next == va(c_star)
        assert x_next not in X_next
        assert X_next == x_prime - {x_next}
        assert Y_next == frozenset(vb(v.index) for v in X_next)

    def test_no_candidate_raises(self):
        st = TestPoolConstruction().base_state([(4, 1), (5, 2)])
        y_prime = construct_N0(st)
        x_prime = frozenset(va(v.index) for v in y_prime)
        # no class has any escape edge into B minus Y
        with pytest.raises(PigeonholeFailure):
            pigeonhole_select(st, x_prime, y_prime)

    def test_two_colour_pigeonhole(self):
        # class 1 escapes only via a2, class 2 only via a1: each candidate
        # covers exactly the other vertex; smallest A-index breaks the tie
        classes = [
            [(4, 1), (5, 2)],  # class 0: pool witnesses for b1, b2
            [(1, 1), (2, 8)],  # class 1 escapes via a2
            [(2, 2), (1, 9)],  # class 2 escapes via a1
        ]
        inst = make_instance(classes, a_size=12, b_size=12)
        r = make_matching([(1, 1, 1), (2, 2, 2)])
        st = initial_state(inst, r, EPS1)
        y_prime = construct_N0(st)
        x_prime = frozenset({va(1), va(2)})
        x_next, X_next, _ = pigeonhole_select(st, x_prime, y_prime)
        assert x_next == va(1)
        assert X_next == {va(2)}
        # disjoint supports cannot reach a strict threshold above 1
        strict_st = initial_state(inst, r, Epsilon.parse("1/100"))
        with pytest.raises(PigeonholeFailure):
            pigeonhole_select(strict_st, x_prime, y_prime, Mode.STRICT)

    def test_strict_mode_fixture_meets_pool_size(self):
        # eps = 1/12, n = 12, k = 1: s_2 = 4 + 1 = 5. Seven candidate vertices,
        # every box colour escaping through every other candidate, forces a
        # selection of exactly ceil(s_2) vertices with the escape property.
        rng = random.Random(55)
        forge = StateForge(rng, 12, 1, [3], eps="1/12")
        for _ in range(4):
            forge.add_pool_witness()
        box = sorted(forge.y_sets[0]) + sorted(forge.pool_edge)
        for c in box:
            for other in box:
                if other != c:
                    forge.add_edge(c, other, forge.fresh_b())
        st = forge.freeze()
        pool = construct_Nk(st)
        y_prime = st.y_sets[0] | pool
        x_prime = frozenset(va(v.index) for v in y_prime)
        x_next, X_next, Y_next = pigeonhole_select(st, x_prime, y_prime, Mode.STRICT)
        assert len(X_next) == 5  # ceil(s_2) exactly, in strict mode
        assert x_next not in X_next
        _, Y = st.saturated()
        y_idx = {v.index for v in Y}
        for ce in st.r.sorted_edges():
            if ce.a in X_next and ce.b in Y_next:
                assert any(
                    a == x_next.index and b not in y_idx
                    for a, b in st.inst.class_pairs(ce.colour)
                )


class TestExtendState:
    def test_base_case_augments_when_class_zero_escapes(self):
        inst = make_instance(
            [[(4, 1), (9, 9)], [(1, 1)], [(2, 2)], [(3, 3)]], a_size=12, b_size=12
        )
        r = make_matching([(c, c, c) for c in range(1, 4)])
        out = extend_state(initial_state(inst, r, EPS1))
        assert isinstance(out, Augmented)
        assert is_rainbow(out.matching) and len(out.matching) == 4

    def test_base_case_extends_and_properties_hold(self):
        rng = random.Random(77)
        forge = StateForge(rng, 5, 0, [])
        forge.add_pool_witness()
        forge.add_pool_witness()
        forge.plant_extension()
        st = forge.freeze()
        out = extend_state(st)
        assert isinstance(out, Extended)
        assert out.state.k == 1
        assert verify_properties(out.state).all_ok

    def test_strict_mode_threshold_infeasible_at_desk_scale(self):
        # eps = 1/4, n = 10: the strict pool threshold exceeds anything a
        # desk-scale fixture can offer
        rng = random.Random(15)
        forge = StateForge(rng, 10, 0, [], eps="1/4")
        forge.add_pool_witness()
        st = forge.freeze()
        with pytest.raises(ThresholdInfeasible) as exc:
            extend_state(st, Mode.STRICT)
        assert exc.value.required > exc.value.available

    def test_pi_k_plus_one_is_fresh(self):
        rng = random.Random(21)
        for _ in range(100):
            forge = random_forge(rng, k_range=(0, 3))
            forge.plant_extension()
            st = forge.freeze()
            out = extend_state(st)
            if isinstance(out, Extended):
                assert len(set(out.state.pi)) == len(out.state.pi)
                assert out.state.pi[:-1] == st.pi


class TestTraces:
    def test_trace_verifies(self):
        rng = random.Random(50)
        forge = StateForge(rng, 6, 0, [])
        forge.add_pool_witness()
        forge.add_pool_witness()
        forge.plant_extension()
        st = forge.freeze()
        trace = run_switch_trace(st.inst, st.r, EPS1, max_steps=4)
        assert trace.steps
        assert verify_trace_json(trace_to_json(trace)) == []

    def test_tampered_trace_names_property_and_step(self):
        import json

        rng = random.Random(51)
        forge = StateForge(rng, 6, 0, [])
        forge.add_pool_witness()
        forge.add_pool_witness()
        forge.plant_extension()
        st = forge.freeze()
        trace = run_switch_trace(st.inst, st.r, EPS1, max_steps=4)
        payload = json.loads(trace_to_json(trace))
        for step in payload["steps"]:
            if step["kind"] == "extended":
                step["state"]["g_seq"][0][0] = step["state"]["pi"][1]
                break
        failures = verify_trace_json(json.dumps(payload))
        assert failures
        assert any("P2" in f and "step 0" in f for f in failures)

    def test_empty_trace_is_vacuously_ok(self):
        inst = make_instance([[], [(1, 1)]], a_size=3, b_size=3)
        trace = run_switch_trace(inst, make_matching([(1, 1, 1)]), EPS1)
        assert trace.steps == ()
        assert verify_trace_json(trace_to_json(trace)) == []

    def test_trace_ending_in_augmentation_verifies(self):
        inst = make_instance(
            [[(4, 1), (9, 9)], [(1, 1)], [(2, 2)], [(3, 3)]], a_size=12, b_size=12
        )
        r = make_matching([(c, c, c) for c in range(1, 4)])
        trace = run_switch_trace(inst, r, EPS1, max_steps=4)
        assert isinstance(trace.steps[-1], Augmented)
        assert verify_trace_json(trace_to_json(trace)) == []

    def test_initial_state_requires_free_colour_zero(self):
        inst = make_instance([[(0, 0)], [(1, 1)]])
        with pytest.raises(ValueError):
            initial_state(inst, make_matching([(0, 0, 0)]), EPS1)


class TestStateImmutability:
    def test_switches_leave_state_unmodified(self):
        rng = random.Random(60)
        forge = random_forge(rng, min_pool=1)
        g, e, e_bar = forge.plant_claim2()
        st = forge.freeze()
        before = (st.e_seq, st.g_seq, st.x_sets, st.y_sets, st.pi, st.r)
        claim2_switch(st, g, e, e_bar)
        assert (st.e_seq, st.g_seq, st.x_sets, st.y_sets, st.pi, st.r) == before

    def test_smallest_t_stored(self):
        rng = random.Random(61)
        st = random_forge(rng).freeze()
        assert st.t == smallest_t(st.eps)
