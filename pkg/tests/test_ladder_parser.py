"""Ladder text format: parsing, validation, diagnostics, round-trip."""

import pytest
from hypothesis import given, settings, strategies as st

from cyclonesim.ladder import (
    Compare,
    Contact,
    LadderProgram,
    OrGroup,
    Rung,
    TargetKind,
    TimerOn,
    VarType,
    parse_ladder,
    to_source,
    validate,
)


def must_parse(source: str) -> LadderProgram:
    result = parse_ladder(source)
    assert result.program is not None, [str(d) for d in result.diagnostics]
    return result.program


def diagnostics_of(source: str):
    result = parse_ladder(source)
    assert result.program is None
    assert result.diagnostics
    return result.diagnostics


def test_empty_source_yields_empty_program():
    program = must_parse("")
    assert program.rungs == ()
    assert program.variables == {}


def test_comment_only_source_is_empty_program():
    program = must_parse("# nothing but narration\n   \n# more\n")
    assert program.rungs == ()


def test_single_contact_rung_structure():
    program = must_parse(
        """
        VAR x : BOOL ;
        VAR y : BOOL ;
        RUNG : NO x => COIL y ;
        """
    )
    assert program.variables == {"x": VarType.BOOL, "y": VarType.BOOL}
    assert program.timer_presets == {}
    assert program.rungs == (
        Rung(
            elements=(Contact(name="x", negated=False),),
            target_kind=TargetKind.COIL,
            target="y",
        ),
    )


def test_full_element_zoo_parses():
    program = must_parse(
        """
        VAR start : BOOL ;
        VAR stop : BOOL ;
        VAR temp : REAL ;
        VAR motor : BOOL ;
        TIMER warmup PRESET 4000 ;
        RUNG : OR( NO start , NO motor ) NC stop CMP temp < 400.0 TON warmup => COIL motor ;
        """
    )
    rung = program.rungs[0]
    assert rung.elements == (
        OrGroup(
            branches=(
                (Contact("start", False),),
                (Contact("motor", False),),
            )
        ),
        Contact("stop", True),
        Compare("temp", "<", 400.0),
        TimerOn("warmup"),
    )
    assert program.timer_presets == {"warmup": 4000}


def test_set_reset_pair_allowed():
    program = must_parse(
        """
        VAR trip : BOOL ;
        VAR ok : BOOL ;
        VAR latch : BOOL ;
        RUNG : NO trip => SET latch ;
        RUNG : NO ok => RESET latch ;
        """
    )
    kinds = [r.target_kind for r in program.rungs]
    assert kinds == [TargetKind.SET, TargetKind.RESET]


def test_unconditional_rung_allowed():
    program = must_parse("VAR y : BOOL ;\nRUNG : => COIL y ;\n")
    assert program.rungs[0].elements == ()


def test_unknown_identifier_reports_location():
    diags = diagnostics_of("VAR y : BOOL ;\nRUNG : NO z => COIL y ;\n")
    assert any("z" in d.message and "unknown" in d.message.lower() for d in diags)
    located = [d for d in diags if "z" in d.message]
    assert located[0].line == 2
    assert located[0].col > 0


def test_duplicate_coil_write_rejected_with_rung_index():
    diags = diagnostics_of(
        """
        VAR a : BOOL ;
        VAR b : BOOL ;
        VAR y : BOOL ;
        RUNG : NO a => COIL y ;
        RUNG : NO b => COIL y ;
        """
    )
    assert any("y" in d.message and "rung 2" in d.message for d in diags)


def test_coil_mixed_with_set_rejected():
    diags = diagnostics_of(
        """
        VAR a : BOOL ;
        VAR y : BOOL ;
        RUNG : NO a => COIL y ;
        RUNG : NO a => SET y ;
        """
    )
    assert any("y" in d.message for d in diags)


def test_zero_preset_rejected():
    diags = diagnostics_of("TIMER t PRESET 0 ;\n")
    assert any("preset" in d.message.lower() for d in diags)


def test_type_errors_rejected():
    bad_sources = [
        # Contact on a REAL.
        "VAR r : REAL ;\nVAR y : BOOL ;\nRUNG : NO r => COIL y ;\n",
        # Compare on a BOOL.
        "VAR b : BOOL ;\nVAR y : BOOL ;\nRUNG : CMP b >= 1.0 => COIL y ;\n",
        # Coil driving a REAL.
        "VAR b : BOOL ;\nVAR r : REAL ;\nRUNG : NO b => COIL r ;\n",
        # TON on a plain BOOL.
        "VAR b : BOOL ;\nVAR y : BOOL ;\nRUNG : TON b => COIL y ;\n",
        # Coil driving a timer.
        "TIMER t PRESET 100 ;\nVAR b : BOOL ;\nRUNG : NO b => COIL t ;\n",
    ]
    for source in bad_sources:
        diagnostics_of(source)


def test_timer_driven_by_two_rungs_rejected():
    diags = diagnostics_of(
        """
        VAR a : BOOL ;
        VAR x : BOOL ;
        VAR y : BOOL ;
        TIMER t PRESET 100 ;
        RUNG : NO a TON t => COIL x ;
        RUNG : NO a TON t => COIL y ;
        """
    )
    assert any("t" in d.message and "TON" in d.message for d in diags)


def test_duplicate_declaration_rejected():
    diagnostics_of("VAR x : BOOL ;\nVAR x : REAL ;\n")
    diagnostics_of("VAR x : BOOL ;\nTIMER x PRESET 10 ;\n")


def test_declaration_after_rung_rejected():
    diags = diagnostics_of(
        "VAR y : BOOL ;\nRUNG : => COIL y ;\nVAR late : BOOL ;\n"
    )
    assert any("declaration" in d.message.lower() for d in diags)


def test_garbage_never_partially_succeeds():
    # First two rungs are fine; the third is not. No program comes back.
    result = parse_ladder(
        """
        VAR a : BOOL ;
        VAR y : BOOL ;
        VAR z : BOOL ;
        RUNG : NO a => COIL y ;
        RUNG : NO a => COIL z ;
        RUNG : NO a => FROB z ;
        """
    )
    assert result.program is None


def test_multiple_errors_reported_in_one_pass():
    diags = diagnostics_of(
        """
        VAR y : BOOL ;
        RUNG : NO ghost => COIL y ;
        TIMER t PRESET -5 ;
        """
    )
    assert len(diags) >= 2


def test_empty_or_branch_rejected():
    diagnostics_of("VAR a : BOOL ;\nVAR y : BOOL ;\nRUNG : OR( NO a , ) => COIL y ;\n")


def test_nonfinite_compare_constant_rejected():
    # 'inf' is not a number literal in this grammar.
    diagnostics_of("VAR r : REAL ;\nVAR y : BOOL ;\nRUNG : CMP r > inf => COIL y ;\n")


def test_validate_catches_programmatic_invariant_breaks():
    program = must_parse(
        "VAR a : BOOL ;\nVAR y : BOOL ;\nRUNG : NO a => COIL y ;\n"
    )
    assert validate(program) == []
    broken = LadderProgram(
        variables=dict(program.variables),
        timer_presets={},
        rungs=program.rungs + program.rungs,  # duplicate coil write on y
    )
    problems = validate(broken)
    assert any("y" in d.message for d in problems)


def test_round_trip_of_handwritten_source():
    source = """
    VAR start : BOOL ;
    VAR stop : BOOL ;
    VAR hot : REAL ;
    VAR run_sig : BOOL ;
    TIMER hold PRESET 2500 ;
    RUNG : OR( NO start , NO run_sig NC stop ) CMP hot <= 399.75 TON hold => COIL run_sig ;
    """
    program = must_parse(source)
    assert must_parse(to_source(program)) == program


# -- generated round-trip -----------------------------------------------

_names = st.sampled_from(["a", "b", "c", "d", "lvl", "t1", "t2"])


@st.composite
def _programs(draw):
    bools = draw(st.sets(st.sampled_from(["a", "b", "c", "d"]), min_size=2, max_size=4))
    reals = draw(st.sets(st.sampled_from(["lvl", "temp"]), max_size=2))
    timers = draw(st.sets(st.sampled_from(["t1", "t2"]), max_size=2))
    presets = {t: draw(st.integers(min_value=1, max_value=60_000)) for t in timers}
    bools = sorted(bools)
    readable = bools + sorted(timers)

    def element(depth):
        kinds = ["contact"] * 4 + (["cmp"] if reals else []) + (
            ["or"] if depth == 0 else []
        )
        kind = draw(st.sampled_from(kinds))
        if kind == "contact":
            return Contact(draw(st.sampled_from(readable)), draw(st.booleans()))
        if kind == "cmp":
            value = draw(
                st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).map(
                    lambda v: round(v, 3)
                )
            )
            return Compare(
                draw(st.sampled_from(sorted(reals))),
                draw(st.sampled_from(["<", "<=", ">", ">="])),
                value,
            )
        branches = tuple(
            tuple(element(1) for _ in range(draw(st.integers(1, 2))))
            for _ in range(draw(st.integers(2, 3)))
        )
        return OrGroup(branches)

    used_timers = set()
    rungs = []
    targets = draw(st.permutations(bools))
    for target in targets[: draw(st.integers(1, len(bools)))]:
        elements = [element(0) for _ in range(draw(st.integers(0, 3)))]
        for t in sorted(timers - used_timers):
            if draw(st.booleans()):
                elements.append(TimerOn(t))
                used_timers.add(t)
                break
        rungs.append(
            Rung(tuple(elements), TargetKind.COIL, target)
        )
    variables = {n: VarType.BOOL for n in bools}
    variables.update({n: VarType.REAL for n in sorted(reals)})
    return LadderProgram(variables=variables, timer_presets=presets, rungs=tuple(rungs))


@given(_programs())
@settings(max_examples=60, deadline=None)
def test_print_parse_round_trip(program):
    """to_source output reparses to a structurally identical program."""
    assert validate(program) == []
    result = parse_ladder(to_source(program))
    assert result.program == program, result.diagnostics
