import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fosmo.expr import (
    Binary,
    Call,
    ExprEvalError,
    ExprSyntaxError,
    Num,
    TimeVar,
    Unary,
    Var,
    evaluate,
    max_var_index,
    parse,
    to_text,
    uses_time,
)


def ev(text, state=(), time=0.0):
    return evaluate(parse(text), state, time)


def test_benchmark_nonlinearity_at_initial_state():
    value = ev("-0.5*x1 - sin(x2) - x3*abs(x3)", (0.1, 0.1, -0.1))
    assert value == pytest.approx(-0.05 - math.sin(0.1) + 0.01, abs=1e-15)
    assert value == pytest.approx(-0.139833, abs=1e-6)


def test_zero_literal():
    assert ev("0") == 0.0


def test_fault_expression_values():
    text = "0.5*cos(0.5*pi*t)"
    assert ev(text, (), 0.0) == pytest.approx(0.5, abs=1e-15)
    assert ev(text, (), 2.0) == pytest.approx(-0.5, abs=1e-15)


def test_variable_lookup():
    assert ev("x1", (3.0,)) == 3.0


def test_sign_convention():
    assert ev("sign(x1)", (-2.0,)) == -1.0
    assert ev("sign(x1)", (2.0,)) == 1.0
    assert ev("sign(x1)", (0.0,)) == 0.0


def test_quadratic_damping_term():
    assert ev("x3*abs(x3)", (0.0, 0.0, -0.1)) == pytest.approx(-0.01, abs=1e-15)


@pytest.mark.parametrize(
    "text,expected",
    [
        ("2+3*4", 14.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("(-2)^2", 4.0),
        ("2*-3", -6.0),
        ("6/3/2", 1.0),
        ("2-3-4", -5.0),
        ("2^-1", 0.5),
        ("1 + 2 * 3 ^ 2", 19.0),
        ("-(1+2)", -3.0),
    ],
)
def test_precedence_table(text, expected):
    assert ev(text) == expected


def test_syntax_error_reports_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1 + @2")
    assert info.value.position == 4
    with pytest.raises(ExprSyntaxError):
        parse("")
    with pytest.raises(ExprSyntaxError):
        parse("1 +")
    with pytest.raises(ExprSyntaxError):
        parse("sin 3")
    with pytest.raises(ExprSyntaxError):
        parse("(1 + 2")
    with pytest.raises(ExprSyntaxError):
        parse("1 2")


def test_unknown_identifier():
    with pytest.raises(ExprSyntaxError) as info:
        parse("2 * bogus")
    assert "bogus" in str(info.value)
    with pytest.raises(ExprSyntaxError):
        parse("x0")


def test_literal_out_of_float_range():
    with pytest.raises(ExprSyntaxError):
        parse("1e309")


def test_eval_domain_errors_name_subexpression():
    with pytest.raises(ExprEvalError) as info:
        ev("1/(x1 - 1)", (1.0,))
    assert "division by zero" in str(info.value)
    with pytest.raises(ExprEvalError):
        ev("sqrt(x1)", (-4.0,))
    with pytest.raises(ExprEvalError):
        ev("exp(exp(x1))", (100.0,))
    with pytest.raises(ExprEvalError):
        ev("(-1)^0.5")


def test_eval_requires_enough_state():
    with pytest.raises(ExprEvalError):
        ev("x3", (1.0, 2.0))


def test_var_index_and_time_detection():
    e = parse("x2 + sin(x5) - t")
    assert max_var_index(e) == 5
    assert uses_time(e)
    assert not uses_time(parse("x1 + 1"))
    assert max_var_index(parse("t + 1")) == 0


def test_eval_is_pure():
    e = parse("sin(x1)*cos(t) + x2^2")
    first = evaluate(e, (0.3, -1.2), 0.7)
    for _ in range(5):
        assert evaluate(e, (0.3, -1.2), 0.7) == first


_leaves = st.one_of(
    st.floats(min_value=-5.0, max_value=5.0, allow_nan=False).map(Num),
    st.integers(min_value=1, max_value=3).map(Var),
    st.just(TimeVar()),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, children),
        st.builds(
            Binary, st.sampled_from(["+", "-", "*", "/"]), children, children
        ),
        st.builds(
            Call,
            st.sampled_from(["sin", "cos", "exp", "abs", "sign", "sqrt", "tan"]),
            children,
        ),
    )


expressions = st.recursive(_leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expressions, st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 3))
def test_print_parse_round_trip_preserves_evaluation(tree, a, b, c, time):
    reparsed = parse(to_text(tree))
    state = (a, b, c)
    try:
        expected = evaluate(tree, state, time)
    except ExprEvalError:
        with pytest.raises(ExprEvalError):
            evaluate(reparsed, state, time)
        return
    assert evaluate(reparsed, state, time) == expected
