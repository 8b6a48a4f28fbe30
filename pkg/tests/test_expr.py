import math
import random

import pytest

from wparab import expr as ex


def test_parse_negated_power_quotient():
    ast = ex.parse("-t^2/2", ["t"])
    expected = ex.Neg(ex.BinOp("/", ex.BinOp("^", ex.Var("t"), ex.Const(2.0)),
                               ex.Const(2.0)))
    assert ast == expected
    assert ex.evaluate(ast, {"t": 2.0}) == -2.0


def test_parse_hyperbolic_warping_expression():
    ast = ex.parse("sinh(sqrt(2)*t)/sqrt(2)", ["t"])
    val = ex.evaluate(ast, {"t": 1.3})
    assert val == pytest.approx(math.sinh(math.sqrt(2) * 1.3) / math.sqrt(2),
                                rel=1e-14)


def test_unbalanced_parenthesis_reports_position():
    with pytest.raises(ex.ExprSyntaxError) as err:
        ex.parse("exp(t", ["t"])
    assert err.value.position == 5
    assert "to close '(' at position 3" in str(err.value)


@pytest.mark.parametrize("source,t,expected", [
    ("t^2*3", 2.0, 12.0),          # power binds tighter than product
    ("2*t^2", 3.0, 18.0),
    ("-t^2", 3.0, -9.0),           # minus applies after the power
    ("1-2-3", 0.0, -4.0),          # left associative
    ("8/4/2", 0.0, 1.0),
    ("2--3", 0.0, 5.0),
    ("t^2^3", 2.0, 64.0),          # left associative power chain
    ("2*-3", 0.0, -6.0),
    ("t^-2", 2.0, 0.25),
])
def test_precedence_and_associativity(source, t, expected):
    assert ex.evaluate(ex.parse(source, ["t"]), {"t": t}) == pytest.approx(expected)


@pytest.mark.parametrize("source,message", [
    ("2t", "trailing"),
    ("t^x", "non-constant exponent"),
    ("foo(t)", "unknown function"),
    ("t + s", "undeclared variable"),
    ("", "empty"),
    ("1 +", "unexpected token"),
    ("(1", "to close"),
])
def test_syntax_errors(source, message):
    with pytest.raises(ex.ExprSyntaxError, match=message):
        ex.parse(source, ["t", "x"][:1 if "s" in source else 2] or ["t"])


def test_eval_dual_polynomial():
    d = ex.eval_dual(ex.parse("t^2", ["t"]), {"t": 3.0}, {"t": 1.0})
    assert (d.value, d.deriv) == (9.0, 6.0)


def test_eval_dual_sinh_origin():
    d = ex.eval_dual(ex.parse("sinh(t)", ["t"]), {"t": 0.0}, {"t": 1.0})
    assert (d.value, d.deriv) == (0.0, 1.0)


def test_eval_dual_gaussian_vs_finite_differences():
    ast = ex.parse("exp(-t^2/2)", ["t"])
    d = ex.eval_dual(ast, {"t": 1.0}, {"t": 1.0})
    assert d.value == pytest.approx(math.exp(-0.5), rel=1e-14)
    h = 1e-5
    fd = (ex.evaluate(ast, {"t": 1.0 + h}) - ex.evaluate(ast, {"t": 1.0 - h})) / (2 * h)
    assert d.deriv == pytest.approx(fd, rel=1e-8)
    assert d.deriv == pytest.approx(-math.exp(-0.5), rel=1e-12)


def test_second_derivatives_by_nesting():
    v, d1, d2 = ex.derivatives_1d(ex.parse("exp(-t^2/2)", ["t"]), "t", 0.7)
    g = math.exp(-0.245)
    assert v == pytest.approx(g, rel=1e-14)
    assert d1 == pytest.approx(-0.7 * g, rel=1e-13)
    assert d2 == pytest.approx((0.49 - 1.0) * g, rel=1e-13)


@pytest.mark.parametrize("source,env,message", [
    ("log(t)", {"t": -1.0}, "log of non-positive"),
    ("1/t", {"t": 0.0}, "division by zero"),
    ("sqrt(t)", {"t": -4.0}, "sqrt of negative"),
    ("t^0.5", {"t": -1.0}, "non-integer exponent"),
])
def test_domain_errors_carry_subexpression(source, env, message):
    with pytest.raises(ex.ExprDomainError, match=message):
        ex.evaluate(ex.parse(source, ["t"]), env)


# --- randomized properties --------------------------------------------------

_FUNCS = ["sin", "cos", "sinh", "tanh", "exp", "sqrt", "log"]


def _random_ast(rng, depth, variables):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return ex.Const(round(rng.uniform(0.1, 3.0), 3))
        return ex.Var(rng.choice(variables))
    kind = rng.random()
    if kind < 0.15:
        return ex.Neg(_random_ast(rng, depth - 1, variables))
    if kind < 0.40:
        fn = rng.choice(_FUNCS)
        arg = _random_ast(rng, depth - 1, variables)
        if fn in ("sqrt", "log"):
            # keep the argument positive
            arg = ex.BinOp("+", ex.Call("abs", arg), ex.Const(0.5))
        return ex.Call(fn, arg)
    if kind < 0.55:
        base = _random_ast(rng, depth - 1, variables)
        return ex.BinOp("^", base, ex.Const(float(rng.choice([2, 3]))))
    op = rng.choice(["+", "-", "*", "/"])
    lhs = _random_ast(rng, depth - 1, variables)
    rhs = _random_ast(rng, depth - 1, variables)
    if op == "/":
        rhs = ex.BinOp("+", ex.Call("abs", rhs), ex.Const(1.0))
    return ex.BinOp(op, lhs, rhs)


def test_random_asts_derivative_matches_finite_differences():
    rng = random.Random(20240817)
    accepted = 0
    while accepted < 100:
        ast = _random_ast(rng, 4, ["t"])
        t = rng.uniform(0.4, 1.8)
        h = 1e-5
        try:
            d = ex.eval_dual(ast, {"t": t}, {"t": 1.0})
            fp = ex.evaluate(ast, {"t": t + h})
            fm = ex.evaluate(ast, {"t": t - h})
        except ex.ExprDomainError:
            continue
        if not all(map(math.isfinite, (d.value, d.deriv, fp, fm))):
            continue
        if max(abs(d.value), abs(d.deriv)) > 1e4:
            continue
        fd = (fp - fm) / (2 * h)
        assert abs(d.deriv - fd) <= 1e-6 * max(1.0, abs(d.deriv)), \
            f"{ex.to_source(ast)} at t={t}: dual {d.deriv} vs fd {fd}"
        accepted += 1


def test_round_trip_parse_of_pretty_printed_asts():
    rng = random.Random(99)
    for _ in range(300):
        ast = _random_ast(rng, 4, ["t", "x1"])
        src = ex.to_source(ast)
        assert ex.parse(src, ["t", "x1"]) == ast, src


def test_evaluation_is_pure():
    ast = ex.parse("sinh(t)*exp(-t^2/2)+t^3", ["t"])
    point = {"t": 1.2345678901234567}
    a = ex.evaluate(ast, point)
    b = ex.evaluate(ast, point)
    assert a == b  # bit-identical
    da = ex.eval_dual(ast, point, {"t": 1.0})
    db = ex.eval_dual(ast, point, {"t": 1.0})
    assert (da.value, da.deriv) == (db.value, db.deriv)
