"""Cylinder chains, circumference-scaling maps, and the weight-cone extremal ratio.

A chain is a list of flat cylinders (circumference a_n, height b_n), either
explicit and finite or produced by generator expressions in n.  A chain map
scales each circumference by lambda_n and keeps heights fixed, so the norm of
the cone differential with weights w_n moves from sum(w*a*b) to
sum(w*lambda*a*b): every norm ratio over the weight cone is a weighted
average of the lambda_n, and the extremal value is max(sup lambda,
1/inf lambda), attained exactly when the relevant endpoint is realized at
some cylinder.

The weight-cone model deliberately makes norms of disjoint-cylinder
combinations additive; that keeps attainment decidable.  For generated
chains, attainment over the infinite tail is not decidable from any finite
prefix, so tail behavior (sup/inf with an attainment flag, a monotonicity
certificate, the total norm) must be declared, is verified for consistency
against the computed prefix, and nothing is claimed beyond what the
declarations plus the prefix justify.

All arithmetic stays in exact rationals (fractions.Fraction) as long as the
inputs are rational; floats only enter through float inputs or fractional
powers in generator expressions.

Index conventions: explicit chains are indexed 0..len-1; generator
expressions are evaluated at n = 1, 2, 3, ...  Truncation to "the first N
cylinders" means indices < N (explicit) or n <= N (generated).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Union

Num = Union[Fraction, float]

ADAPTIVE_REL_TOL = 1e-16
ADAPTIVE_FLAT_RUN = 8      # consecutive negligible terms before a tail is trusted
ADAPTIVE_MAX_TERMS = 200_000
FLOAT_SLACK = 1e-12


class DivergenceError(ArithmeticError):
    """An infinite chain sum failed to converge."""


class ExpressionError(ValueError):
    """Malformed or non-evaluable generator expression."""


def as_num(value) -> Num:
    """Coerce a JSON-ish scalar to Fraction (exact) or float.

    Integers and strings become exact Fractions ("1.5" and "3/2" included);
    floats stay floats.
    """
    if isinstance(value, bool):
        raise ExpressionError(f"not a number: {value!r}")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ExpressionError(f"not a number: {value!r}") from exc
    raise ExpressionError(f"not a number: {value!r}")


# ---------------------------------------------------------------------------
# Generator expressions: constants, n, + - * / ^ and parentheses.
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([n()^*/+\-]|×|÷))")


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(f"bad character at position {pos} in {text!r}")
        tokens.append(m.group(1) or m.group(2))
        pos = m.end()
    return tokens


class Expression:
    """Compiled generator expression; call with an integer index n."""

    def __init__(self, text: str):
        self.text = text
        self._ast = _Parser(_tokenize(text), text).parse()

    def __call__(self, n: int) -> Num:
        return _eval(self._ast, Fraction(n))

    def __repr__(self):
        return f"Expression({self.text!r})"


class _Parser:
    def __init__(self, tokens: list[str], text: str):
        self.tokens = tokens
        self.text = text
        self.pos = 0

    def parse(self):
        node = self._expr()
        if self.pos != len(self.tokens):
            raise ExpressionError(f"trailing tokens in {self.text!r}")
        return node

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self):
        tok = self._peek()
        if tok is None:
            raise ExpressionError(f"unexpected end of {self.text!r}")
        self.pos += 1
        return tok

    def _expr(self):
        node = self._term()
        while self._peek() in ("+", "-"):
            op = self._next()
            node = (op, node, self._term())
        return node

    def _term(self):
        node = self._unary()
        while self._peek() in ("*", "/", "×", "÷"):
            op = self._next()
            op = "*" if op in ("*", "×") else "/"
            node = (op, node, self._unary())
        return node

    def _unary(self):
        if self._peek() == "-":
            self._next()
            return ("neg", self._unary())
        if self._peek() == "+":
            self._next()
            return self._unary()
        return self._power()

    def _power(self):
        base = self._atom()
        if self._peek() == "^":
            self._next()
            return ("^", base, self._unary())  # right assoc, binds unary: 2^-n
        return base

    def _atom(self):
        tok = self._next()
        if tok == "(":
            node = self._expr()
            if self._next() != ")":
                raise ExpressionError(f"unbalanced parentheses in {self.text!r}")
            return node
        if tok == "n":
            return ("var",)
        if tok[0].isdigit():
            return ("num", Fraction(tok))
        raise ExpressionError(f"unexpected token {tok!r} in {self.text!r}")


def _eval(node, n: Fraction) -> Num:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "var":
        return n
    if op == "neg":
        return -_eval(node[1], n)
    left = _eval(node[1], n)
    if op == "^":
        exp = _eval(node[2], n)
        if isinstance(left, Fraction) and isinstance(exp, Fraction) and exp.denominator == 1:
            try:
                return left ** int(exp)
            except ZeroDivisionError as exc:
                raise ExpressionError("0 raised to a negative power") from exc
        try:
            return float(left) ** float(exp)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise ExpressionError(f"cannot evaluate power: {exc}") from exc
    right = _eval(node[2], n)
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        try:
            if isinstance(left, Fraction) and isinstance(right, Fraction):
                return left / right
            return float(left) / float(right)
        except ZeroDivisionError as exc:
            raise ExpressionError("division by zero") from exc
    raise AssertionError(f"unknown op {op!r}")


def _as_rule(spec, what: str) -> Callable[[int], Num]:
    """Accept an Expression, a string to compile, a callable, or a constant."""
    if isinstance(spec, Expression):
        return spec
    if isinstance(spec, str):
        return Expression(spec)
    if callable(spec):
        return spec
    value = as_num(spec)
    return lambda n: value


# ---------------------------------------------------------------------------
# Chains, maps, cone weights.
# ---------------------------------------------------------------------------

ATTAINED = "attained"
NOT_ATTAINED = "not-attained"
UNKNOWN = "unknown"
_FLAGS = (ATTAINED, NOT_ATTAINED, UNKNOWN)


@dataclass(frozen=True)
class DeclaredBound:
    """Declared tail endpoint (sup or inf) with its attainment flag."""

    value: Num
    flag: str

    def __post_init__(self):
        if self.flag not in _FLAGS:
            raise ValueError(f"attainment flag must be one of {_FLAGS}")


class CylinderChain:
    """Finite explicit, or generator-produced, list of flat cylinders."""

    def __init__(self, cylinders: Iterable[tuple] | None = None, *,
                 a_rule=None, b_rule=None, total_norm=None):
        if cylinders is not None:
            if a_rule is not None or b_rule is not None:
                raise ValueError("give either explicit cylinders or generator rules")
            self._cyls = [(as_num(a), as_num(b)) for a, b in cylinders]
            if not self._cyls:
                raise ValueError("chain needs at least one cylinder")
            for i, (a, b) in enumerate(self._cyls):
                if not (a > 0 and b > 0):
                    raise ValueError(f"cylinder {i} must have positive a, b")
            self._a = self._b = None
        else:
            if a_rule is None or b_rule is None:
                raise ValueError("generated chain needs both a and b rules")
            self._cyls = None
            self._a = _as_rule(a_rule, "a")
            self._b = _as_rule(b_rule, "b")
        self.total_norm_declared: Num | None = (
            None if total_norm is None else as_num(total_norm)
        )

    @property
    def finite(self) -> bool:
        return self._cyls is not None

    def __len__(self) -> int:
        if self._cyls is None:
            raise TypeError("generated chain has no length")
        return len(self._cyls)

    def cylinder(self, index: int) -> tuple[Num, Num]:
        if self._cyls is not None:
            return self._cyls[index]
        a, b = self._a(index), self._b(index)
        if not (a > 0 and b > 0):
            raise ValueError(f"generated cylinder n={index} must have positive a, b")
        return (a, b)

    def first(self, count: int) -> Iterator[tuple[int, Num, Num]]:
        """Yield (index, a, b) for the first `count` cylinders."""
        for index in self.indices(count):
            a, b = self.cylinder(index)
            yield index, a, b

    def indices(self, count: int) -> range:
        if self._cyls is not None:
            return range(min(count, len(self._cyls)))
        return range(1, count + 1)

    @classmethod
    def from_json(cls, obj: dict) -> "CylinderChain":
        chain, _, _ = load_chain_spec(obj)
        return chain


class ChainMap:
    """Per-cylinder circumference scale factors with declared tail endpoints."""

    def __init__(self, lambdas=None, *, rule=None,
                 declared_sup: DeclaredBound | None = None,
                 declared_inf: DeclaredBound | None = None):
        if lambdas is not None:
            self._lams = [as_num(x) for x in lambdas]
            for i, lam in enumerate(self._lams):
                if not lam > 0:
                    raise ValueError(f"lambda {i} must be positive")
            self._rule = None
            if declared_sup is None:
                top = max(self._lams)
                declared_sup = DeclaredBound(top, ATTAINED)
            if declared_inf is None:
                bot = min(self._lams)
                declared_inf = DeclaredBound(bot, ATTAINED)
        else:
            if rule is None:
                raise ValueError("generated chain map needs a lambda rule")
            self._lams = None
            self._rule = _as_rule(rule, "lambda")
        self.declared_sup = declared_sup
        self.declared_inf = declared_inf

    @property
    def finite(self) -> bool:
        return self._lams is not None

    def __len__(self) -> int:
        if self._lams is None:
            raise TypeError("generated chain map has no length")
        return len(self._lams)

    def scale(self, index: int) -> Num:
        if self._lams is not None:
            return self._lams[index]
        lam = self._rule(index)
        if not lam > 0:
            raise ValueError(f"generated lambda at n={index} must be positive")
        return lam

    def check_consistency(self, indices: Iterable[int]) -> None:
        """Verify computed scales sit inside the declared [inf, sup] envelope."""
        sup = self.declared_sup
        inf = self.declared_inf
        for i in indices:
            lam = self.scale(i)
            if sup is not None and lam > sup.value + _slack(lam, sup.value):
                raise ValueError(
                    f"lambda at index {i} exceeds declared sup: {lam} > {sup.value}"
                )
            if inf is not None and lam < inf.value - _slack(lam, inf.value):
                raise ValueError(
                    f"lambda at index {i} undercuts declared inf: {lam} < {inf.value}"
                )


def _slack(x: Num, y: Num) -> Num:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return Fraction(0)
    return FLOAT_SLACK


class ConeDifferential:
    """Nonnegative cylinder weights; None means the constant weight 1."""

    def __init__(self, weights=None, *, rule=None):
        if weights is not None and rule is not None:
            raise ValueError("give either explicit weights or a rule")
        if weights is not None:
            self._w = [as_num(x) for x in weights]
            if any(w < 0 for w in self._w):
                raise ValueError("weights must be nonnegative")
            if all(w == 0 for w in self._w):
                raise ValueError("weights must not all be zero")
            self._rule = None
        else:
            self._w = None
            self._rule = None if rule is None else _as_rule(rule, "w")

    @property
    def is_unit(self) -> bool:
        """True for the constant weight 1."""
        return self._w is None and self._rule is None

    @property
    def support_size(self) -> int | None:
        """Length of the explicit weight list; None for rule/constant weights."""
        return None if self._w is None else len(self._w)

    def weight(self, index: int, chain: CylinderChain) -> Num:
        if self._w is not None:
            pos = index if chain.finite else index - 1
            if 0 <= pos < len(self._w):
                return self._w[pos]
            return Fraction(0)
        if self._rule is not None:
            w = self._rule(index)
            if w < 0:
                raise ValueError(f"weight at index {index} must be nonnegative")
            return w
        return Fraction(1)


UNIT_WEIGHTS = ConeDifferential()


def _term_rule(chain: CylinderChain, w: ConeDifferential | None,
               extra: Callable[[int], Num] | None = None) -> Callable[[int], Num]:
    w = w or UNIT_WEIGHTS

    def term(index: int) -> Num:
        a, b = chain.cylinder(index)
        t = w.weight(index, chain) * a * b
        if extra is not None:
            t = t * extra(index)
        return t

    return term


def _adaptive_sum(term: Callable[[int], Num], start: int) -> float:
    """Float estimate of an infinite sum of nonnegative terms.

    Stops once a long run of terms is negligible against the accumulated
    value; raises DivergenceError when no such run appears or the partial
    sums blow up.
    """
    total = 0.0
    flat = 0
    n = start
    while n < start + ADAPTIVE_MAX_TERMS:
        t = float(term(n))
        total += t
        if total > 1e15:
            raise DivergenceError("partial sums exceed 1e15; chain norm diverges")
        if t <= ADAPTIVE_REL_TOL * (1.0 + total):
            flat += 1
            if flat >= ADAPTIVE_FLAT_RUN:
                return total
        else:
            flat = 0
        n += 1
    raise DivergenceError(
        f"chain sum did not converge within {ADAPTIVE_MAX_TERMS} terms"
    )


def chain_norm(chain: CylinderChain, w: ConeDifferential | None = None) -> Num:
    """Norm sum(w_n * a_n * b_n); exact whenever the inputs are rational.

    For generated chains the value is the declared total norm (checked for
    consistency against a prefix) when the weights are the constant 1, the
    exact partial sum when the weights have finite support, and an adaptive
    float estimate otherwise.  Raises DivergenceError when the tail is not
    summable.
    """
    w = w or UNIT_WEIGHTS
    if chain.finite:
        total = sum(t for t in map(_term_rule(chain, w), chain.indices(len(chain))))
        if not total > 0:
            raise ValueError("cone differential has zero norm on this chain")
        return total
    if w.support_size is not None:
        return sum(map(_term_rule(chain, w), range(1, w.support_size + 1)))
    if chain.total_norm_declared is not None and w.is_unit:
        declared = chain.total_norm_declared
        partial = sum(map(_term_rule(chain, None), range(1, 65)))
        if partial > declared + _slack(partial, declared):
            raise ValueError(
                f"declared total norm {declared} is below the partial sum {partial}"
            )
        return declared
    return _adaptive_sum(_term_rule(chain, w), start=1)


def chain_pushforward(chain: CylinderChain, cmap: ChainMap,
                      w: ConeDifferential | None = None):
    """Image chain (lambda_n * a_n, b_n) and its norm sum(w*lambda*a*b)."""
    if chain.finite:
        if not cmap.finite or len(cmap) != len(chain):
            raise ValueError("explicit chain map must match the chain length")
        image = CylinderChain(
            [(cmap.scale(i) * a, b) for i, a, b in chain.first(len(chain))]
        )
        norm = sum(map(_term_rule(chain, w, extra=cmap.scale), chain.indices(len(chain))))
        return image, norm
    if cmap.finite:
        raise ValueError("generated chain needs a generated chain map")
    image = CylinderChain(
        a_rule=lambda n: cmap.scale(n) * chain.cylinder(n)[0],
        b_rule=lambda n: chain.cylinder(n)[1],
    )
    w = w or UNIT_WEIGHTS
    if w.support_size is not None:
        norm = sum(
            map(_term_rule(chain, w, extra=cmap.scale), range(1, w.support_size + 1))
        )
    else:
        norm = _adaptive_sum(_term_rule(chain, w, extra=cmap.scale), start=1)
    return image, norm


@dataclass(frozen=True)
class ConeExtremal:
    """Extremal ratio over the weight cone with its attainment certificate.

    attained is True/False/None(unknown).  witness is the cylinder index
    realizing L when one is found in the computed prefix (None when the
    declaration asserts attainment beyond the prefix).  gaps[k] is
    L - max over the first k+1 prefix scales of the side objective, emitted
    only for a certified non-attained supremum/infimum.  side records whether
    L came from sup(lambda) or 1/inf(lambda).
    """

    L: Num
    attained: bool | None
    witness: int | None
    side: str
    gaps: tuple[Num, ...] | None
    prefix_max: Num
    prefix_min: Num


def _endpoint(values: list[Num], indices: list[int], declared: DeclaredBound | None,
              want_max: bool):
    """Combine prefix extremum with a declared bound into (value, flag, witness)."""
    if want_max:
        best = max(values)
    else:
        best = min(values)
    at = indices[values.index(best)]
    if declared is None:
        return best, UNKNOWN, at
    value = declared.value
    eq = abs(float(best) - float(value)) <= FLOAT_SLACK * max(1.0, abs(float(value)))
    if isinstance(best, Fraction) and isinstance(value, Fraction):
        eq = best == value
    if declared.flag == ATTAINED:
        return value, ATTAINED, (at if eq else None)
    if declared.flag == NOT_ATTAINED:
        return value, NOT_ATTAINED, None
    return value, UNKNOWN, None


def cone_extremal(chain: CylinderChain, cmap: ChainMap, n_max: int) -> ConeExtremal:
    """Extremal norm ratio max(sup lambda, 1/inf lambda) over the weight cone.

    Ratios of cone differentials fill the closed convex hull of the lambda_n,
    so the supremum of max(ratio, 1/ratio) is decided by the endpoints.  For
    finite chains the answer is exact and always attained.  For generated
    chains the declared tail metadata supplies endpoints beyond the computed
    prefix (n <= n_max); a missing declaration downgrades the answer to a
    prefix lower bound with attained=None.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    # Finite chains are decided exactly over all cylinders; n_max only limits
    # the computed prefix of a generated chain.
    indices = list(chain.indices(len(chain) if chain.finite else n_max))
    lams = [cmap.scale(i) for i in indices]
    cmap.check_consistency(indices)

    if chain.finite:
        sup_v, sup_flag, sup_at = max(lams), ATTAINED, indices[lams.index(max(lams))]
        inf_v, inf_flag, inf_at = min(lams), ATTAINED, indices[lams.index(min(lams))]
    else:
        sup_v, sup_flag, sup_at = _endpoint(lams, indices, cmap.declared_sup, True)
        inf_v, inf_flag, inf_at = _endpoint(lams, indices, cmap.declared_inf, False)

    inv_inf = (Fraction(1) / inf_v) if isinstance(inf_v, Fraction) else 1.0 / inf_v
    if sup_v >= inv_inf:
        side, L, flag, witness = "sup", sup_v, sup_flag, sup_at
    else:
        side, L, flag, witness = "inf", inv_inf, inf_flag, inf_at

    attained = {ATTAINED: True, NOT_ATTAINED: False, UNKNOWN: None}[flag]
    gaps = None
    if attained is False:
        running: list[Num] = []
        best = None
        for lam in lams:
            obj = lam if side == "sup" else (
                Fraction(1) / lam if isinstance(lam, Fraction) else 1.0 / lam
            )
            best = obj if best is None or obj > best else best
            running.append(L - best)
        if any(g <= 0 for g in running):
            raise ValueError(
                "declared non-attained endpoint is reached on the prefix"
            )
        gaps = tuple(running)
    return ConeExtremal(
        L=L,
        attained=attained,
        witness=witness if attained else None,
        side=side,
        gaps=gaps,
        prefix_max=max(lams),
        prefix_min=min(lams),
    )


@dataclass(frozen=True)
class TruncateResult:
    trunc_norm: Num
    doubled_norm: Num


def truncate_and_double(chain: CylinderChain, w: ConeDifferential | None,
                        count: int) -> TruncateResult:
    """Norm of the first `count` cylinders and of their mirror double.

    Doubling a symmetric differential across the boundary exactly doubles the
    norm; multiplication by 2 is exact in both rational and binary floating
    point arithmetic, so the identity holds exactly, never approximately.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    term = _term_rule(chain, w)
    trunc = sum((term(i) for i in chain.indices(count)), start=Fraction(0))
    return TruncateResult(trunc_norm=trunc, doubled_norm=2 * trunc)


@dataclass(frozen=True)
class ExhaustionRow:
    N: int
    L_N: Num
    trunc_norm: Num
    gap: Num


def exhaustion_diagnostics(chain: CylinderChain, cmap: ChainMap,
                           w: ConeDifferential | None, n_max: int) -> list[ExhaustionRow]:
    """Truncation table: prefix extremal ratio, prefix norm, and norm gap.

    Row N covers the first N cylinders.  trunc_norm is nondecreasing with
    limit at most the total norm, gap = total - trunc_norm is nonincreasing,
    and L_N is the nondecreasing prefix extremal ratio.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    total = chain_norm(chain, w)
    term = _term_rule(chain, w)
    rows: list[ExhaustionRow] = []
    trunc: Num = Fraction(0)
    best: Num | None = None
    for count, index in enumerate(chain.indices(n_max), start=1):
        lam = cmap.scale(index)
        inv = Fraction(1) / lam if isinstance(lam, Fraction) else 1.0 / lam
        cand = max(lam, inv)
        best = cand if best is None or cand > best else best
        trunc = trunc + term(index)
        rows.append(ExhaustionRow(N=count, L_N=best, trunc_norm=trunc, gap=total - trunc))
    return rows


# ---------------------------------------------------------------------------
# JSON chain specifications.
#
#   {"cylinders": [{"a": 1, "b": 1, "lambda": 1.5, "w": 1}, ...]}
#   {"generator": {"a": "1", "b": "2^-n", "lambda": "2-1/(n+1)",
#                  "sup": 2, "sup_attained": false,
#                  "inf": 1, "inf_attained": true,        # optional
#                  "monotone": "increasing",              # optional certificate
#                  "total_norm": 1, "w": "1"}}            # optional
# ---------------------------------------------------------------------------


def _flag(value) -> str:
    if isinstance(value, bool):
        return ATTAINED if value else NOT_ATTAINED
    if value in _FLAGS:
        return value
    raise ValueError(f"bad attainment flag {value!r}")


def load_chain_spec(obj: dict):
    """Parse a chain specification into (chain, chain_map, weights)."""
    if not isinstance(obj, dict):
        raise ValueError("chain spec must be a JSON object")
    if "cylinders" in obj:
        rows = obj["cylinders"]
        if not isinstance(rows, list) or not rows:
            raise ValueError("cylinders must be a nonempty list")
        chain = CylinderChain([(row["a"], row["b"]) for row in rows])
        cmap = ChainMap([row.get("lambda", 1) for row in rows])
        if any("w" in row for row in rows):
            w = ConeDifferential([row.get("w", 1) for row in rows])
        else:
            w = None
        return chain, cmap, w
    if "generator" in obj:
        gen = obj["generator"]
        for key in ("a", "b", "lambda"):
            if key not in gen:
                raise ValueError(f"generator spec needs {key!r}")
        chain = CylinderChain(
            a_rule=gen["a"], b_rule=gen["b"], total_norm=gen.get("total_norm")
        )
        sup = inf = None
        if "sup" in gen:
            sup = DeclaredBound(as_num(gen["sup"]), _flag(gen.get("sup_attained", UNKNOWN)))
        if "inf" in gen:
            inf = DeclaredBound(as_num(gen["inf"]), _flag(gen.get("inf_attained", UNKNOWN)))
        rule = Expression(gen["lambda"]) if isinstance(gen["lambda"], str) else gen["lambda"]
        monotone = gen.get("monotone")
        if monotone not in (None, "increasing", "decreasing"):
            raise ValueError("monotone certificate must be 'increasing' or 'decreasing'")
        lam1 = _as_rule(rule, "lambda")(1)
        if monotone == "increasing" and inf is None:
            inf = DeclaredBound(lam1, ATTAINED)
        if monotone == "decreasing" and sup is None:
            sup = DeclaredBound(lam1, ATTAINED)
        cmap = ChainMap(rule=rule, declared_sup=sup, declared_inf=inf)
        w = ConeDifferential(rule=gen["w"]) if "w" in gen else None
        return chain, cmap, w
    raise ValueError("chain spec needs 'cylinders' or 'generator'")
