"""S-expression reader and printer for formulas and sequents.

Grammar::

    f ::= top | bot | (atom NAME) | (diag i j)
        | (and f f) | (or f f) | (impl f f)
        | (cyl i f) | (ucyl i f)
        | (subst ((i j) ...) [base] f)
    base ::= id | (shift k) | (unshift k)

A sequent is a run of formulas, the token ``|-``, and another run.
A text may begin with a JSON object declaring the signature.
"""

from __future__ import annotations

import json
import re

from .errors import ParseError, SignatureError
from .syntax import (
    BOT, TOP, And, Atom, Bot, Cyl, Diag, Formula, Impl, Or, Signature, Subst, Top,
    Transformation, UCyl, check_formula,
)

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(\|-)|([^\s()]+))")
TURNSTILE = "|-"


def tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError("unexpected character", pos)
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start))
        pos = m.end()
    return out


def read_sexprs(text: str):
    """Nested lists of ``(token, offset)`` leaves."""
    stack = [[]]
    opens = []
    for tok, off in tokenize(text):
        if tok == "(":
            stack.append([])
            opens.append(off)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", off)
            done = stack.pop()
            stack[-1].append((done, opens.pop()))
        else:
            stack[-1].append((tok, off))
    if len(stack) != 1:
        raise ParseError("unclosed '('", opens[-1])
    return stack[0]


def _int(node, what="index"):
    tok, off = node
    if isinstance(tok, list):
        raise ParseError(f"expected {what}", off)
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"expected {what}, got {tok!r}", off) from None
    if value < 0:
        raise ParseError(f"negative {what}", off)
    return value


def _base(node) -> int:
    tok, off = node
    if tok == "id":
        return 0
    if isinstance(tok, list) and len(tok) == 2 and tok[0][0] in ("shift", "unshift"):
        k = _int(tok[1], "offset")
        return k if tok[0][0] == "shift" else -k
    raise ParseError("expected a base pattern: id, (shift k) or (unshift k)", off)


def _build(node, sig: Signature | None) -> Formula:
    tok, off = node
    if not isinstance(tok, list):
        if tok == "top":
            return TOP
        if tok == "bot":
            return BOT
        raise ParseError(f"unexpected token {tok!r}", off)
    if not tok:
        raise ParseError("empty list", off)
    head, hoff = tok[0]
    if isinstance(head, list):
        raise ParseError("operator expected", hoff)
    args = tok[1:]

    def arity(n):
        if len(args) != n:
            raise ParseError(f"{head} takes {n} arguments, got {len(args)}", off)

    if head == "atom":
        arity(1)
        name, noff = args[0]
        if isinstance(name, list):
            raise ParseError("atom name expected", noff)
        if sig is None:
            return Atom(name)
        try:
            return sig.atom(name)
        except SignatureError as exc:
            raise ParseError(str(exc), noff) from None
    if head in ("and", "or", "impl"):
        arity(2)
        cls = {"and": And, "or": Or, "impl": Impl}[head]
        return cls(_build(args[0], sig), _build(args[1], sig))
    if head in ("cyl", "ucyl"):
        arity(2)
        cls = Cyl if head == "cyl" else UCyl
        return cls(_int(args[0]), _build(args[1], sig))
    if head == "diag":
        arity(2)
        return Diag(_int(args[0]), _int(args[1]))
    if head == "subst":
        if len(args) not in (2, 3):
            raise ParseError("subst takes a pair list, an optional base and a body", off)
        pairs, poff = args[0]
        if not isinstance(pairs, list):
            raise ParseError("expected a list of (i j) pairs", poff)
        mapping = {}
        for pair, qoff in pairs:
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError("expected a pair (i j)", qoff)
            i = _int(pair[0])
            if i in mapping:
                raise ParseError(f"index {i} mapped twice", qoff)
            mapping[i] = _int(pair[1])
        offset = _base(args[1]) if len(args) == 3 else 0
        return Subst(Transformation.from_mapping(mapping, offset), _build(args[-1], sig))
    raise ParseError(f"unknown operator {head!r}", hoff)


def split_header(text: str):
    """Strip a leading JSON signature object, returning ``(signature|None, rest)``."""
    stripped = text.lstrip()
    if not stripped.startswith("{"):
        return None, text
    try:
        data, end = json.JSONDecoder().raw_decode(stripped)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad signature header: {exc.msg}", exc.pos) from None
    try:
        return Signature.from_json(data), stripped[end:]
    except (SignatureError, ValueError) as exc:
        raise ParseError(f"bad signature header: {exc}") from None


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    """Parse one formula; with a signature, atoms and indices are validated."""
    header, text = split_header(text)
    sig = header or sig
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ParseError(f"expected one formula, found {len(nodes)}", nodes[1][1] if nodes else 0)
    f = _build(nodes[0], sig)
    if sig is not None:
        try:
            check_formula(f, sig)
        except SignatureError as exc:
            raise ParseError(str(exc)) from None
    return f


def parse_sequent(text: str, sig: Signature | None = None):
    """Parse ``gamma |- delta``; a text without a turnstile is ``|- f ...``."""
    header, text = split_header(text)
    sig = header or sig
    nodes = read_sexprs(text)
    marks = [k for k, (tok, _) in enumerate(nodes) if tok == TURNSTILE]
    if len(marks) > 1:
        raise ParseError("more than one turnstile", nodes[marks[1]][1])
    if marks:
        left, right = nodes[: marks[0]], nodes[marks[0] + 1:]
    else:
        left, right = [], nodes
    gamma = [_build(n, sig) for n in left]
    delta = [_build(n, sig) for n in right]
    if sig is not None:
        for f in gamma + delta:
            try:
                check_formula(f, sig)
            except SignatureError as exc:
                raise ParseError(str(exc)) from None
    return gamma, delta, sig


def print_formula(f: Formula) -> str:
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Bot):
        return "bot"
    if isinstance(f, Atom):
        return f"(atom {f.name})"
    if isinstance(f, Diag):
        return f"(diag {f.i} {f.j})"
    if isinstance(f, And):
        return f"(and {print_formula(f.left)} {print_formula(f.right)})"
    if isinstance(f, Or):
        return f"(or {print_formula(f.left)} {print_formula(f.right)})"
    if isinstance(f, Impl):
        return f"(impl {print_formula(f.left)} {print_formula(f.right)})"
    if isinstance(f, Cyl):
        return f"(cyl {f.index} {print_formula(f.body)})"
    if isinstance(f, UCyl):
        return f"(ucyl {f.index} {print_formula(f.body)})"
    if isinstance(f, Subst):
        pairs = " ".join(f"({i} {j})" for i, j in f.tau.overrides)
        off = f.tau.offset
        base = "" if off == 0 else (f" (shift {off})" if off > 0 else f" (unshift {-off})")
        return f"(subst ({pairs}){base} {print_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def print_sequent(gamma, delta) -> str:
    left = " ".join(print_formula(f) for f in gamma)
    right = " ".join(print_formula(f) for f in delta)
    return f"{left} |- {right}".strip()
