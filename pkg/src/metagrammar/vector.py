"""Vectorized evaluation of terms over an entire finite input domain.

Bitvectors are unsigned arrays of the narrowest dtype holding their width
(see ``dtype_for``); Booleans are ``bool`` arrays. One element per domain point.
Every value of a given sort has the same dtype, so raw bytes identify values.
"""
from __future__ import annotations

import functools
import math

import numpy as np

from .terms import BOOL, App, Lit, Sort, Var, result_sort

MAX_VAR_WIDTH = 8
MAX_DOMAIN = 1 << 16


class DomainTooLarge(ValueError):
    pass


def dtype_for(sort: Sort):
    if sort == BOOL:
        return np.dtype(bool)
    for dt in (np.uint8, np.uint16, np.uint32):
        if sort.width <= np.iinfo(dt).bits:
            return np.dtype(dt)
    return np.dtype(np.uint64)


def domain_arrays(variables) -> tuple[dict[str, np.ndarray], int]:
    """Arrays enumerating every assignment of ``variables`` (a sequence of
    ``(name, Sort)``) in lexicographic order, first variable most significant."""
    sizes = []
    for name, s in variables:
        if s.is_bv and s.width > MAX_VAR_WIDTH:
            raise DomainTooLarge(f"input space too large: {name} has width {s.width} > {MAX_VAR_WIDTH}")
        sizes.append(s.size)
    total = math.prod(sizes)
    if total > MAX_DOMAIN:
        raise DomainTooLarge(f"input space too large: {total} points > {MAX_DOMAIN}")
    if not variables:
        return {}, 1
    grids = np.indices(sizes).reshape(len(sizes), -1)
    out = {}
    for (name, s), g in zip(variables, grids):
        out[name] = g.astype(dtype_for(s))
    return out, total


def constant(lit: Lit, n: int) -> np.ndarray:
    return np.full(n, lit.value, dtype=dtype_for(lit.sort))


def _signed(a, w: int):
    a = np.asarray(a).astype(np.uint64)
    if w == 64:
        return a.view(np.int64)
    return a.astype(np.int64) - ((a >> np.uint64(w - 1)) & np.uint64(1)).astype(np.int64) * (1 << w)


def vec_apply(op: str, args, sort: Sort | None):
    """Apply ``op`` elementwise; ``sort`` is the sort of the first argument."""
    r = _apply(op, args, sort)
    if sort is not None and sort.is_bv and op not in _PREDICATES:
        return np.asarray(r).astype(dtype_for(sort), copy=False)
    return r


_PREDICATES = frozenset(("=", "distinct", "bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle"))


def _apply(op, args, sort):
    if op == "not":
        return np.logical_not(args[0])
    if op == "and":
        return functools.reduce(np.logical_and, args)
    if op == "or":
        return functools.reduce(np.logical_or, args)
    if op == "xor":
        return functools.reduce(np.logical_xor, args)
    if op == "=>":
        acc = args[-1]
        for a in reversed(args[:-1]):
            acc = np.logical_or(np.logical_not(a), acc)
        return acc
    if op == "ite":
        return np.where(args[0], args[1], args[2])
    if op == "=":
        return args[0] == args[1]
    if op == "distinct":
        return args[0] != args[1]
    w = sort.width
    m = (1 << w) - 1
    # unsigned arithmetic wraps modulo the dtype size, a multiple of 2**w
    a = np.asarray(args[0])
    if op == "bvnot":
        return ~a & m
    if op == "bvneg":
        return np.negative(a) & m
    b = np.asarray(args[1])
    if op == "bvand":
        return a & b
    if op == "bvor":
        return a | b
    if op == "bvxor":
        return a ^ b
    if op == "bvadd":
        return (a + b) & m
    if op == "bvsub":
        return (a - b) & m
    if op == "bvmul":
        return (a * b) & m
    if op == "bvult":
        return a < b
    if op == "bvule":
        return a <= b
    if op == "bvugt":
        return a > b
    if op == "bvuge":
        return a >= b
    a, b = a.astype(np.uint64), b.astype(np.uint64)
    if op in ("bvudiv", "bvurem"):
        zero = b == 0
        safe = np.where(zero, np.uint64(1), b)
        if op == "bvudiv":
            return np.where(zero, np.uint64(m), a // safe)
        return np.where(zero, a, a % safe)
    if op in ("bvshl", "bvlshr", "bvashr"):
        big = b >= w
        sh = np.minimum(b, np.uint64(63))
        if op == "bvshl":
            return np.where(big, np.uint64(0), (a << sh) & m)
        if op == "bvlshr":
            return np.where(big, np.uint64(0), a >> sh)
        return (_signed(a, w) >> sh.astype(np.int64)).astype(np.uint64) & m
    if op == "bvslt":
        return _signed(a, w) < _signed(b, w)
    if op == "bvsle":
        return _signed(a, w) <= _signed(b, w)
    raise ValueError(f"unknown operator {op!r}")


def _index(args, sorts) -> np.ndarray:
    idx = 0
    for a, s in zip(args, sorts):
        idx = idx * s.size + np.asarray(a).astype(np.int64)
    return idx


class ConstraintChecker:
    """Evaluates a problem's constraints over its universal domain, with the
    target function given as a value table over its own parameter domain.

    Subterms that do not mention the target are evaluated once up front.
    """

    def __init__(self, problem):
        self.problem = problem
        self.env, self.n = domain_arrays(problem.universal_vars)
        self.target = problem.target
        self.helpers = problem.helpers
        self.functions = problem.functions()
        self.var_sorts = problem.var_sorts
        self.parts = [self._compile(c, self.env, self.var_sorts) for c in problem.constraints]

    def _compile(self, t, env, var_sorts):
        """Return ``(value, sort)`` where value is an array or a callable of the table."""
        if isinstance(t, Lit):
            return constant(t, self.n), t.sort
        if isinstance(t, Var):
            return env[t.name], var_sorts[t.name]
        compiled = [self._compile(a, env, var_sorts) for a in t.args]
        vals = [v for v, _ in compiled]
        sorts = [s for _, s in compiled]
        static = not any(callable(v) for v in vals)
        if t.op == self.target.name:
            if static:
                idx = _index(vals, sorts)
                return (lambda tab: tab[..., idx]), self.target.return_sort
            return (lambda tab: _lookup(tab, _index([_force(v, tab) for v in vals], sorts))), self.target.return_sort
        if t.op in self.helpers:
            h = self.helpers[t.op]
            inner_sorts = dict(h.signature.params)
            if static:
                inner = dict(zip(h.signature.param_names, vals))
                return self._compile(h.body, inner, inner_sorts)
            names = h.signature.param_names

            def call(tab, vals=vals):
                inner = {nm: _force(v, tab) for nm, v in zip(names, vals)}
                v, _ = self._compile(h.body, inner, inner_sorts)
                return _force(v, tab)

            return call, h.signature.return_sort
        rs = result_sort(t.op, sorts)
        first = sorts[0] if sorts else None
        if static:
            return vec_apply(t.op, vals, first), rs
        return (lambda tab: vec_apply(t.op, [_force(v, tab) for v in vals], first)), rs

    def holds(self, table: np.ndarray) -> bool:
        return bool(self.holds_batch(table[None, :])[0])

    def holds_batch(self, tables: np.ndarray) -> np.ndarray:
        """``tables`` has one candidate per row; returns a bool per row."""
        ok = np.ones(len(tables), dtype=bool)
        for v, _ in self.parts:
            r = _force(v, tables)
            if r.ndim == 1:
                if not r.all():
                    return np.zeros(len(tables), dtype=bool)
            else:
                ok &= r.all(axis=-1)
        return ok


def _lookup(tab, idx):
    if tab.ndim == 1:
        return tab[idx]
    idx = np.broadcast_to(idx, tab.shape[:-1] + idx.shape[-1:])
    return np.take_along_axis(tab, idx, axis=-1)


def _force(v, table):
    return v(table) if callable(v) else v
