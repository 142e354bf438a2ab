"""Batch kernels over words encoded as int64 rows.

Letters are signed generator indices (1-based), 0 is padding.  Each kernel
exists twice: a numba-compiled version and a plain numpy/Python version.
Set ``GGT_DISABLE_NUMBA=1`` to force the plain path (also used when numba
is not importable).
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("GGT_DISABLE_NUMBA", "").strip().lower()
    return _HAVE_NUMBA and flag not in ("1", "true", "yes", "on")


def ball_size(k: int, n: int) -> int:
    """Number of reduced words of length <= n over k generators."""
    total, layer = 1, 2 * k
    for _ in range(n):
        total += layer
        layer *= 2 * k - 1
    return total


def letter_order(k: int) -> np.ndarray:
    # shortlex letter order: a < a^-1 < b < b^-1 < ...
    out = np.empty(2 * k, dtype=np.int64)
    for i in range(k):
        out[2 * i] = i + 1
        out[2 * i + 1] = -(i + 1)
    return out


# ---------------------------------------------------------------- plain path


def _ball_py(k: int, n: int):
    order = letter_order(k)
    words = np.zeros((ball_size(k, n), max(n, 1)), dtype=np.int64)
    lengths = np.zeros(words.shape[0], dtype=np.int64)
    if n == 0 or k == 0:
        return words[:1], lengths[:1]
    prev = np.zeros((1, 0), dtype=np.int64)
    pos = 1
    for length in range(1, n + 1):
        if length == 1:
            layer = order.reshape(-1, 1)
        else:
            last = prev[:, -1]
            rep = np.repeat(prev, order.size, axis=0)
            tail = np.tile(order, prev.shape[0])
            keep = tail != -np.repeat(last, order.size)
            layer = np.concatenate([rep[keep], tail[keep].reshape(-1, 1)], axis=1)
        words[pos:pos + layer.shape[0], :length] = layer
        lengths[pos:pos + layer.shape[0]] = length
        pos += layer.shape[0]
        prev = layer
    return words, lengths


def _push(stack: list, letter: int) -> None:
    if stack and stack[-1] == -letter:
        stack.pop()
    else:
        stack.append(letter)


def _image_py(row, length, table, tlen) -> list:
    stack: list = []
    for i in range(length):
        x = int(row[i])
        g = abs(x) - 1
        seg = table[g, : tlen[g]]
        if x > 0:
            for y in seg:
                _push(stack, int(y))
        else:
            for y in seg[::-1]:
                _push(stack, -int(y))
    return stack


def _substitute_trivial_py(words, lengths, table, tlen):
    out = np.zeros(words.shape[0], dtype=np.bool_)
    for r in range(words.shape[0]):
        out[r] = len(_image_py(words[r], lengths[r], table, tlen)) == 0
    return out


def _conj_commutes_py(words, lengths, c, d):
    out = np.zeros(words.shape[0], dtype=np.bool_)
    c = [int(x) for x in c]
    d = [int(x) for x in d]
    for r in range(words.shape[0]):
        g = [int(x) for x in words[r, : lengths[r]]]
        stack: list = []
        for x in g:
            _push(stack, x)
        for x in c:
            _push(stack, x)
        for x in reversed(g):
            _push(stack, -x)
        conj = list(stack)
        for x in d:
            _push(stack, x)
        for x in reversed(conj):
            _push(stack, -x)
        for x in reversed(d):
            _push(stack, -x)
        out[r] = len(stack) == 0
    return out


def _reduce_rows_py(words, lengths):
    out = np.zeros_like(words)
    outlen = np.zeros_like(lengths)
    for r in range(words.shape[0]):
        stack: list = []
        for i in range(lengths[r]):
            _push(stack, int(words[r, i]))
        out[r, : len(stack)] = stack
        outlen[r] = len(stack)
    return out, outlen


# ---------------------------------------------------------------- numba path

if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _ball_nb(k, n, order, total):
        width = n if n > 0 else 1
        words = np.zeros((total, width), dtype=np.int64)
        lengths = np.zeros(total, dtype=np.int64)
        start, stop, pos = 0, 1, 1
        for length in range(1, n + 1):
            for r in range(start, stop):
                prevlen = lengths[r]
                last = words[r, prevlen - 1] if prevlen > 0 else 0
                for j in range(order.shape[0]):
                    x = order[j]
                    if x == -last:
                        continue
                    for i in range(prevlen):
                        words[pos, i] = words[r, i]
                    words[pos, prevlen] = x
                    lengths[pos] = length
                    pos += 1
            start, stop = stop, pos
        return words, lengths

    @numba.njit(cache=True)
    def _substitute_trivial_nb(words, lengths, table, tlen):
        n = words.shape[0]
        out = np.zeros(n, dtype=np.bool_)
        cap = words.shape[1] * table.shape[1] + 1
        stack = np.zeros(cap, dtype=np.int64)
        for r in range(n):
            top = 0
            for i in range(lengths[r]):
                x = words[r, i]
                g = abs(x) - 1
                m = tlen[g]
                for j in range(m):
                    y = table[g, j] if x > 0 else -table[g, m - 1 - j]
                    if top > 0 and stack[top - 1] == -y:
                        top -= 1
                    else:
                        stack[top] = y
                        top += 1
            out[r] = top == 0
        return out

    @numba.njit(cache=True)
    def _conj_commutes_nb(words, lengths, c, d):
        n = words.shape[0]
        out = np.zeros(n, dtype=np.bool_)
        cap = 4 * (words.shape[1] + c.shape[0] + d.shape[0]) + 4
        stack = np.zeros(cap, dtype=np.int64)
        conj = np.zeros(cap, dtype=np.int64)
        for r in range(n):
            top = 0
            L = lengths[r]
            for i in range(L):
                y = words[r, i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            for i in range(c.shape[0]):
                y = c[i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            for i in range(L - 1, -1, -1):
                y = -words[r, i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            clen = top
            for i in range(clen):
                conj[i] = stack[i]
            for i in range(d.shape[0]):
                y = d[i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            for i in range(clen - 1, -1, -1):
                y = -conj[i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            for i in range(d.shape[0] - 1, -1, -1):
                y = -d[i]
                if top > 0 and stack[top - 1] == -y:
                    top -= 1
                else:
                    stack[top] = y
                    top += 1
            out[r] = top == 0
        return out

    @numba.njit(cache=True)
    def _reduce_rows_nb(words, lengths):
        out = np.zeros_like(words)
        outlen = np.zeros_like(lengths)
        for r in range(words.shape[0]):
            top = 0
            for i in range(lengths[r]):
                y = words[r, i]
                if top > 0 and out[r, top - 1] == -y:
                    top -= 1
                else:
                    out[r, top] = y
                    top += 1
            out[r, top:] = 0  # cancelled letters leave stale entries
            outlen[r] = top
        return out, outlen


# ---------------------------------------------------------------- dispatch


def ball(k: int, n: int):
    """All reduced words of length <= n over k generators, shortlex order.

    Returns ``(words, lengths)``; row 0 is the empty word.
    """
    if k == 0 or n == 0:
        return np.zeros((1, max(n, 1)), dtype=np.int64), np.zeros(1, dtype=np.int64)
    if numba_enabled():
        return _ball_nb(k, n, letter_order(k), ball_size(k, n))
    return _ball_py(k, n)


def _as_table(images):
    width = max([len(w) for w in images] + [1])
    table = np.zeros((len(images), width), dtype=np.int64)
    tlen = np.zeros(len(images), dtype=np.int64)
    for i, w in enumerate(images):
        table[i, : len(w)] = w
        tlen[i] = len(w)
    return table, tlen


def substitute_trivial(words, lengths, images):
    """Mask of rows whose image under the substitution ``gen i -> images[i]``
    freely reduces to the empty word."""
    table, tlen = _as_table(images)
    if numba_enabled():
        return _substitute_trivial_nb(words, lengths, table, tlen)
    return _substitute_trivial_py(words, lengths, table, tlen)


def conj_commutes(words, lengths, c, d):
    """Mask of rows g with g c g^-1 commuting with d in the free group."""
    c = np.asarray(c, dtype=np.int64)
    d = np.asarray(d, dtype=np.int64)
    if numba_enabled():
        return _conj_commutes_nb(words, lengths, c, d)
    return _conj_commutes_py(words, lengths, c, d)


def reduce_rows(words, lengths):
    """Freely reduce every row; returns new ``(words, lengths)``."""
    if numba_enabled():
        return _reduce_rows_nb(words, lengths)
    return _reduce_rows_py(words, lengths)
