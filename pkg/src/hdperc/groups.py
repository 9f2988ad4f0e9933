"""Word arithmetic for the finitely presented groups behind the Cayley families.

Letters are nonzero integers; ``-x`` is the inverse of ``x``.  Words are tuples.
"""
import random

from .errors import InvalidInput


def parse_word(text, alphabet="abcdefghijklmnopqrstuvwxyz"):
    """``"aB"`` -> ``(1, -2)``; upper case letters are inverses."""
    word = []
    for ch in text.strip():
        low = ch.lower()
        if low not in alphabet:
            raise InvalidInput(f"bad letter {ch!r} in word {text!r}")
        k = alphabet.index(low) + 1
        word.append(-k if ch.isupper() else k)
    return free_reduce(word)


def word_str(word, alphabet="abcdefghijklmnopqrstuvwxyz"):
    if not word:
        return "1"
    return "".join(alphabet[abs(x) - 1].upper() if x < 0 else alphabet[x - 1] for x in word)


def free_reduce(word):
    out = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(word):
    return tuple(-x for x in reversed(word))


def multiply(u, v):
    """Freely reduced product of two freely reduced words."""
    i = 0
    n = len(u)
    while i < len(v) and i < n and u[n - 1 - i] == -v[i]:
        i += 1
    return u[: n - i] + tuple(v[i:])


class SurfaceGroup:
    """Fundamental group of the closed orientable surface of genus ``g``.

    Presentation ``<a1, b1, ..., ag, bg | [a1, b1] ... [ag, bg]>`` with
    ``a_i = 2i - 1`` and ``b_i = 2i``.  The word problem is solved by Dehn's
    algorithm, valid because the relator satisfies C'(1/6) for g >= 2.
    """

    def __init__(self, genus):
        if genus < 2:
            raise InvalidInput("surface groups need genus >= 2")
        self.genus = genus
        rel = []
        for i in range(genus):
            a, b = 2 * i + 1, 2 * i + 2
            rel += [a, b, -a, -b]
        self.relator = tuple(rel)
        n = len(rel)
        self._rules = {}
        for r in (self.relator, inverse(self.relator)):
            for s in range(n):
                cyc = r[s:] + r[:s]
                # more than half of a relator -> inverse of the complementary part
                for length in range(n // 2 + 1, n + 1):
                    self._rules[cyc[:length]] = inverse(cyc[length:])
        self._min_len = n // 2 + 1
        self._max_len = n

    @property
    def generators(self):
        return tuple(range(1, 2 * self.genus + 1))

    def dehn_reduce(self, word):
        """Shorten ``word`` with Dehn's algorithm; returns a Dehn-reduced word."""
        w = list(free_reduce(word))
        i = 0
        while i < len(w):
            hit = False
            for length in range(min(self._max_len, len(w) - i), self._min_len - 1, -1):
                rep = self._rules.get(tuple(w[i:i + length]))
                if rep is not None:
                    w[i:i + length] = rep
                    w = list(free_reduce(w))
                    i = max(0, i - self._max_len)
                    hit = True
                    break
            if not hit:
                i += 1
        return tuple(w)

    def is_identity(self, word):
        return not self.dehn_reduce(word)

    def equal(self, u, v):
        return self.is_identity(multiply(inverse(v), u))


# --- modular SL(2) representations used only as hash keys ----------------

_P = 2147483647  # 2**31 - 1, congruent to 3 mod 4


def _mat_mul(x, y, p=_P):
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)


def _mat_inv(x, p=_P):
    a, b, c, d = x
    return (d % p, -b % p, -c % p, a % p)


def _sqrt_mod(a, p=_P):
    a %= p
    r = pow(a, (p + 1) // 4, p)
    return r if r * r % p == a else None


def _nullspace_mod(rows, ncols, p=_P):
    m = [list(r) for r in rows]
    pivots = []
    row = 0
    for col in range(ncols):
        piv = next((i for i in range(row, len(m)) if m[i][col] % p), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = pow(m[row][col], p - 2, p)
        m[row] = [v * inv % p for v in m[row]]
        for i in range(len(m)):
            if i != row and m[i][col] % p:
                f = m[i][col]
                m[i] = [(vi - f * vr) % p for vi, vr in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc] % p
        basis.append(v)
    return basis


def _random_sl2(rng, p=_P):
    while True:
        a, b, c = rng.randrange(p), rng.randrange(p), rng.randrange(p)
        if a:
            d = (1 + b * c) * pow(a, p - 2, p) % p
            return (a, b, c, d)


def _solve_commutator(target, rng, p=_P):
    """Find A, B in SL(2, F_p) with A B A^-1 B^-1 == target."""
    t00, t01, t10, t11 = target
    m00, m01, m10, m11 = (t00 - 1) % p, t01, t10, (t11 - 1) % p
    for _ in range(1000):
        y, z = rng.randrange(p), rng.randrange(p)
        c = -(y * m10 + z * m01) % p
        # x*m00 + w*m11 = c  and  x*w - y*z = 1
        if m11:
            inv11 = pow(m11, p - 2, p)
            qa, qb, qc = -m00 * inv11 % p, c * inv11 % p, -(1 + y * z) % p
            if qa == 0:
                if not qb:
                    continue
                x = -qc * pow(qb, p - 2, p) % p
            else:
                root = _sqrt_mod(qb * qb - 4 * qa * qc, p)
                if root is None:
                    continue
                x = (-qb + root) * pow(2 * qa, p - 2, p) % p
            w = (c - x * m00) * inv11 % p
        elif m00:
            w = rng.randrange(1, p)
            x = c * pow(m00, p - 2, p) % p
            # fix det by rescaling y
            if not z:
                continue
            y = (x * w - 1) * pow(z, p - 2, p) % p
            if (y * m10 + z * m01 + x * m00 + w * m11) % p:
                continue
        else:
            continue
        X = (x, y, z, w)
        if (x * w - y * z) % p != 1:
            continue
        XC = _mat_mul(X, target, p)
        # B X - XC B = 0, unknowns B = (b0, b1, b2, b3)
        x0, x1, x2, x3 = X
        y0, y1, y2, y3 = XC
        rows = [
            [(x0 - y0) % p, x2, -y1 % p, 0],
            [x1, (x3 - y0) % p, 0, -y1 % p],
            [-y2 % p, 0, (x0 - y3) % p, x2],
            [0, -y2 % p, x1, (x3 - y3) % p],
        ]
        basis = _nullspace_mod(rows, 4, p)
        if not basis:
            continue
        for _ in range(50):
            coef = [rng.randrange(p) for _ in basis]
            B = [sum(cf * v[k] for cf, v in zip(coef, basis)) % p for k in range(4)]
            det = (B[0] * B[3] - B[1] * B[2]) % p
            if not det:
                continue
            s = _sqrt_mod(det, p)
            if s is None:
                continue
            sinv = pow(s, p - 2, p)
            B = tuple(v * sinv % p for v in B)
            A = _mat_inv(X, p)
            comm = _mat_mul(_mat_mul(_mat_mul(A, B, p), _mat_inv(A, p), p), _mat_inv(B, p), p)
            if comm == tuple(v % p for v in target):
                return A, B
    raise RuntimeError("could not solve commutator equation")  # pragma: no cover


def surface_representation(genus, seed):
    """Images of the generators under a random homomorphism to SL(2, F_p)."""
    rng = random.Random(seed)
    mats = []
    acc = (1, 0, 0, 1)
    for _ in range(genus - 1):
        A, B = _random_sl2(rng), _random_sl2(rng)
        mats += [A, B]
        acc = _mat_mul(acc, _mat_mul(_mat_mul(_mat_mul(A, B), _mat_inv(A)), _mat_inv(B)))
    A, B = _solve_commutator(_mat_inv(acc), rng)
    mats += [A, B]
    table = {}
    for k, m in enumerate(mats, start=1):
        table[k] = m
        table[-k] = _mat_inv(m)
    return table


def rep_image(table, word):
    acc = (1, 0, 0, 1)
    for x in word:
        acc = _mat_mul(acc, table[x])
    return acc
