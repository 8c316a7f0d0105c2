"""Small number-theoretic helpers."""

import math


def factorize(n: int) -> dict:
    """Prime factorization by trial division, as ``{prime: exponent}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(n: int) -> int:
    """Euler's totient: the number of units modulo n."""
    phi = n
    for p in factorize(n):
        phi = phi // p * (p - 1)
    return phi


def units(n: int) -> list:
    """Residues 1 <= z <= n-1 coprime to n, ascending."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return [z for z in range(1, n) if math.gcd(z, n) == 1]


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}
