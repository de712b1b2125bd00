"""Show that the linearised tracing system can have complex eigenvalues.

Prints the characteristic polynomial, its exact discriminant and the
eigenvalues for a hand-picked parameter set, then the share of random
supercritical draws whose spectrum is not real.
"""

import numpy as np
import sympy as sp

from ctseir.checks import random_draws
from ctseir.seir import EpidemicParams
from ctseir.stability import char_poly_coeffs, eigen_stability


def main(draws: int = 10_000):
    p = EpidemicParams(beta=3.0, gamma=1.0, epsilon=1.0, alpha=0.5, theta=1.0, psi=0.5)
    x = sp.symbols("x")
    poly = sum(sp.nsimplify(c) * x**k for k, c in zip(range(4, -1, -1), char_poly_coeffs(p)))
    print("params:", p)
    print("det(xI - A) =", sp.expand(poly))
    print("discriminant =", sp.discriminant(poly, x))
    print("eigenvalues =", eigen_stability(p)[0])
    complex_count = sum(np.abs(eigen_stability(q)[0].imag).max() >= 1e-7 for q in random_draws(draws, 0))
    print(f"complex spectra: {complex_count}/{draws} random draws")


if __name__ == "__main__":
    main()
