"""
Closed-form profiles used as references by the diagnostics tests.
"""
import numpy as np
import sympy as sp

x = sp.symbols('x', real=True)

# pressure ball at t = 0: σ² = 2 − x², Θ = (σ, 0, 0, 0), σ∂tΘ¹ = x
PRESSURE_BALL_SIGMA2 = 2 - x ** 2

# flat space references
COORDS = sp.symbols('t x y z', real=True)
MINKOWSKI = sp.diag(-1, 1, 1, 1)


def pressure_ball_theta_energy() -> float:
    """∫ |∂tΘ|² + |∂xΘ|² over the slab |x| ≤ 1."""
    sigma = sp.sqrt(PRESSURE_BALL_SIGMA2)
    density = (x / sigma) ** 2 + sp.diff(sigma, x) ** 2
    value = sp.integrate(sp.simplify(density), (x, -1, 1))
    # antiderivatives of 1/(2 − x²) may come back through complex logarithms
    return float(sp.re(value).evalf())


def pressure_ball_taylor() -> float:
    """a² = (∂xσ²)² on the surface x = ±1."""
    return float(sp.diff(PRESSURE_BALL_SIGMA2, x).subs(x, 1) ** 2)


def _phase(rng: np.random.Generator):
    k = rng.normal(size=4)
    return sum(float(c) * q for c, q in zip(k, COORDS)) + float(rng.uniform(0.0, 2.0 * np.pi))


def moving_frame(rng: np.random.Generator, amplitude: float = 0.3) -> sp.Matrix:
    """
    Rows e_I^μ of a smooth orthonormal frame of Minkowski space: a boost
    along x followed by rotations in the (x, y) and (y, z) planes, each
    angle a random plane wave of size ``amplitude``.
    """
    zeta, beta, alpha = (amplitude * sp.sin(_phase(rng)) for _ in range(3))
    boost = sp.Matrix([
        [sp.cosh(zeta), sp.sinh(zeta), 0, 0],
        [sp.sinh(zeta), sp.cosh(zeta), 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ])
    turn_xy = sp.Matrix([
        [1, 0, 0, 0],
        [0, sp.cos(beta), sp.sin(beta), 0],
        [0, -sp.sin(beta), sp.cos(beta), 0],
        [0, 0, 0, 1],
    ])
    turn_yz = sp.Matrix([
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, sp.cos(alpha), sp.sin(alpha)],
        [0, 0, -sp.sin(alpha), sp.cos(alpha)],
    ])
    return turn_yz * turn_xy * boost


def null_wave_potential(rng: np.random.Generator, modes: int = 3, amplitude: float = 0.1):
    """φ = 2t + Σ a sin(|k|t + k·x + c), a solution of □φ = 0."""
    t, *space = COORDS
    phi = 2 * t
    for _ in range(modes):
        k = rng.normal(size=3)
        phase = float(np.linalg.norm(k)) * t + sum(float(c) * q for c, q in zip(k, space))
        phi += amplitude * float(rng.uniform(0.5, 1.0)) * sp.sin(phase + float(rng.uniform(0.0, 2.0 * np.pi)))
    return phi


def gradient_flow(phi) -> list:
    """V^μ = −η^{μν}∂_νφ."""
    return [-MINKOWSKI[m, m] * sp.diff(phi, COORDS[m]) for m in range(4)]


def wiggle(rng: np.random.Generator, amplitude: float = 0.1) -> list:
    """A smooth vector field with no structure, one plane wave per component."""
    return [amplitude * sp.sin(_phase(rng)) for _ in range(4)]


def minkowski_dot(u, v):
    return sum(MINKOWSKI[m, m] * u[m] * v[m] for m in range(4))


def box(u):
    """η^{μν}∂_μ∂_ν u."""
    return sum(MINKOWSKI[m, m] * sp.diff(u, COORDS[m], 2) for m in range(4))


def sample(expr, points: np.ndarray) -> np.ndarray:
    """
    Values of a sympy scalar or array at ``points``.

    :param expr: scalar expression, list, Matrix or Array in :data:`COORDS`
    :param points: (N, 4) rows of (t, x, y, z)
    :return: (N,) + shape of ``expr``
    """
    if isinstance(expr, (sp.NDimArray, sp.MatrixBase, list, tuple)):
        array = sp.Array(expr)
        entries, shape = list(sp.flatten(array.tolist())), array.shape
    else:
        entries, shape = [expr], ()
    func = sp.lambdify(COORDS, entries, 'numpy')
    count = points.shape[0]
    columns = [np.broadcast_to(np.asarray(v, dtype=float), (count,)) for v in func(*points.T)]
    return np.stack(columns, axis=-1).reshape((count,) + tuple(shape))
