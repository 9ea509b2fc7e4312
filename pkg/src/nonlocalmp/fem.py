"""Uniform 1D P1 finite-element infrastructure.

Meshes are uniform partitions of a computational interval.  For Neumann
runs the computational interval extends beyond the physical domain Omega;
the mesh records which nodes lie inside Omega, and Omega's endpoints
always coincide with mesh nodes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInterval

__all__ = [
    "Mesh",
    "FeFunction",
    "build_mesh",
    "build_extended_mesh",
    "mass_matrix",
    "h1_stiffness_matrix",
    "omega_norm_matrices",
    "interpolate",
    "norms",
    "element_quadrature",
    "step_function",
    "write_function_csv",
    "read_function_csv",
]


@dataclass(frozen=True)
class Mesh:
    """Uniform P1 mesh, possibly extending beyond the physical domain."""

    x_left: float
    x_right: float
    h: float                       # actual spacing, (x_right-x_left)/n_elements
    nodes: np.ndarray
    n_elements: int
    omega: tuple                   # physical domain, endpoints are mesh nodes
    interior_range: tuple          # first/last node index inside omega (inclusive)

    @property
    def n_nodes(self):
        return self.nodes.size

    @property
    def omega_nodes(self):
        lo, hi = self.interior_range
        return np.arange(lo, hi + 1)

    @property
    def omega_elements(self):
        """Indices of elements contained in the physical domain."""
        lo, hi = self.interior_range
        return np.arange(lo, hi)

    @property
    def omega_length(self):
        return self.omega[1] - self.omega[0]


@dataclass
class FeFunction:
    """Piecewise-linear function given by one nodal value per mesh node."""

    mesh: Mesh
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros(self.mesh.n_nodes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError("values length must equal the node count")

    def __call__(self, x):
        """Evaluate by linear interpolation; zero outside the mesh."""
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes,
                         self.values, left=0.0, right=0.0)

    def copy(self):
        return FeFunction(self.mesh, self.values.copy())


def _locate_node(nodes, x, h):
    idx = int(np.argmin(np.abs(nodes - x)))
    if abs(nodes[idx] - x) > 1e-9 * max(h, 1.0):
        raise ValueError(f"domain endpoint {x} does not coincide with a mesh node")
    return idx


def build_mesh(x_left, x_right, h, omega=None):
    """Uniform mesh on [x_left, x_right] with spacing as close to h as possible.

    ``omega``, when given, is the physical sub-domain; its endpoints must land
    on mesh nodes (they are snapped within a 1e-9 relative tolerance).
    """
    length = x_right - x_left
    if h <= 0 or length < 2.0 * h:
        raise DegenerateInterval(
            f"interval [{x_left}, {x_right}] too short for spacing {h}")
    n_elements = int(round(length / h))
    nodes = np.linspace(x_left, x_right, n_elements + 1)
    h_actual = length / n_elements
    if omega is None:
        omega = (x_left, x_right)
    lo = _locate_node(nodes, omega[0], h_actual)
    hi = _locate_node(nodes, omega[1], h_actual)
    return Mesh(x_left, x_right, h_actual, nodes, n_elements,
                (nodes[lo], nodes[hi]), (lo, hi))


def build_extended_mesh(omega, h, extension):
    """Mesh covering omega plus a margin of at least ``extension`` on each side.

    The spacing is fitted to omega first so that omega's endpoints are nodes
    exactly; the margin is then a whole number of elements.
    """
    o_left, o_right = omega
    if h <= 0 or (o_right - o_left) < 2.0 * h:
        raise DegenerateInterval(
            f"domain [{o_left}, {o_right}] too short for spacing {h}")
    if extension <= 0:
        raise ValueError("extension must be positive")
    n_int = int(round((o_right - o_left) / h))
    h_actual = (o_right - o_left) / n_int
    n_ext = int(np.ceil(extension / h_actual - 1e-12))
    n_elements = n_int + 2 * n_ext
    x_left = o_left - n_ext * h_actual
    x_right = o_right + n_ext * h_actual
    nodes = x_left + h_actual * np.arange(n_elements + 1)
    return Mesh(x_left, x_right, h_actual, nodes, n_elements,
                (nodes[n_ext], nodes[n_ext + n_int]), (n_ext, n_ext + n_int))


def _tridiag(n, diag_val, off_val, boundary_val):
    m = np.zeros((n, n))
    i = np.arange(n)
    m[i, i] = diag_val
    m[i[:-1], i[:-1] + 1] = off_val
    m[i[:-1] + 1, i[:-1]] = off_val
    m[0, 0] = boundary_val
    m[-1, -1] = boundary_val
    return m


def mass_matrix(mesh):
    """P1 mass matrix over the full computational interval."""
    h = mesh.h
    return _tridiag(mesh.n_nodes, 2.0 * h / 3.0, h / 6.0, h / 3.0)


def h1_stiffness_matrix(mesh):
    """P1 stiffness matrix (first-derivative energy) over the full interval."""
    h = mesh.h
    return _tridiag(mesh.n_nodes, 2.0 / h, -1.0 / h, 1.0 / h)


def omega_norm_matrices(mesh):
    """Mass and stiffness matrices assembled over omega's elements only.

    Returned matrices are full-size (all mesh nodes); rows and columns of
    nodes outside omega are zero.  Used for the L2(Omega) / H1(Omega) norms.
    """
    n = mesh.n_nodes
    h = mesh.h
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    for e in mesh.omega_elements:
        sl = slice(e, e + 2)
        M[sl, sl] += (h / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
        S[sl, sl] += (1.0 / h) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return M, S


def interpolate(mesh, f, constraint=None):
    """Nodal interpolation of a scalar callable.

    With ``constraint='dirichlet'`` values at and outside the boundary of
    omega are forced to zero.
    """
    values = np.asarray([float(f(x)) for x in mesh.nodes])
    if not np.all(np.isfinite(values)):
        raise ValueError("function is not finite at every node")
    if constraint == "dirichlet":
        lo, hi = mesh.interior_range
        values[: lo + 1] = 0.0
        values[hi:] = 0.0
    return FeFunction(mesh, values)


def step_function(mesh, a, b):
    """Indicator of [a, b): 1 at nodes with a <= x < b, else 0."""
    values = np.where((mesh.nodes >= a) & (mesh.nodes < b), 1.0, 0.0)
    return FeFunction(mesh, values)


def norms(u, M, S):
    """(L2, H1) norms over omega of a FeFunction or nodal vector.

    M and S must be the omega-restricted matrices from
    :func:`omega_norm_matrices`.
    """
    v = u.values if isinstance(u, FeFunction) else np.asarray(u)
    l2sq = float(v @ M @ v)
    h1sq = l2sq + float(v @ S @ v)
    return np.sqrt(max(l2sq, 0.0)), np.sqrt(max(h1sq, 0.0))


def element_quadrature(mesh, order):
    """Gauss-Legendre points and weights on every element.

    Returns ``(X, W, ref_pts, ref_wts)`` where X and W have shape
    (n_elements, order) and the reference rule lives on [0, 1].
    """
    pts, wts = np.polynomial.legendre.leggauss(order)
    ref_pts = 0.5 * (pts + 1.0)
    ref_wts = 0.5 * wts
    left = mesh.nodes[:-1][:, None]
    X = left + mesh.h * ref_pts[None, :]
    W = mesh.h * np.broadcast_to(ref_wts, X.shape).copy()
    return X, W, ref_pts, ref_wts


def write_function_csv(path, u):
    """Two-column CSV (node coordinate, value) with a one-line header."""
    with open(path, "w") as fh:
        fh.write("x,u\n")
        for x, v in zip(u.mesh.nodes, u.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_function_csv(path, mesh):
    """Read nodal values written by :func:`write_function_csv` onto ``mesh``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    if data.shape[0] != mesh.n_nodes:
        raise ValueError(
            f"CSV has {data.shape[0]} rows but the mesh has {mesh.n_nodes} nodes")
    if not np.allclose(data[:, 0], mesh.nodes, atol=1e-9 * max(mesh.h, 1.0)):
        raise ValueError("CSV node coordinates do not match the mesh")
    return FeFunction(mesh, data[:, 1])
