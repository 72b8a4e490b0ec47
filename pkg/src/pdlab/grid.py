"""Discrete torus [0,2pi)^n: grid/spectral containers, transforms, norms.

Conventions used throughout the package:

  * grid points   x_k = 2*pi*k/N, k in {0,...,N-1}^n
  * frequencies   eta integer vectors, each component in [-N/2, N/2)
  * synthesis     u(x) = sum_eta c_eta e^{i x.eta}

With these choices band-limited quadrature is exact, so identities that
hold for trigonometric polynomials hold here to rounding error.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

_PDGF_MAGIC = b"PDGF"
_PDGF_HEADER = struct.Struct("<4sII4x")  # magic, n, N, 4 reserved bytes


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with N points per axis on the torus [0,2pi)^n."""

    n: int
    N: int

    def __post_init__(self) -> None:
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")

    @property
    def spacing(self) -> float:
        return TWO_PI / self.N

    @property
    def npoints(self) -> int:
        return self.N**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def nyquist_radius(self) -> float:
        # largest |eta| over the representable lattice (corner of the cube)
        return np.sqrt(self.n) * (self.N / 2)

    def axis_coords(self) -> np.ndarray:
        return TWO_PI * np.arange(self.N) / self.N

    def axis_freqs(self) -> np.ndarray:
        """Integer frequencies in shifted layout: index i <-> i - N/2."""
        return np.arange(self.N) - self.N // 2

    def coord_mesh(self) -> tuple[np.ndarray, ...]:
        c = self.axis_coords()
        return np.meshgrid(*([c] * self.n), indexing="ij")

    def freq_mesh(self) -> tuple[np.ndarray, ...]:
        f = self.axis_freqs()
        return np.meshgrid(*([f] * self.n), indexing="ij")

    def freq_radius(self) -> np.ndarray:
        mesh = self.freq_mesh()
        return np.sqrt(sum(m.astype(float) ** 2 for m in mesh))


def _check_values(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.shape == (spec.npoints,):
        arr = arr.reshape(spec.shape)
    if arr.shape != spec.shape:
        raise ValueError(f"expected shape {spec.shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise ValueError("non-finite entries")
    return arr


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _check_values(self.spec, self.values))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, factor) -> "GridFunction":
        return GridFunction(self.spec, self.values * factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralFunction:
    """Fourier coefficients in shifted layout: coeffs[i] at eta = i - N/2."""

    spec: GridSpec
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _check_values(self.spec, self.coeffs))


def fft_forward(u: GridFunction) -> SpectralFunction:
    """Coefficients c_eta with u(x) = sum c_eta e^{i x.eta}, exact on the grid."""
    N = u.spec.N
    c = np.fft.fftshift(np.fft.fftn(u.values)) / N**u.spec.n
    return SpectralFunction(u.spec, c)


def fft_inverse(c: SpectralFunction) -> GridFunction:
    N = c.spec.N
    vals = np.fft.ifftn(np.fft.ifftshift(c.coeffs)) * N**c.spec.n
    return GridFunction(c.spec, vals)


def lp_norm(u: GridFunction, p: float) -> float:
    """Riemann-sum quasi-norm ((2pi/N)^n sum |u|^p)^{1/p}; max for p=inf."""
    if p <= 0:
        raise ValueError("p must be positive")
    a = np.abs(u.values)
    if np.isinf(p):
        return float(a.max())
    cell = (TWO_PI / u.spec.N) ** u.spec.n
    return float((cell * np.sum(a**p)) ** (1.0 / p))


def sobolev_norm(c: SpectralFunction, s: float) -> float:
    """((2pi)^n sum (1+|eta|^2)^s |c_eta|^2)^{1/2}."""
    w = (1.0 + c.spec.freq_radius() ** 2) ** s
    total = np.sum(w * np.abs(c.coeffs) ** 2)
    return float(np.sqrt(TWO_PI**c.spec.n * total))


def single_mode(spec: GridSpec, eta) -> GridFunction:
    """e^{i x.eta} for an integer frequency eta (int for n=1, tuple for n=2)."""
    eta_vec = np.atleast_1d(np.asarray(eta, dtype=int))
    if eta_vec.shape != (spec.n,):
        raise ValueError(f"eta must have {spec.n} components")
    half = spec.N // 2
    if np.any(eta_vec < -half) or np.any(eta_vec >= half):
        raise ValueError(f"frequency {tuple(eta_vec)} outside [-N/2, N/2)")
    mesh = spec.coord_mesh()
    phase = sum(m * e for m, e in zip(mesh, eta_vec))
    return GridFunction(spec, np.exp(1j * phase))


def from_coeffs(spec: GridSpec, coeff_map: dict) -> GridFunction:
    """Build sum c_eta e^{i x.eta} from {eta: c} with integer eta keys."""
    c = np.zeros(spec.shape, dtype=complex)
    half = spec.N // 2
    for eta, val in coeff_map.items():
        idx = tuple(np.atleast_1d(np.asarray(eta, dtype=int)) + half)
        c[idx] = val
    return fft_inverse(SpectralFunction(spec, c))


def random_band_limited(
    spec: GridSpec, radius: float, rng: np.random.Generator
) -> GridFunction:
    """Random complex coefficients supported on |eta| <= radius."""
    mask = spec.freq_radius() <= radius
    c = np.zeros(spec.shape, dtype=complex)
    k = int(mask.sum())
    c[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return fft_inverse(SpectralFunction(spec, c))


def write_pdgf(u: GridFunction, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_PDGF_HEADER.pack(_PDGF_MAGIC, u.spec.n, u.spec.N))
        fh.write(np.ascontiguousarray(u.values, dtype="<c16").tobytes())


def read_pdgf(path) -> GridFunction:
    with open(path, "rb") as fh:
        header = fh.read(_PDGF_HEADER.size)
        if len(header) != _PDGF_HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, n, N = _PDGF_HEADER.unpack(header)
        if magic != _PDGF_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        spec = GridSpec(int(n), int(N))
        raw = fh.read(16 * spec.npoints)
    if len(raw) != 16 * spec.npoints:
        raise ValueError(f"{path}: truncated payload")
    values = np.frombuffer(raw, dtype="<c16").reshape(spec.shape)
    return GridFunction(spec, values.astype(complex))


_JSON_MAX_N = 64


def grid_function_to_json(u: GridFunction) -> str:
    if u.spec.N > _JSON_MAX_N:
        raise ValueError(f"JSON form limited to N <= {_JSON_MAX_N}")
    flat = u.values.ravel()
    return json.dumps(
        {
            "format": "pdgf",
            "n": u.spec.n,
            "N": u.spec.N,
            "re": flat.real.tolist(),
            "im": flat.imag.tolist(),
        }
    )


def grid_function_from_json(text: str) -> GridFunction:
    obj = json.loads(text)
    if obj.get("format") != "pdgf":
        raise ValueError("not a pdgf JSON object")
    spec = GridSpec(int(obj["n"]), int(obj["N"]))
    values = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    return GridFunction(spec, values.reshape(spec.shape))
