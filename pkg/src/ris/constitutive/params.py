from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

MATERIAL_MODES = ("nonsimple", "polyconvex_simple")
PSI_MODELS = ("ogden", "svk")


class ParameterError(ValueError):
    """A model constant violates one of the admissibility constraints."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ModelParams:
    """Constitutive constants and exponents.

    ``psi`` selects the elastic part: ``ogden`` is
    ``a|F|^p + b|cof F|^q + c det^r - d_log ln(det^2) + e_s det^-s``,
    ``svk`` is St. Venant-Kirchhoff with Lame constants ``lame_lambda``,
    ``lame_mu``.  Both are shifted so that ``W(I, 0) = 0``.
    """

    dim: int = 2
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    d_log: float = 1.0
    e_s: float = 0.01
    eps_reg: float = 0.01
    p: float = 4.0
    q: float = 2.0
    r: float = 2.0
    s: float = 4.0
    alpha: float = 4.0
    beta: float = 6.0
    kappa: float = 1.0
    rho0: float = 1.0
    G: float = 1.0
    eps_gamma: float = 0.01
    eps_pen: float = 1e-3
    material_mode: str = "nonsimple"
    psi: str = "ogden"
    lame_lambda: float = 1.0
    lame_mu: float = 1.0
    cn_resolution: int = 64

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def keys(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @property
    def uses_regularization(self) -> bool:
        return self.material_mode == "nonsimple"


def validate(P: ModelParams) -> None:
    d = P.dim
    if d not in (1, 2, 3):
        raise ParameterError("dim", "must be 1, 2 or 3")
    if P.material_mode not in MATERIAL_MODES:
        raise ParameterError("material_mode", f"must be one of {MATERIAL_MODES}")
    if P.psi not in PSI_MODELS:
        raise ParameterError("psi", f"must be one of {PSI_MODELS}")
    if not P.a > 0:
        raise ParameterError("a", "must be positive")
    for key in ("b", "c", "d_log", "e_s"):
        if getattr(P, key) < 0:
            raise ParameterError(key, "must be nonnegative")
    for key in ("eps_reg", "kappa", "rho0", "G", "eps_gamma", "eps_pen"):
        if not getattr(P, key) > 0:
            raise ParameterError(key, "must be positive")
    if P.psi == "svk" and not (P.lame_mu > 0 and P.lame_lambda >= 0):
        raise ParameterError("lame_mu", "St. Venant-Kirchhoff needs lame_mu > 0, lame_lambda >= 0")
    if not P.p > d:
        raise ParameterError("p", f"p must satisfy p > d (d={d})")
    if not P.q > 1:
        raise ParameterError("q", "q must satisfy q > 1")
    if not P.r > 1:
        raise ParameterError("r", "r must satisfy r > 1")
    if P.s < d * P.p / (P.p - d):
        raise ParameterError("s", f"s must be ≥ d·p/(p−d) = {d * P.p / (P.p - d):g}")
    if not P.alpha > d:
        raise ParameterError("alpha", f"alpha must satisfy α > d (d={d})")
    if not P.beta > P.alpha + P.kappa:
        raise ParameterError("beta", "beta must satisfy β > α + κ")
    if P.cn_resolution < 64:
        raise ParameterError("cn_resolution", "must be at least 64 pixels per unit length")
    if P.material_mode == "polyconvex_simple":
        lhs = 1 / P.p + 1 / P.s + 1 / P.alpha
        if lhs > (P.q - 1) / P.q:
            raise ParameterError(
                "alpha", "polyconvex_simple needs 1/p + 1/s + 1/α ≤ (q−1)/q"
            )


def stress_free_d_log(dim: int, a: float, b: float, c: float, e_s: float,
                      p: float, q: float, r: float, s: float) -> float:
    """``d_log`` making the Ogden-type ``psi`` stationary at the identity.

    Obtained from ``d/dl psi(l I)`` at ``l = 1``; isotropy makes the stress at
    ``I`` a multiple of ``I``, so this single condition suffices.
    """
    n = dim
    num = a * p * n ** (p / 2) + b * q * (n - 1) * n ** (q / 2) + c * n * r - e_s * n * s
    return num / (2 * n)
