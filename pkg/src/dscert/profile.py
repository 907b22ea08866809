"""Numeric thresholds used by the compression lemmas, bundled so desk-scale runs can swap them."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .factored import qparse, qstr
from .intervals import PowerOfTen


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ConstantsProfile:
    name: str = "paper"
    # concentration threshold T in 1 - T/p, and the small/large prime cut B
    sharp_threshold_num: int = 10**40
    small_prime_bound: int = 10**2000
    # quality functional
    density_exponent: int = 10
    trans_exponent: Fraction = Fraction(31, 30)
    # edge-set lemma: (a b)^pigeonexp, 2^(decay |k-l|), constant
    pigeonexp: Fraction = Fraction(9, 10)
    decay: Fraction = Fraction(1, 20)
    edge_set_constant: int = 1000
    # degree bound 9 delta / 10 and the small-prime concentration level
    degree_fraction: Fraction = Fraction(9, 10)
    small_concentration: Fraction = Fraction(9, 10)
    # small-set lemma exponent eta^(9/5)
    small_set_exponent: Fraction = Fraction(9, 5)
    # anatomy / cosmetic constants
    cosmetic_t_min: Fraction = Fraction(300)
    cosmetic_exponent: int = 50
    cosmetic_excess: Fraction = Fraction(1)
    anatomy_in: Fraction = Fraction(10)
    anatomy_mid: Fraction = Fraction(5)
    anatomy_out: Fraction = Fraction(4)
    # loss floors: single small-prime step, small-prime iteration, whole stage (10**-E)
    small_loss_floor: Fraction = Fraction(1, 10**40)
    iteration_floor: Fraction = Fraction(1, 10**50)
    stage_floor_exp10: int = 10**3000

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            if f.type in ("Fraction",) or isinstance(getattr(self, f.name), float):
                object.__setattr__(self, f.name, Fraction(getattr(self, f.name)))
        for name in ("trans_exponent", "pigeonexp", "decay", "degree_fraction", "small_concentration",
                     "small_set_exponent", "cosmetic_t_min", "cosmetic_excess", "anatomy_in",
                     "anatomy_mid", "anatomy_out", "small_loss_floor", "iteration_floor"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        positive = [
            "sharp_threshold_num", "small_prime_bound", "density_exponent", "trans_exponent", "pigeonexp",
            "decay", "edge_set_constant", "degree_fraction", "small_concentration", "small_set_exponent",
            "cosmetic_t_min", "cosmetic_exponent", "cosmetic_excess", "anatomy_in", "anatomy_mid",
            "anatomy_out", "small_loss_floor", "iteration_floor", "stage_floor_exp10",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ProfileError(f"{name} must be strictly positive")
        if self.density_exponent < 2:
            raise ProfileError("density_exponent must be >= 2")
        if self.small_prime_bound <= self.sharp_threshold_num:
            raise ProfileError("small_prime_bound must exceed sharp_threshold_num")
        for name in ("degree_fraction", "small_concentration", "small_loss_floor", "iteration_floor"):
            if getattr(self, name) >= 1:
                raise ProfileError(f"{name} must be < 1")
        if not self.anatomy_in > self.anatomy_mid > self.anatomy_out:
            raise ProfileError("anatomy thresholds must be strictly decreasing")

    # derived --------------------------------------------------------------
    @property
    def stage_floor(self) -> PowerOfTen:
        return PowerOfTen(-self.stage_floor_exp10)

    def concentration_level(self, p: int) -> Fraction:
        """1 - T/p."""
        return 1 - Fraction(self.sharp_threshold_num, p)

    def window_radius(self, p: int) -> int:
        """Smallest r >= 1 with p**r > small_prime_bound."""
        r, acc = 1, p
        while acc <= self.small_prime_bound:
            r += 1
            acc *= p
        return r

    def check_t(self, t: Fraction) -> None:
        """Reject t values for which the N bookkeeping (N <= 2 e log t < t) cannot be carried out."""
        t = Fraction(t)
        if t < self.cosmetic_t_min:
            raise ProfileError(f"t must be >= {self.cosmetic_t_min}")
        if t <= self.small_prime_bound:
            raise ProfileError("t must exceed the small prime bound")
        if 2 * self.cosmetic_exponent * math.log(t) >= t:
            raise ProfileError("profile rejects t with 2*e*log t >= t")

    def to_json(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = qstr(v) if isinstance(v, Fraction) else (v if isinstance(v, str) else str(v))
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ConstantsProfile":
        kw = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            default = f.default
            if isinstance(default, Fraction):
                kw[f.name] = qparse(v)
            elif isinstance(default, int):
                kw[f.name] = int(v)
            else:
                kw[f.name] = v
        return cls(**kw)

    def replace(self, **kw) -> "ConstantsProfile":
        return dataclasses.replace(self, **kw)


PAPER = ConstantsProfile()

SCALED = ConstantsProfile(
    name="scaled",
    sharp_threshold_num=100,
    small_prime_bound=1000,
    cosmetic_excess=Fraction(1, 1000),
    anatomy_in=Fraction(10, 1000),
    anatomy_mid=Fraction(5, 1000),
    anatomy_out=Fraction(4, 1000),
    stage_floor_exp10=20,
)

PROFILES = {"paper": PAPER, "scaled": SCALED}


def resolve_profile(spec: str) -> ConstantsProfile:
    """A profile name or a path to a JSON profile file."""
    if spec in PROFILES:
        return PROFILES[spec]
    try:
        with open(spec, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ProfileError(f"unknown profile {spec!r}") from exc
    return ConstantsProfile.from_json(data)
