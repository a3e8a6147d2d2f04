"""Scenario configuration and shipped presets."""

from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import wavelength
from .modes import FORMULATIONS
from .wire import DipoleSpec


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GroundConfig(_Strict):
    kind: Literal["none", "pec", "lossy"] = "lossy"
    eps_r: complex = complex(16, -16)

    @field_validator("eps_r", mode="before")
    @classmethod
    def _parse_complex(cls, v):
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", "").replace("i", "j"))
        return v


class ImagesConfig(_Strict):
    M: int = Field(5, ge=1, le=12)
    T0: float = Field(5.0, gt=0)
    Ns: int = Field(100, ge=12)


class CouplingConfig(_Strict):
    enabled: bool = False
    K: list[Union[int, Literal["full"]]] = [2, 4, "full"]
    first_order: bool = True
    variant: Literal["derived", "printed"] = "derived"

    @field_validator("K")
    @classmethod
    def _check_k(cls, v):
        for k in v:
            if k != "full" and k < 1:
                raise ValueError("subset sizes must be positive")
        return v


class FieldCutConfig(_Strict):
    name: str = "cut"
    height: float = 0.2            # in the scenario length unit
    x_min: float = -1.0
    x_max: float = 1.0
    points: int = Field(101, ge=2)
    modes: int = Field(5, ge=1)


class Tolerances(_Strict):
    sigma: float = Field(10.0, gt=0)
    psd_tol: float = Field(1e-10, gt=0)


class SweepConfig(_Strict):
    axis: Literal["height", "eps_r", "frequency"]
    values: list[Union[float, complex, str, list[float]]]

    @model_validator(mode="after")
    def _check_values(self):
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        if self.axis == "eps_r":
            vals = [GroundConfig(eps_r=v).eps_r for v in self.values]
            object.__setattr__(self, "values", vals)
        else:
            vals = [float(v) for v in self.values]
            if len(vals) > 1 and not (all(a < b for a, b in zip(vals, vals[1:]))
                                      or all(a > b for a, b in zip(vals, vals[1:]))):
                raise ValueError("sweep values must be strictly monotone")
            object.__setattr__(self, "values", vals)
        return self


class ScenarioConfig(_Strict):
    name: str = "scenario"
    frequency: float = Field(..., gt=0)
    length_L: float = Field(..., gt=0)
    height_h: float = Field(..., gt=0)
    radius_a: float | None = Field(None, gt=0)
    units: Literal["wavelength", "m"] = "wavelength"
    segments_N: int = 41
    ground: GroundConfig = GroundConfig()
    images: ImagesConfig = ImagesConfig()
    formulations: list[Literal["isolated", "pec", "conventional", "proposed"]] = ["isolated", "proposed"]
    n_report: int = Field(5, ge=1)
    coupling: CouplingConfig = CouplingConfig()
    field_cuts: list[FieldCutConfig] = []
    efficiency: bool = False
    tolerances: Tolerances = Tolerances()
    output_dir: str | None = None
    sweep: SweepConfig | None = None

    @model_validator(mode="after")
    def _check(self):
        self.dipole()  # surfaces geometry errors at validation time
        return self

    def scale(self):
        return wavelength(self.frequency) if self.units == "wavelength" else 1.0

    def dipole(self) -> DipoleSpec:
        from .wire import validate_spec

        s = self.scale()
        # the default radius follows the operating wavelength unless given
        a = None if self.radius_a is None else self.radius_a * s
        spec = DipoleSpec(self.length_L * s, self.height_h * s, self.frequency, a, self.segments_N)
        validate_spec(spec)
        return spec

    def with_value(self, axis, value):
        """Copy with one sweep axis set (and the sweep block removed)."""
        upd = {"sweep": None}
        if axis == "height":
            upd["height_h"] = float(value)
        elif axis == "frequency":
            upd["frequency"] = float(value)
        elif axis == "eps_r":
            upd["ground"] = self.ground.model_copy(update={"eps_r": complex(value)})
        else:
            raise ValueError(f"unknown sweep axis {axis!r}")
        return self.model_validate({**self.model_dump(), **_dump(upd)})


def _dump(d):
    return {k: (v.model_dump() if isinstance(v, BaseModel) else v) for k, v in d.items()}


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return ScenarioConfig.model_validate(data)


_F = 1e9
_L_M = 0.15          # half a wavelength at 1 GHz, rounded as in the frequency study
_A_M = wavelength(_F) / 1000

PRESETS = {
    "ground-modes": dict(
        name="ground-modes", frequency=_F, length_L=0.5, height_h=0.25,
        formulations=["isolated", "pec", "proposed"], n_report=4,
    ),
    "all-formulations": dict(
        name="all-formulations", frequency=_F, length_L=0.5, height_h=0.25,
        formulations=["isolated", "pec", "proposed", "conventional"], n_report=4,
    ),
    "coupling-sweep": dict(
        name="coupling-sweep", frequency=_F, length_L=0.5, height_h=0.3,
        formulations=["isolated", "proposed"], n_report=4,
        coupling=dict(enabled=True, K=[2, 4, "full"]),
        sweep=dict(axis="height", values=[0.3, 1.0, 10.0]),
    ),
    "efficiency-sweep": dict(
        name="efficiency-sweep", frequency=_F, length_L=0.5, height_h=0.3,
        formulations=["isolated", "proposed"], efficiency=True,
        sweep=dict(axis="height", values=[0.3, 1.0, 10.0, 300.0]),
    ),
    "field-cut": dict(
        name="field-cut", frequency=_F, length_L=0.5, height_h=0.25,
        formulations=["isolated", "proposed"],
        field_cuts=[dict(name="field-cut", height=0.2, x_min=-1.0, x_max=1.0, points=101, modes=5)],
    ),
    "frequency-sweep": dict(
        name="frequency-sweep", frequency=_F, units="m", length_L=_L_M, height_h=_L_M / 2, radius_a=_A_M,
        formulations=["isolated", "proposed"], n_report=5,
        sweep=dict(axis="frequency", values=[0.7e9 + 0.05e9 * i for i in range(13)]),
    ),
}


def preset(name) -> ScenarioConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return ScenarioConfig.model_validate(PRESETS[name])
