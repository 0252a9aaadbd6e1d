'''
Closed-form scales.

Every catalog entry is radial: it depends on the Euclidean norm r = |x| of
the point, so the same entry describes a scale on R and the radial scale
on R^n. Entries are pydantic models discriminated by "name" so that job
files can name them directly.
'''
from typing import Annotated, List, Literal, Union

import numpy as np
from pydantic import Field, confloat, parse_obj_as, validator

from util.pydantic import PydanticModel
from util.typing import FloatArray


class ClosedForm(PydanticModel):
    name: str

    @property
    def is_radial(self) -> bool:
        return True

    def radial(self, r: FloatArray) -> FloatArray:
        raise NotImplementedError

    def radial_derivative(self, r: FloatArray) -> FloatArray:
        raise NotImplementedError

    def __call__(self, *coords: FloatArray) -> FloatArray:
        r = np.sqrt(sum(np.asarray(c, dtype=np.float64)**2 for c in coords))
        return self.radial(r)


class Polynomial(ClosedForm):
    """sum_k c_k r^k with c_0 >= 1 and c_k >= 0"""
    name: Literal["polynomial"] = "polynomial"
    coefficients: List[confloat(ge=0)]

    @validator("coefficients")
    def check_normalized(cls, v):
        if not v or v[0] < 1:
            raise ValueError("the constant coefficient must be at least 1")
        return v

    def radial(self, r):
        return np.polynomial.polynomial.polyval(r, self.coefficients)

    def radial_derivative(self, r):
        return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(self.coefficients))


class Power(ClosedForm):
    """1 + r^p"""
    name: Literal["power"] = "power"
    p: confloat(gt=0)

    def radial(self, r):
        return 1 + np.power(r, self.p)

    def radial_derivative(self, r):
        return self.p * np.power(r, self.p - 1)


class ExpAbs(ClosedForm):
    """e^(rate*r)"""
    name: Literal["exp_abs"] = "exp_abs"
    rate: confloat(gt=0) = 1.0

    def radial(self, r):
        return np.exp(self.rate * r)

    def radial_derivative(self, r):
        return self.rate * np.exp(self.rate * r)


class Constant(ClosedForm):
    name: Literal["constant"] = "constant"
    value: confloat(ge=1) = 1.0

    def radial(self, r):
        return np.full(np.shape(r), self.value)

    def radial_derivative(self, r):
        return np.zeros(np.shape(r))


class Mollified(ClosedForm):
    """
    sum_k w_k base(x - g_k): a closed form smoothed against lattice
    samples w_k of a bump at offsets g_k.
    """
    name: Literal["mollified"] = "mollified"
    base: "CatalogForm"
    offsets: List[List[float]]
    weights: List[float]

    @property
    def is_radial(self) -> bool:
        return False

    def __call__(self, *coords):
        coords = [np.asarray(c, dtype=np.float64) for c in coords]
        total = np.zeros(np.broadcast(*coords).shape)
        for offset, w in zip(self.offsets, self.weights):
            total = total + w * self.base(*(c - o for c, o in zip(coords, offset)))
        return total


CatalogForm = Annotated[Union[Polynomial, Power, ExpAbs, Constant], Field(discriminator="name")]
AnyClosedForm = Annotated[Union[Polynomial, Power, ExpAbs, Constant, Mollified], Field(discriminator="name")]
Mollified.update_forward_refs(CatalogForm=CatalogForm)


def parse_closed_form(data) -> ClosedForm:
    return parse_obj_as(AnyClosedForm, data)  # type: ignore[arg-type]
