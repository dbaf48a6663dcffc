import os
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


SEED_ENV_VAR = 'BCCLIQUE_SEED'


def default_seed():
    """Seed from the environment, 0 if unset.
    """
    return int(os.environ.get(SEED_ENV_VAR, 0))


class Mode(str, Enum):
    BROADCAST_CONGEST = 'BroadcastCongest'
    BROADCAST_CONGESTED_CLIQUE = 'BroadcastCongestedClique'


class Profile(str, Enum):
    FAITHFUL = 'faithful'
    PRACTICAL = 'practical'


class NetworkConfig(BaseModel):
    """JSON configuration of a simulated network.
    """
    mode: Mode = Mode.BROADCAST_CONGESTED_CLIQUE
    n: int = Field(ge=1)
    # None picks 2*ceil(log2(n+1))
    bandwidth_bits: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default_factory=default_seed)


class ProfileConfig(BaseModel):
    """Constant profile shared by the sparsifier and the LP solver.

    `faithful` keeps every numeric prefactor as stated in the analysis,
    `practical` replaces the large ones by `prefactor`.
    """
    profile: Profile = Profile.PRACTICAL
    prefactor: float = Field(default=10.0, gt=0)
    # rows of the JL sketch are sketch_constant * log(1/delta) / eta^2
    sketch_constant: float = Field(default=8.0, gt=0)
    # largest step, in the local infinity norm, taken by a practical Newton step
    damping: float = Field(default=0.5, gt=0, lt=1)
    # path-following step in the practical profile is step_scale / sqrt(n)
    step_scale: float = Field(default=0.25, gt=0)
    # coarsest precision the weight routines are asked for in the practical profile
    weight_tolerance: float = Field(default=0.1, gt=0, lt=1)
    # warm-started weight update iterations inside one practical centering step
    refresh_iterations: int = Field(default=2, ge=1)

    @property
    def faithful(self):
        return self.profile == Profile.FAITHFUL

    def constant(self, analysis_value):
        """The prefactor to use in place of analysis_value.
        """
        return analysis_value if self.faithful else min(analysis_value, self.prefactor)


class SparsifyConfig(BaseModel):
    epsilon: float = Field(default=0.5, gt=0)
    # t = bundle_constant * log2(n)^2 / epsilon^2; 400 is the faithful value
    bundle_constant: float = Field(default=1.0, gt=0)
    retries: int = Field(default=3, ge=0)


class LPInstanceModel(BaseModel):
    """JSON schema of an LP instance: min c^T x s.t. A^T x = b, l <= x <= u.
    """
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    A: List[Tuple[int, int, float]]
    b: List[float]
    c: List[float]
    l: List[Optional[float]]
    u: List[Optional[float]]
    x0: List[float]

    @field_validator('l', 'u', mode='before')
    @classmethod
    def _infinities(cls, values):
        # JSON has no infinity literal; null or strings stand in for it
        out = []
        for v in values:
            if isinstance(v, str):
                v = float(v)
            out.append(v)
        return out

    @model_validator(mode='after')
    def _shapes(self):
        if len(self.b) != self.n:
            raise ValueError('b must have n={} entries'.format(self.n))
        for name in ('c', 'l', 'u', 'x0'):
            if len(getattr(self, name)) != self.m:
                raise ValueError('{} must have m={} entries'.format(name, self.m))
        for row, col, _ in self.A:
            if not (0 <= row < self.m and 0 <= col < self.n):
                raise ValueError('A entry ({}, {}) out of range'.format(row, col))
        return self

    def bounds(self):
        """Lower and upper bounds as float arrays with +-inf for missing entries.
        """
        lower = np.array([-np.inf if v is None else v for v in self.l], dtype=float)
        upper = np.array([np.inf if v is None else v for v in self.u], dtype=float)
        return lower, upper


class SweepConfig(BaseModel):
    """Grid of a benchmark sweep; every (size, seed, epsilon) cell is one row.
    """
    sizes: List[int] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=lambda: [0])
    epsilons: List[float] = Field(default_factory=lambda: [0.5])
    # spanner stretch parameter, edge probability of the random graphs, cost bound of flow instances
    k: int = Field(default=2, ge=1)
    density: float = Field(default=0.5, gt=0, le=1)
    max_value: int = Field(default=5, ge=1)
    profile: ProfileConfig = Field(default_factory=ProfileConfig)

    @field_validator('sizes', 'seeds', 'epsilons', mode='before')
    @classmethod
    def _comma_separated(cls, values):
        # '8,16,32' on the command line
        if isinstance(values, str):
            return [v for v in values.split(',') if v.strip()]
        return values
