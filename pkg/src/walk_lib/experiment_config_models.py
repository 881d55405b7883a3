from __future__ import annotations

from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, field_validator

from walk_lib.constants import (
    CONFIG_SCHEMA_VERSION,
    DEFAULT_BOUND_HORIZON,
    DEFAULT_N_RANGE,
    INV_SQRT2,
    PACKET_THETAS,
    PACKET_WIDTH,
)
from walk_lib.enums import (
    BarrierKind,
    BoundaryCompletion,
    DecayKind,
    DistributionKind,
    FamilyKind,
    SubsequenceKind,
)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HomogeneousParams(_StrictModel):
    a: float = INV_SQRT2
    a_imag: float = 0.0


class TableParams(_StrictModel):
    """A CSV with columns `n, re_a, im_a, re_b, im_b`; sites not listed get `default_a`."""
    path: Path
    default_a: float = 1.0


class DecayParams(_StrictModel):
    kind: DecayKind = DecayKind.ZERO
    scale: float = 1.0
    power: float = 1.0


class SparseOverlayParams(_StrictModel):
    base_a: float = INV_SQRT2
    decay: DecayParams = Field(default_factory=DecayParams)


class DistributionParams(_StrictModel):
    kind: DistributionKind = DistributionKind.POWER_LAW
    alpha: float = 0.5
    c: float = 1.0
    x0: float = 1.0
    atom_mass: float = 0.0


class RandomParams(_StrictModel):
    distribution: DistributionParams = Field(default_factory=DistributionParams)
    # None picks the stream of the coin key: 1 for c1, 2 for c2
    stream: Optional[NonNegativeInt] = None


class DamanikParams(_StrictModel):
    eta: float = 0.5
    barriers: BarrierKind = BarrierKind.FACTORIAL
    count: PositiveInt = 4


class _CoinSpecBase(_StrictModel):
    seed: Optional[int] = None
    # per-site phases e^{iφ} multiplied into a(n)
    phases: Dict[int, float] = Field(default_factory=dict)


class HomogeneousCoinSpec(_CoinSpecBase):
    kind: Literal["homogeneous"] = "homogeneous"
    params: HomogeneousParams = Field(default_factory=HomogeneousParams)


class TableCoinSpec(_CoinSpecBase):
    kind: Literal["table"] = "table"
    params: TableParams


class SparseOverlayCoinSpec(_CoinSpecBase):
    kind: Literal["sparse-overlay"] = "sparse-overlay"
    params: SparseOverlayParams = Field(default_factory=SparseOverlayParams)


class RandomCoinSpec(_CoinSpecBase):
    kind: Literal["random"] = "random"
    params: RandomParams = Field(default_factory=RandomParams)


class DamanikCoinSpec(_CoinSpecBase):
    kind: Literal["damanik"] = "damanik"
    params: DamanikParams = Field(default_factory=DamanikParams)


CoinSpec = Annotated[
    Union[HomogeneousCoinSpec, TableCoinSpec, SparseOverlayCoinSpec, RandomCoinSpec, DamanikCoinSpec],
    Field(discriminator="kind"),
]


class ModelSpec(_StrictModel):
    c1: CoinSpec = Field(default_factory=HomogeneousCoinSpec)
    c2: CoinSpec = Field(default_factory=HomogeneousCoinSpec)


class SubsequenceParams(_StrictModel):
    step: PositiveInt = 1
    exponent: float = 2.0
    base: int = 2
    sites: List[int] = Field(default_factory=list)


class SubsequenceSpec(_StrictModel):
    kind: SubsequenceKind = SubsequenceKind.ARITHMETIC
    params: SubsequenceParams = Field(default_factory=SubsequenceParams)
    horizon: PositiveInt = DEFAULT_BOUND_HORIZON


class FamilySpec(_StrictModel):
    kind: FamilyKind = FamilyKind.DEFAULT
    packet_width: PositiveInt = PACKET_WIDTH
    thetas: List[float] = Field(default_factory=lambda: list(PACKET_THETAS))


class RandomSpec(_StrictModel):
    distribution: DistributionParams = Field(default_factory=DistributionParams)
    n_max: PositiveInt = 10**5
    t_max: PositiveInt = 2000


class DenseLabSpec(_StrictModel):
    site_lo: int = -64
    site_hi: int = 63
    boundary: BoundaryCompletion = BoundaryCompletion.IDENTITY
    n_values: List[NonNegativeInt] = Field(default_factory=lambda: [0, 1, 2, 3])
    symmetry_t_grid: List[PositiveInt] = Field(default_factory=lambda: [25, 50])
    dump_matrices: bool = False


class ExperimentConfig(_StrictModel):
    """A single experiment; every section except `model` has defaults."""
    schema_version: Literal[1] = CONFIG_SCHEMA_VERSION
    name: str = "experiment"
    model: ModelSpec = Field(default_factory=ModelSpec)
    subsequence: Optional[SubsequenceSpec] = None
    family: FamilySpec = Field(default_factory=FamilySpec)
    t_grid: List[PositiveInt] = Field(default_factory=lambda: [100, 200, 300, 400])
    snapshot_times: List[NonNegativeInt] = Field(default_factory=list)
    n_range: List[NonNegativeInt] = Field(default_factory=lambda: list(DEFAULT_N_RANGE))
    horizon: Optional[PositiveInt] = None
    seeds: List[int] = Field(default_factory=lambda: [0])
    output_dir: Path = Path("results")
    random: Optional[RandomSpec] = None
    dense: DenseLabSpec = Field(default_factory=DenseLabSpec)

    @field_validator("t_grid")
    @classmethod
    def _check_t_grid(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("t_grid must not be empty")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("t_grid must be strictly increasing")
        return value

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("seeds must not be empty")
        return value

    def get_horizon(self) -> int:
        if self.horizon is not None:
            return self.horizon
        if self.subsequence is not None:
            return self.subsequence.horizon
        return DEFAULT_BOUND_HORIZON

    def get_snapshot_times(self) -> List[int]:
        return list(self.snapshot_times) if self.snapshot_times else list(self.t_grid)
