import enum


class _LabEnum(str, enum.Enum):
    @classmethod
    def from_str(cls, s: str):
        for member in cls:
            if member.value.lower() == s.lower():
                return member
        raise ValueError(f"'{s}' is not a valid {cls.__name__}")

    def __str__(self) -> str:
        return self.value


class Spin(_LabEnum):
    """Internal degree of freedom of the walker."""
    PLUS = "+"
    MINUS = "-"


class CoinKind(_LabEnum):
    """Enumeration for the coin sequence families."""
    HOMOGENEOUS = "homogeneous"
    TABLE = "table"
    SPARSE_OVERLAY = "sparse-overlay"
    RANDOM = "random"
    DAMANIK = "damanik"


class SubsequenceKind(_LabEnum):
    ARITHMETIC = "arithmetic"
    POWER = "power"
    GEOMETRIC = "geometric"
    EXPLICIT = "explicit"


class DecayKind(_LabEnum):
    """Profiles m ↦ |a(j_m)| along a sparse subsequence."""
    ZERO = "zero"
    CONSTANT = "constant"
    INDEX_POWER = "index-power"
    SITE_POWER = "site-power"


class DistributionKind(_LabEnum):
    POWER_LAW = "power-law"
    UNIFORM = "uniform"
    ATOM = "atom"


class BarrierKind(_LabEnum):
    FACTORIAL = "factorial"
    TOWER = "tower"


class ModifiedPositionKind(_LabEnum):
    TILDE = "tilde"
    HAT = "hat"


class BoundaryCompletion(_LabEnum):
    """How truncated factor blocks cut by the window edge are completed."""
    IDENTITY = "identity"
    PERIODIC = "periodic"


class FamilyKind(_LabEnum):
    DEFAULT = "default"
    DELTA = "delta"
    PACKETS = "packets"


class TheoremCase(_LabEnum):
    """Zero-velocity criteria an instance may satisfy."""
    UNIFORM_GAPS = "i"
    SUBLINEAR_GAPS = "ii"
    GAP_WEIGHTED = "iii"
    RELATIVE_GAPS_POSITIVE = "relative-gaps-positive"
    NO_CONCLUSION = "no-conclusion"
